#include <cmath>

#include "sme/error.hpp"
#include "sme/train/train.hpp"

namespace sme {

double multi_task_loss(const Matrix& predictions, const Matrix& targets, const LossWeights& weights) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("multi_task_loss: predictions " + shape_string(predictions.rows(), predictions.cols()) +
                     " vs targets " + shape_string(targets.rows(), targets.cols()));
  }
  if (predictions.rows() == 0) throw ArgumentError("multi_task_loss: empty batch");
  if (weights.lambda.size() != predictions.cols()) {
    throw ShapeError("multi_task_loss: " + std::to_string(weights.lambda.size()) + " weights for " +
                     std::to_string(predictions.cols()) + " tasks");
  }
  if (!all_finite(predictions.data()) || !all_finite(targets.data())) {
    throw NumericError("multi_task_loss: non-finite input");
  }
  const double inv_b = 1.0 / static_cast<double>(predictions.rows());
  double loss = 0.0;
  for (std::size_t t = 0; t < predictions.cols(); ++t) {
    double mse = 0.0;
    for (std::size_t b = 0; b < predictions.rows(); ++b) {
      const double d = predictions(b, t) - targets(b, t);
      mse += d * d;
    }
    loss += weights.lambda[t] * inv_b * mse;
  }
  return loss;
}

}  // namespace sme
