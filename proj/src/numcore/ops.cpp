#include "sme/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sme/error.hpp"
#include "sme/numcore/kernels.hpp"

namespace sme {
namespace {

void require_len(std::string_view what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) +
                     ", got " + std::to_string(got));
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "gelu") return Activation::gelu;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu|tanh|gelu)");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::gelu: return "gelu";
  }
  return "relu";
}

Vector affine_forward(std::span<const double> x, MatrixView w, std::span<const double> b) {
  if (w.cols != x.size()) {
    throw ShapeError("affine_forward: W " + shape_string(w.rows, w.cols) + " vs x of length " +
                     std::to_string(x.size()));
  }
  if (b.size() != w.rows) {
    throw ShapeError("affine_forward: W " + shape_string(w.rows, w.cols) + " vs b of length " +
                     std::to_string(b.size()));
  }
  Vector y(w.rows);
  kernels::active().gemv(w.data.data(), w.rows, w.cols, x.data(), b.data(), y.data());
  return y;
}

AffineGrads affine_backward(std::span<const double> x, MatrixView w,
                            std::span<const double> grad_out) {
  if (w.cols != x.size() || w.rows != grad_out.size()) {
    throw ShapeError("affine_backward: W " + shape_string(w.rows, w.cols) + " vs x of length " +
                     std::to_string(x.size()) + " and grad_out of length " +
                     std::to_string(grad_out.size()));
  }
  AffineGrads g{Vector(w.cols, 0.0), Matrix(w.rows, w.cols), Vector(w.rows, 0.0)};
  affine_backward_accumulate(x, w, grad_out, g.grad_w.mutable_view(), g.grad_b, g.grad_x);
  return g;
}

void affine_backward_accumulate(std::span<const double> x, MatrixView w,
                                std::span<const double> grad_out, MutableMatrixView grad_w,
                                std::span<double> grad_b, std::span<double> grad_x) {
  if (w.cols != x.size() || w.rows != grad_out.size() || grad_w.rows != w.rows ||
      grad_w.cols != w.cols || grad_b.size() != w.rows ||
      (!grad_x.empty() && grad_x.size() != w.cols)) {
    throw ShapeError("affine_backward: inconsistent shapes around W " +
                     shape_string(w.rows, w.cols));
  }
  const auto& k = kernels::active();
  k.ger_acc(grad_out.data(), w.rows, x.data(), w.cols, grad_w.data.data());
  for (std::size_t i = 0; i < w.rows; ++i) grad_b[i] += grad_out[i];
  if (!grad_x.empty()) k.gemv_t_acc(w.data.data(), w.rows, w.cols, grad_out.data(), grad_x.data());
}

Vector activation(std::span<const double> x, Activation kind) {
  Vector y(x.size());
  switch (kind) {
    case Activation::relu:
      std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
      break;
    case Activation::tanh:
      std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::tanh(v); });
      break;
    case Activation::gelu:
      std::transform(x.begin(), x.end(), y.begin(), gelu);
      break;
  }
  return y;
}

Vector activation_backward(std::span<const double> x, std::span<const double> grad_out,
                           Activation kind) {
  require_len("activation_backward", grad_out.size(), x.size());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    switch (kind) {
      case Activation::relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
      case Activation::tanh: {
        const double t = std::tanh(x[i]);
        d = 1.0 - t * t;
        break;
      }
      case Activation::gelu: d = gelu_grad(x[i]); break;
    }
    g[i] = d * grad_out[i];
  }
  return g;
}

Vector softmax(std::span<const double> x) {
  if (x.empty()) throw ShapeError("softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  Vector y(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (double& v : y) v /= sum;
  return y;
}

Vector softmax_backward(std::span<const double> y, std::span<const double> grad_out) {
  if (y.empty()) throw ShapeError("softmax_backward: empty input");
  require_len("softmax_backward", grad_out.size(), y.size());
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += grad_out[i] * y[i];
  Vector g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] * (grad_out[i] - inner);
  return g;
}

namespace {

struct NormStats {
  double mean = 0.0;
  double inv_std = 0.0;
  bool degenerate = false;
};

NormStats norm_stats(std::span<const double> x, double eps) {
  if (x.size() < 2) throw ShapeError("layer_norm: needs at least 2 entries, got " +
                                     std::to_string(x.size()));
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double denom = var + eps;
  if (denom <= 0.0) return {mean, 0.0, true};
  return {mean, 1.0 / std::sqrt(denom), false};
}

}  // namespace

Vector layer_norm(std::span<const double> x, double eps) {
  const NormStats s = norm_stats(x, eps);
  Vector y(x.size(), 0.0);
  if (s.degenerate) return y;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - s.mean) * s.inv_std;
  return y;
}

Vector layer_norm_backward(std::span<const double> x, double eps,
                           std::span<const double> grad_out) {
  require_len("layer_norm_backward", grad_out.size(), x.size());
  const NormStats s = norm_stats(x, eps);
  Vector g(x.size(), 0.0);
  if (s.degenerate) return g;
  const double n = static_cast<double>(x.size());
  double mean_g = 0.0;
  double mean_gx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xhat = (x[i] - s.mean) * s.inv_std;
    mean_g += grad_out[i];
    mean_gx += grad_out[i] * xhat;
  }
  mean_g /= n;
  mean_gx /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xhat = (x[i] - s.mean) * s.inv_std;
    g[i] = s.inv_std * (grad_out[i] - mean_g - xhat * mean_gx);
  }
  return g;
}

}  // namespace sme
