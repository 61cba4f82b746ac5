#pragma once

// Forward kernels and their hand-derived reverse passes. All functions are
// pure over their arguments and validate shapes, throwing ShapeError.

#include <span>
#include <string_view>

#include "sme/numcore/matrix.hpp"

namespace sme {

enum class Activation { relu, tanh, gelu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

// y = W x + b
Vector affine_forward(std::span<const double> x, MatrixView w, std::span<const double> b);

struct AffineGrads {
  Vector grad_x;
  Matrix grad_w;
  Vector grad_b;
};

AffineGrads affine_backward(std::span<const double> x, MatrixView w,
                            std::span<const double> grad_out);

// Accumulating form used by the model: grad_w += g x^T, grad_b += g and,
// when grad_x is non-empty, grad_x += W^T g.
void affine_backward_accumulate(std::span<const double> x, MatrixView w,
                                std::span<const double> grad_out, MutableMatrixView grad_w,
                                std::span<double> grad_b, std::span<double> grad_x);

Vector activation(std::span<const double> x, Activation kind);

// Elementwise phi'(x) * grad_out, with x the pre-activation.
Vector activation_backward(std::span<const double> x, std::span<const double> grad_out,
                           Activation kind);

Vector softmax(std::span<const double> x);

// J^T g for y = softmax(x), given y.
Vector softmax_backward(std::span<const double> y, std::span<const double> grad_out);

// Affine-free normalisation to zero mean and unit variance. When the
// variance plus eps is exactly zero the output (and its gradient) is zero.
Vector layer_norm(std::span<const double> x, double eps);
Vector layer_norm_backward(std::span<const double> x, double eps,
                           std::span<const double> grad_out);

}  // namespace sme
