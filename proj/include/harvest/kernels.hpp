#pragma once

// Dense-layer kernels for the policy network. Matrices are row-major; a
// layer's weights are stored [out][in]. The default versions use OpenMP over
// rows; `reference` holds plain serial loops used to check them.

#include <cstddef>

namespace harvest::kernels {

/// Y[B][out] = X[B][in] * W^T + b.
void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y);

/// Accumulates dW += dY^T X and db += colsum(dY); writes dX = dY W when
/// dx is non-null.
void dense_backward(const double* x, std::size_t batch, std::size_t in, const double* w,
                    std::size_t out, const double* dy, double* dx, double* dw, double* db);

void tanh_inplace(double* v, std::size_t n);

/// dy *= 1 - y^2, with y the tanh output.
void tanh_backward(const double* y, double* dy, std::size_t n);

namespace reference {
void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y);
void dense_backward(const double* x, std::size_t batch, std::size_t in, const double* w,
                    std::size_t out, const double* dy, double* dx, double* dw, double* db);
void tanh_inplace(double* v, std::size_t n);
void tanh_backward(const double* y, double* dy, std::size_t n);
}  // namespace reference

}  // namespace harvest::kernels
