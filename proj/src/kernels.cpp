#include "harvest/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace harvest::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

using Index = std::ptrdiff_t;

}  // namespace

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y) {
  const bool par = batch * in * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index r = 0; r < static_cast<Index>(batch); ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * in;
    double* yr = y + static_cast<std::size_t>(r) * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc + b[o];
    }
  }
}

void dense_backward(const double* x, std::size_t batch, std::size_t in, const double* w,
                    std::size_t out, const double* dy, double* dx, double* dw, double* db) {
  const bool par = batch * in * out >= kParallelWork;
  // Each thread owns whole rows of dW, so no reduction across threads.
#pragma omp parallel for schedule(static) if (par)
  for (Index o = 0; o < static_cast<Index>(out); ++o) {
    double* dwo = dw + static_cast<std::size_t>(o) * in;
    double bias = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      const double g = dy[r * out + static_cast<std::size_t>(o)];
      if (g == 0.0) continue;
      bias += g;
      const double* xr = x + r * in;
#pragma omp simd
      for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
    }
    db[o] += bias;
  }
  if (!dx) return;
#pragma omp parallel for schedule(static) if (par)
  for (Index r = 0; r < static_cast<Index>(batch); ++r) {
    double* dxr = dx + static_cast<std::size_t>(r) * in;
    for (std::size_t i = 0; i < in; ++i) dxr[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[static_cast<std::size_t>(r) * out + o];
      if (g == 0.0) continue;
      const double* wo = w + o * in;
#pragma omp simd
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
    }
  }
}

void tanh_inplace(double* v, std::size_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (Index i = 0; i < static_cast<Index>(n); ++i) v[i] = std::tanh(v[i]);
}

void tanh_backward(const double* y, double* dy, std::size_t n) {
#pragma omp parallel for simd schedule(static) if (n >= kParallelWork)
  for (Index i = 0; i < static_cast<Index>(n); ++i) dy[i] *= 1.0 - y[i] * y[i];
}

namespace reference {

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y) {
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
      y[r * out + o] = acc;
    }
  }
}

void dense_backward(const double* x, std::size_t batch, std::size_t in, const double* w,
                    std::size_t out, const double* dy, double* dx, double* dw, double* db) {
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[r * out + o];
      db[o] += g;
      for (std::size_t i = 0; i < in; ++i) dw[o * in + i] += g * x[r * in + i];
    }
  }
  if (!dx) return;
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[r * out + o] * w[o * in + i];
      dx[r * in + i] = acc;
    }
  }
}

void tanh_inplace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
}

void tanh_backward(const double* y, double* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dy[i] *= 1.0 - y[i] * y[i];
}

}  // namespace reference

}  // namespace harvest::kernels
