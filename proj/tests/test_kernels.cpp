#include "doctest.h"

#include <cmath>
#include <vector>

#include "harvest/kernels.hpp"
#include "harvest/rng.hpp"

using namespace harvest;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("parallel dense kernels agree with the serial reference") {
  Rng rng(42);
  struct Dims {
    std::size_t batch, in, out;
  };
  // Small shapes take the serial branch, large ones the parallel one.
  for (const Dims d : {Dims{1, 3, 2}, Dims{1, 438, 256}, Dims{7, 33, 17}, Dims{512, 256, 256}, Dims{300, 88, 29}}) {
    const auto x = random_vec(rng, d.batch * d.in);
    const auto w = random_vec(rng, d.out * d.in);
    const auto b = random_vec(rng, d.out);
    const auto dy = random_vec(rng, d.batch * d.out);

    std::vector<double> y1(d.batch * d.out), y2(d.batch * d.out);
    kernels::dense_forward(x.data(), d.batch, d.in, w.data(), b.data(), d.out, y1.data());
    kernels::reference::dense_forward(x.data(), d.batch, d.in, w.data(), b.data(), d.out, y2.data());
    CHECK(max_abs_diff(y1, y2) < 1e-12 * std::sqrt(static_cast<double>(d.in)));

    std::vector<double> dx1(d.batch * d.in), dx2(d.batch * d.in);
    std::vector<double> dw1(d.out * d.in, 0.5), dw2(d.out * d.in, 0.5);
    std::vector<double> db1(d.out, 0.25), db2(d.out, 0.25);
    kernels::dense_backward(x.data(), d.batch, d.in, w.data(), d.out, dy.data(), dx1.data(), dw1.data(), db1.data());
    kernels::reference::dense_backward(x.data(), d.batch, d.in, w.data(), d.out, dy.data(), dx2.data(), dw2.data(),
                                       db2.data());
    const double tol = 1e-12 * static_cast<double>(std::max(d.batch, d.out));
    CHECK(max_abs_diff(dx1, dx2) < tol);
    CHECK(max_abs_diff(dw1, dw2) < tol);
    CHECK(max_abs_diff(db1, db2) < tol);

    auto t1 = y1, t2 = y1;
    kernels::tanh_inplace(t1.data(), t1.size());
    kernels::reference::tanh_inplace(t2.data(), t2.size());
    CHECK(max_abs_diff(t1, t2) == 0.0);
    auto g1 = dy, g2 = dy;
    kernels::tanh_backward(t1.data(), g1.data(), g1.size());
    kernels::reference::tanh_backward(t2.data(), g2.data(), g2.size());
    CHECK(max_abs_diff(g1, g2) < 1e-15);
  }
}

TEST_CASE("dense forward on a hand example") {
  const std::vector<double> x{1.0, 2.0, -1.0, 0.5};  // two rows of two
  const std::vector<double> w{1.0, 0.0, 2.0, -1.0, 0.5, 0.5};  // three outputs
  const std::vector<double> b{0.0, 1.0, -1.0};
  std::vector<double> y(6);
  kernels::dense_forward(x.data(), 2, 2, w.data(), b.data(), 3, y.data());
  CHECK(y == std::vector<double>{1.0, 1.0, 0.5, -1.0, -1.5, -1.25});
}
