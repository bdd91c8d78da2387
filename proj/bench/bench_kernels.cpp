// OpenMP dense kernels against the serial reference at the policy network's
// shapes: single-observation inference and 512-row training minibatches.

#include <benchmark/benchmark.h>

#include <vector>

#include "harvest/kernels.hpp"
#include "harvest/rng.hpp"

namespace {

using namespace harvest;

struct Problem {
  std::size_t batch, in, out;
  std::vector<double> x, w, b, y, dy, dx, dw, db;

  Problem(std::size_t batch_, std::size_t in_, std::size_t out_)
      : batch(batch_), in(in_), out(out_), x(batch * in), w(out * in), b(out), y(batch * out),
        dy(batch * out), dx(batch * in), dw(out * in), db(out) {
    Rng rng(1);
    for (auto* v : {&x, &w, &b, &dy}) {
      for (double& e : *v) e = rng.normal();
    }
  }
};

template <bool Parallel>
void forward(benchmark::State& state) {
  Problem p(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
            static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::dense_forward(p.x.data(), p.batch, p.in, p.w.data(), p.b.data(), p.out, p.y.data());
    } else {
      kernels::reference::dense_forward(p.x.data(), p.batch, p.in, p.w.data(), p.b.data(), p.out, p.y.data());
    }
    benchmark::DoNotOptimize(p.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(p.batch * p.in * p.out));
}

template <bool Parallel>
void backward(benchmark::State& state) {
  Problem p(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
            static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::dense_backward(p.x.data(), p.batch, p.in, p.w.data(), p.out, p.dy.data(), p.dx.data(), p.dw.data(),
                              p.db.data());
    } else {
      kernels::reference::dense_backward(p.x.data(), p.batch, p.in, p.w.data(), p.out, p.dy.data(), p.dx.data(),
                                         p.dw.data(), p.db.data());
    }
    benchmark::DoNotOptimize(p.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * p.batch * p.in * p.out));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({1, 438, 256});   // inference, 60 fruit slots
  b->Args({1, 256, 256});
  b->Args({512, 88, 256});  // training minibatch, 10 fruit slots
  b->Args({512, 256, 256});
}

BENCHMARK(forward<false>)->Name("dense_forward/serial")->Apply(shapes);
BENCHMARK(forward<true>)->Name("dense_forward/openmp")->Apply(shapes);
BENCHMARK(backward<false>)->Name("dense_backward/serial")->Apply(shapes);
BENCHMARK(backward<true>)->Name("dense_backward/openmp")->Apply(shapes);

}  // namespace

BENCHMARK_MAIN();
