// Serial reference vs OpenMP kernels. Argument 0 selects the policy (0 serial, 1 parallel).
#include <cmath>
#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "distrenorm/extension.hpp"
#include "distrenorm/feynman.hpp"
#include "distrenorm/kernels.hpp"

using namespace distrenorm;

namespace {

kernels::Policy policy_arg(const benchmark::State& st) {
  return st.range(0) == 0 ? kernels::Policy::Serial : kernels::Policy::Parallel;
}

void label(benchmark::State& st) { st.SetLabel(st.range(0) == 0 ? "serial" : "parallel"); }

// Raw map_indexed over bump evaluations on a grid.
void BM_MapIndexedGrid(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(1));
  const auto phi = fn::bump(std::vector<double>{0.1, -0.2, 0.05}, 1.0);
  const auto p = policy_arg(st);
  for (auto _ : st) {
    auto v = kernels::map_indexed(
        n,
        [&](std::size_t i) {
          const double t = static_cast<double>(i) / static_cast<double>(n);
          const std::vector<double> x{std::cos(7 * t), std::sin(5 * t), t - 0.5};
          return phi.value(x);
        },
        p);
    benchmark::DoNotOptimize(kernels::ordered_sum(v));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
  label(st);
}
BENCHMARK(BM_MapIndexedGrid)->ArgsProduct({{0, 1}, {1 << 12, 1 << 16}})->Unit(benchmark::kMicrosecond);

// Shell-batched pairing of the 3-D Green function with (-Laplacian) of a bump.
void BM_GreenPairing(benchmark::State& st) {
  kernels::ScopedPolicy scope(policy_arg(st));
  const std::vector<double> y{0.25, 0.0, 0.0};
  const auto g = green_function_at(GreenKernel(3, 0.0), y);
  RegularOptions o;
  o.set = ClosedSet::point(y);
  const auto t = regular(3, [g](std::span<const double> x) { return g.value(x); }, o);
  const auto h = fn::helmholtz(fn::bump(std::vector<double>{0.2, 0.0, 0.0}, 1.0), 0.0);
  for (auto _ : st) benchmark::DoNotOptimize(t.pair(h));
  label(st);
}
BENCHMARK(BM_GreenPairing)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Rung-parallel ladder of an order-0 extension of 1/|x|.
void BM_ExtensionLadder(benchmark::State& st) {
  kernels::ScopedPolicy scope(policy_arg(st));
  RegularOptions o;
  o.set = ClosedSet::point({0.0});
  const auto t = regular(1, [](std::span<const double> x) { return 1.0 / std::fabs(x[0]); }, o);
  const auto e = extend(t, RenormScheme(ClosedSet::point({0.0}), 0));
  const auto phi = fn::bump(std::vector<double>{0.2}, 0.7);
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_extension(e, phi).value);
  label(st);
}
BENCHMARK(BM_ExtensionLadder)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
