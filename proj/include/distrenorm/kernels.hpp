#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Index-parallel kernels. Every heavy loop in the library (quadrature cells,
// radial shells, ladder rungs, grid scans) goes through map_indexed, which
// has a serial reference path and an OpenMP path. Results are written per
// index and reduced afterwards in index order, so both paths produce
// bit-identical output.
namespace distrenorm::kernels {

enum class Policy { Serial, Parallel };

// Per-thread settings; the CLI gives each worker its own budget.
Policy policy();
void set_policy(Policy p);
int thread_budget();  // <= 0 means "OpenMP default"
void set_thread_budget(int n);

class ScopedPolicy {
 public:
  explicit ScopedPolicy(Policy p) : saved_(policy()) { set_policy(p); }
  ~ScopedPolicy() { set_policy(saved_); }
  ScopedPolicy(const ScopedPolicy&) = delete;
  ScopedPolicy& operator=(const ScopedPolicy&) = delete;

 private:
  Policy saved_;
};

inline bool in_parallel_region() {
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

template <class F>
auto map_indexed(std::size_t n, F&& f, Policy p) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(n);
  if (p == Policy::Serial || n < 2 || in_parallel_region()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#ifdef _OPENMP
  const int budget = thread_budget();
  const int threads = budget > 0 ? budget : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  // Report the failure the serial loop would have hit first.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

template <class F>
auto map_indexed(std::size_t n, F&& f) {
  return map_indexed(n, std::forward<F>(f), policy());
}

// Neumaier-compensated sum in index order.
double ordered_sum(std::span<const double> v);

class OrderedAccumulator {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace distrenorm::kernels
