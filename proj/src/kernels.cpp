#include "distrenorm/kernels.hpp"

#include <cmath>

namespace distrenorm::kernels {

namespace {
thread_local Policy tl_policy = Policy::Parallel;
thread_local int tl_budget = 0;
}  // namespace

Policy policy() { return tl_policy; }
void set_policy(Policy p) { tl_policy = p; }
int thread_budget() { return tl_budget; }
void set_thread_budget(int n) { tl_budget = n; }

void OrderedAccumulator::add(double v) {
  const double t = sum_ + v;
  if (std::fabs(sum_) >= std::fabs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

double ordered_sum(std::span<const double> v) {
  OrderedAccumulator acc;
  for (double x : v) acc.add(x);
  return acc.value();
}

}  // namespace distrenorm::kernels
