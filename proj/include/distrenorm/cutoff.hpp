#pragma once

#include <limits>
#include <vector>

#include "distrenorm/geometry.hpp"

namespace distrenorm {

// ramp(d; r_in, r_out) = 1 for d <= r_in, 0 for d >= r_out, and
// S((r_out - d) / (r_out - r_in)) in between (S the bump-integral smoothstep).
double ramp_value(double d, double r_in, double r_out);
// Taylor coefficients in d.
std::vector<double> ramp_taylor(double d, double r_in, double r_out, int order);

// x -> ramp(d(x, set); r_in, r_out). The plateau and the zero zone are exact.
SmoothFunction distance_ramp(const ClosedSet& set, double r_in, double r_out);
// 1 - distance_ramp, with the same exactness.
SmoothFunction distance_coramp(const ClosedSet& set, double r_in, double r_out);

// chi_lambda(x) = h(d(x, X) / lambda), h(u) = S((1 - u) / (7/8)):
// exactly 1 for d <= lambda/8 and exactly 0 for d >= lambda.
class CutoffFamily {
 public:
  explicit CutoffFamily(ClosedSet set) : set_(std::move(set)) {}

  const ClosedSet& set() const { return set_; }

  double chi(double lambda, std::span<const double> x) const;
  Jet chi_jet(double lambda, std::span<const double> x, int order) const;
  double beta(double lambda, std::span<const double> x) const { return 1.0 - chi(lambda, x); }

  SmoothFunction chi_function(double lambda) const;
  SmoothFunction beta_function(double lambda) const;

 private:
  ClosedSet set_;
};

void check_lambda(double lambda);

struct IdealDecayReport {
  // +infinity when chi_lambda * phi vanishes on every rung.
  double slope = std::numeric_limits<double>::infinity();
  std::vector<double> lambdas;
  std::vector<double> norms;
};

struct IdealDecayOptions {
  int j_min = 3;
  int j_max = 10;
  int resolution = 201;  // grid points per axis over K ∩ {d <= lambda}
  double vanishing_tol = 1e-10;
};

// Fits the slope of log ||chi_lambda phi||^m_K against log lambda over
// lambda = 2^-j. Requires phi to vanish on the set with all derivatives of
// order < m + n (checked at sampled set points).
IdealDecayReport ideal_decay_check(const CutoffFamily& fam, const SmoothFunction& phi, int m, int n, const Box& k,
                                   const IdealDecayOptions& opt = {});

}  // namespace distrenorm
