#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "distrenorm/geometry.hpp"

namespace distrenorm {

enum class QuadratureMethod { Auto, Deterministic, MonteCarlo };

std::string to_string(QuadratureMethod m);
QuadratureMethod quadrature_method_from_string(const std::string& s);

// Hard cap on the number of dyadic shells toward a singular set.
inline constexpr int kMaxShellDepth = 200;

inline constexpr int kDefaultEdgeRefinement = 8;

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_depth = 100;          // dyadic shells toward the singular set
  bool shell_refinement = true;  // off: integrate the support box directly
  bool deterministic = true;     // fixed reduction order (always honored by deterministic rules)
  int max_subdivisions = 4000;   // regions per adaptive integration
  // Cubature regions at the edge of a compactly supported integrand (nodes mixing exact zeros and
  // nonzeros), and their children, are refined until each side is at most 1/edge_refinement of the
  // root box's regardless of the error estimate. 0 disables this.
  int edge_refinement = kDefaultEdgeRefinement;
  QuadratureMethod method = QuadratureMethod::Auto;
  std::uint64_t mc_samples = 100000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimate; standard error for Monte Carlo
  std::uint64_t evaluations = 0;
  bool converged = true;
  int shells = 0;
};

using Integrand = std::function<double(std::span<const double>)>;

// Global adaptive Gauss-Kronrod (7/15) on [a, b].
QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                    double rel_tol, int max_intervals);

// Global adaptive Genz-Malik cubature (degree 7 with embedded degree 5) on a box, dim >= 2.
QuadratureResult integrate_cubature(const Integrand& f, const Box& box, double abs_tol, double rel_tol,
                                    int max_regions, int edge_refinement = kDefaultEdgeRefinement);

// Uniform Monte Carlo on a box with a fixed seed.
QuadratureResult integrate_monte_carlo(const Integrand& f, const Box& box, std::uint64_t samples, std::uint64_t seed);

// Dispatch on dimension and spec: interval rule, cubature, or Monte Carlo.
QuadratureResult integrate_box(const Integrand& f, const Box& box, const QuadratureSpec& spec);

// Integral over `support` of an integrand that may be singular on a linear
// set. The region is mapped to chart coordinates (along the set, radius and
// direction transverse to it) and cut into dyadic radial shells integrated
// from the outside in. The integrand is known to vanish at distance below
// `min_distance`. Raises DivergenceError when shell contributions do not
// decay within spec.max_depth shells.
QuadratureResult integrate_near_set(const Integrand& f, const ClosedSet& set, const Box& support,
                                    const QuadratureSpec& spec, double min_distance = 0.0);

}  // namespace distrenorm
