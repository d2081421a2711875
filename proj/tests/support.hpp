#pragma once

#include <cmath>
#include <vector>

#include "distrenorm/smooth_function.hpp"

namespace distrenorm::testing {

// phi(x1, x2) = A((x1 + x2) / 2) B(x1 - x2) on (R^d)^2 with A, B standard
// bumps of radii ra, rb centered at ca, cb. Under (mean, difference)
// coordinates the Lebesgue measure is preserved, so pairings with kernels of
// |x1 - x2| factor into a mean integral times a 1-D or radial integral.
inline SmoothFunction mean_diff_bump(int d, const std::vector<double>& ca, double ra, const std::vector<double>& cb,
                                     double rb) {
  LinearMap mean(d, 2 * d), diff(d, 2 * d);
  for (int a = 0; a < d; ++a) {
    mean(a, a) = 0.5;
    mean(a, d + a) = 0.5;
    diff(a, a) = 1.0;
    diff(a, d + a) = -1.0;
  }
  std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  auto f = fn::compose_affine(fn::bump(ca, ra), mean, zero) * fn::compose_affine(fn::bump(cb, rb), diff, zero);
  std::vector<double> lo(static_cast<std::size_t>(2 * d)), hi(static_cast<std::size_t>(2 * d));
  for (int a = 0; a < d; ++a) {
    const auto u = static_cast<std::size_t>(a);
    const double w = ra + 0.5 * rb;
    lo[u] = ca[u] + 0.5 * cb[u] - w;
    hi[u] = ca[u] + 0.5 * cb[u] + w;
    lo[u + static_cast<std::size_t>(d)] = ca[u] - 0.5 * cb[u] - w;
    hi[u + static_cast<std::size_t>(d)] = ca[u] - 0.5 * cb[u] + w;
  }
  return fn::with_support(f, Box(lo, hi));
}

// Product of 1-D bumps of a common radius centered at c.
inline SmoothFunction box_bump(const std::vector<double>& c, double r) {
  std::vector<double> radii(c.size(), r);
  return fn::bump_product(c, radii);
}

}  // namespace distrenorm::testing
