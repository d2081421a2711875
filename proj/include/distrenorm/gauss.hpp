#pragma once

#include <vector>

namespace distrenorm {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// Gauss-Legendre rule with n points. Cached; thread-safe.
const GaussRule& gauss_legendre(int n);

// Kronrod extension used by the adaptive 1-D integrator: 15 nodes on [-1,1]
// with Kronrod weights, plus the embedded 7-point Gauss weights
// (zero at the non-Gauss nodes).
struct KronrodRule {
  std::vector<double> nodes;
  std::vector<double> kronrod_weights;
  std::vector<double> gauss_weights;
};
const KronrodRule& gauss_kronrod_15();

}  // namespace distrenorm
