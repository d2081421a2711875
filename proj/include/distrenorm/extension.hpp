#pragma once

#include <limits>
#include <string>
#include <vector>

#include "distrenorm/distribution.hpp"

namespace distrenorm {

inline constexpr int kNoSubtraction = -1;

// Taylor-projection scheme: P phi = (transverse Taylor polynomial of order m
// about the nearest set point) * w, with w = ramp(d(x, set); r_in, r_out).
struct RenormScheme {
  ClosedSet set;
  int order = 0;  // kNoSubtraction for integrable densities
  double r_in = 0.25;
  double r_out = 1.0;

  RenormScheme(ClosedSet s, int m, double rin = 0.25, double rout = 1.0);
  bool subtracts() const { return order != kNoSubtraction; }
  SmoothFunction window() const;
  std::string describe() const;
};

SmoothFunction project_D(const RenormScheme& s, const SmoothFunction& phi);
// phi - P phi; returns phi itself when P phi is identically zero.
SmoothFunction project_I(const RenormScheme& s, const SmoothFunction& phi);

struct LadderSpec {
  int j_min = 2;
  int j_max = 14;
  double lambda(int j) const;
  void validate() const;
};

struct LadderRung {
  int j = 0;
  double lambda = 0.0;
  double F = 0.0;       // <t, beta_lambda I phi>
  double deltaF = 0.0;  // F(lambda_j) - F(lambda_{j-1}); NaN on the first rung
  double ratio = 0.0;   // |deltaF_j| / |deltaF_{j-1}|; NaN where undefined
};

struct ExtensionResult {
  Distribution distribution;
  std::vector<LadderRung> ladder;
  double value = std::numeric_limits<double>::quiet_NaN();         // pairing of the extension
  double direct = std::numeric_limits<double>::quiet_NaN();        // absolutely convergent <t, I phi>
  double extrapolated = std::numeric_limits<double>::quiet_NaN();  // ladder + one-step Richardson tail
  double tail_ratio = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;  // ratios < 0.9 on the last 4 rungs
  bool diverged = false;   // the subtracted integrand is not integrable (order too low)
  bool restricted = false; // phi misses the cutoff region: plain pairing
  std::string diagnostic;
};

// The extension of t along scheme.set: <R t, phi> = lim <t, beta_lambda I phi>,
// evaluated as the absolutely convergent <t, I phi>. Pairings raise
// DivergenceError when the scheme order is below the divergence degree.
Distribution extend(const Distribution& t, const RenormScheme& scheme, LadderSpec ladder = {});

// Scheme and underlying distribution of an extension (nullptr for other nodes).
const RenormScheme* extension_scheme(const Distribution& e);

// Ladder F(2^-j), increments, ratios, Richardson estimate and the pairing value.
ExtensionResult evaluate_extension(const Distribution& extended, const SmoothFunction& phi);

// <t, beta_lambda P phi>; exactly 0 when P phi vanishes identically.
double counterterm_pair(const Distribution& t, const RenormScheme& scheme, double lambda, const SmoothFunction& phi);

struct SchemeDifference {
  Distribution distribution;  // point-supported at the set point
  std::vector<std::pair<std::vector<int>, double>> coefficients;
  double residual = 0.0;  // relative mismatch on the held-out probe
};

// extension_1 - extension_2 as sum_alpha c_alpha d^alpha delta, fitted on
// probes (x - p)^beta / beta! times a plateau. Point sets only. Raises
// InconsistencyError when the held-out residual exceeds `tol`.
SchemeDifference scheme_difference(const Distribution& t, const RenormScheme& s1, const RenormScheme& s2,
                                   double tol = 1e-6);

// Subtraction order for a density with fitted growth exponent s along a set of
// codimension c: NoSubtraction when s < c - 0.1, else max(0, ceil(s - 0.1) - c + 1).
int default_order(double s_fit, int codim);
int default_order(const SmoothFunction& density, const ClosedSet& set, const Box& k);

}  // namespace distrenorm
