#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "distrenorm/distribution.hpp"
#include "distrenorm/extension.hpp"
#include "distrenorm/geometry.hpp"

namespace distrenorm {

// Fundamental solution of (-Laplacian + m^2) on R^d, d in {1, 2, 3}.
//   d=1: -|r|/2 (m=0), e^{-mr}/(2m)
//   d=2: -ln r/(2 pi) (m=0), K_0(mr)/(2 pi)
//   d=3: e^{-mr}/(4 pi r)
class GreenKernel {
 public:
  GreenKernel(int d, double mass = 0.0);

  int d() const { return d_; }
  double mass() const { return m_; }
  // Radial profile g(r), r > 0.
  double radial(double r) const;
  // g^(k)(r) / k!, k = 0..order.
  std::vector<double> radial_taylor(double r, int order) const;
  // Power-counting blow-up exponent of G^n at the diagonal: n (d - 2) for d = 3, else 0.
  double singular_degree(int power) const;
  std::string describe() const;

 private:
  int d_;
  double m_;
};

double green_eval(const GreenKernel& k, std::span<const double> x, std::span<const double> y);
// Jet in the 2d variables (x, y).
Jet green_jet(const GreenKernel& k, std::span<const double> x, std::span<const double> y, int order);
// G(x_i, x_j)^power on (R^d)^n; vertex blocks are contiguous.
SmoothFunction green_function(const GreenKernel& k, int n, int i, int j, int power = 1);
// x -> G(x, y) on R^d.
SmoothFunction green_function_at(const GreenKernel& k, std::span<const double> y);

struct TemperednessReport {
  int order = 0;
  double exponent = 0.0;   // fitted blow-up exponent of sup-shell |d^beta G|
  double bound = 0.0;      // d + |beta| + 1
  double analytic = 0.0;   // d - 2 + |beta| (d=3, m=0), |beta| (d=2), 0 (d=1)
  bool within_bound = false;
  GrowthEstimate fit;
};

// Growth of G and its derivatives near the diagonal of R^d x R^d.
TemperednessReport green_temperedness_check(const GreenKernel& k, int order, const GrowthOptions& shells = {});

class FeynmanGraph {
 public:
  explicit FeynmanGraph(int n);
  // Upper-triangular multiplicities (n_12, n_13, ..., n_1n, n_23, ...).
  FeynmanGraph(int n, const std::vector<int>& upper);

  int n() const { return n_; }
  int edge(int i, int j) const;
  void set_edge(int i, int j, int mult);
  int total_edges() const;
  // Induced subgraph on the given vertices (kept in the given order).
  FeynmanGraph restrict(const std::vector<int>& vertices) const;
  std::vector<int> upper() const;
  std::string describe() const;

 private:
  int n_;
  std::vector<int> m_;
};

double amplitude_eval(const FeynmanGraph& g, const GreenKernel& k, std::span<const double> cfg);
SmoothFunction amplitude_function(const FeynmanGraph& g, const GreenKernel& k);
// prod over cross pairs of the piece; the constant 1 when there are no cross edges.
SmoothFunction cross_kernel(const FeynmanGraph& g, const GreenKernel& k, const PartitionPiece& piece);

// Extension of the Regular density f * (density of t) along the scheme's set.
// f must have a finite growth fit near the set; t must be Regular.
Distribution renorm_product(const SmoothFunction& f, const Distribution& t, const RenormScheme& scheme,
                            const Box& growth_box, LadderSpec ladder = {});

inline constexpr int kAutoOrder = -2;

// Scheme at one recursion level (vertex-subset size); the set is always the
// small diagonal of the subset.
struct LevelScheme {
  int order = kAutoOrder;  // kAutoOrder: power counting; kNoSubtraction; or m >= 0
  double r_in = 0.25;
  double r_out = 1.0;
};

struct RenormalizeOptions {
  std::map<int, LevelScheme> levels;  // keyed by subset size 2..n; missing sizes use defaults
  QuadratureSpec spec;
  double sigma0 = 0.0;  // tempered partition threshold; <= 0 selects 1/(4n)
  LadderSpec ladder;
};

// Power counting: s = singular_degree(sum of internal edges), codim = (k-1) d;
// NoSubtraction when s < codim, else m = s - codim.
int power_counting_order(const FeynmanGraph& g, const GreenKernel& k);

struct AmplitudeLevel {
  std::uint32_t mask = 0;
  std::vector<int> vertices;
  int order = kNoSubtraction;
  int required = kNoSubtraction;  // power-counting order
  std::string description;
};

struct AmplitudeResult {
  double value = 0.0;
  bool diverged = false;
  std::string diagnostic;
  ExtensionResult top;  // ladder of the outermost extension (deterministic specs only)
};

// Recursively renormalized amplitude R_n(G_n). Sub-amplitudes R_J are built
// once at construction, keyed by vertex subset, and only read afterwards.
class AmplitudeDistribution {
 public:
  AmplitudeDistribution(FeynmanGraph g, GreenKernel k, RenormalizeOptions opt);

  const FeynmanGraph& graph() const { return g_; }
  const GreenKernel& kernel() const { return k_; }
  const RenormalizeOptions& options() const { return opt_; }
  const TemperedPartition& partition() const { return partition_; }
  const Distribution& full() const { return sub(full_mask()); }
  // R_J on (R^d)^|J| with vertices of J in increasing order.
  const Distribution& sub(std::uint32_t mask) const;
  const std::vector<AmplitudeLevel>& levels() const { return levels_; }
  std::uint32_t full_mask() const { return (1u << g_.n()) - 1u; }

  // (R_I1 (x) R_I2) G_{I1,I2} for a piece of the full vertex set.
  Distribution factorized(const PartitionPiece& piece) const;

  // Pairing with the full amplitude. Monte Carlo specs integrate the flattened density.
  double pair(const SmoothFunction& phi) const;
  double pair_factorized(const PartitionPiece& piece, const SmoothFunction& phi, std::uint64_t seed_offset = 0) const;
  // Pairing with ladder diagnostics; DivergenceError at any level becomes diverged = true.
  // A level whose order is below its power-counting order and whose diagonal
  // meets supp phi is reported as diverged without quadrature.
  AmplitudeResult evaluate(const SmoothFunction& phi) const;

 private:
  Distribution build(std::uint32_t mask);
  int level_order(const FeynmanGraph& sub_graph, int size) const;

  FeynmanGraph g_;
  GreenKernel k_;
  RenormalizeOptions opt_;
  TemperedPartition partition_;
  std::map<std::uint32_t, Distribution> memo_;
  std::vector<AmplitudeLevel> levels_;
};

AmplitudeDistribution renormalize(const FeynmanGraph& g, const GreenKernel& k, RenormalizeOptions opt = {});

struct FactorizationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

inline constexpr double kResidualFloor = 1e-14;
double relative_residual(double a, double b);

// LHS = <R_n, phi>, RHS = <(R_I1 (x) R_I2) G_{I1,I2}, phi>. PreconditionError
// when supp phi meets a cross-coincidence locus of the piece.
FactorizationReport factorization_check(const AmplitudeDistribution& a, const PartitionPiece& piece,
                                        const SmoothFunction& phi);

// Residual between the factorized pairings of two pieces. DomainError when no
// point of supp phi lies in both thresholded pieces.
FactorizationReport consistency_check(const AmplitudeDistribution& a, const PartitionPiece& p1,
                                      const PartitionPiece& p2, const SmoothFunction& phi);

}  // namespace distrenorm
