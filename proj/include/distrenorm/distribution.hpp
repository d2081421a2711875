#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distrenorm/cutoff.hpp"
#include "distrenorm/quadrature.hpp"

namespace distrenorm {

// Pointwise density of a distribution that is a function (possibly singular on a set).
using Density = std::function<double(std::span<const double>)>;

class DistributionNode {
 public:
  virtual ~DistributionNode() = default;
  virtual int dim() const = 0;
  // <t, phi>. `min_distance` promises that phi vanishes closer than that to
  // the node's singular set; nodes may use it to skip empty shells.
  virtual double pair(const SmoothFunction& phi, double min_distance) const = 0;
  virtual std::string describe() const = 0;
  // The density when the whole node is a function; used for flattened
  // (Monte Carlo) pairings and direct integration of subtracted test functions.
  virtual std::optional<Density> flat_density() const { return std::nullopt; }
};

class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::shared_ptr<const DistributionNode> n) : node_(std::move(n)) {}

  int dim() const { return node_->dim(); }
  double pair(const SmoothFunction& phi, double min_distance = 0.0) const;
  std::string describe() const { return node_->describe(); }
  std::optional<Density> flat_density() const { return node_->flat_density(); }
  const DistributionNode& node() const { return *node_; }
  const std::shared_ptr<const DistributionNode>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const DistributionNode> node_;
};

// Integration against a locally integrable density, singular at most on `set`.
// With translation_invariant the density depends only on the component normal
// to a linear set, and pairings integrate the test function along the set
// first (Fubini), leaving an integral over R^codim with a point singularity.
struct RegularOptions {
  std::optional<ClosedSet> set;
  bool translation_invariant = false;
  QuadratureSpec spec;
};

class RegularNode final : public DistributionNode {
 public:
  RegularNode(int dim, Density density, RegularOptions opt);

  int dim() const override { return dim_; }
  double pair(const SmoothFunction& phi, double min_distance) const override;
  std::string describe() const override;
  std::optional<Density> flat_density() const override { return density_; }

  const Density& density() const { return density_; }
  const std::optional<ClosedSet>& set() const { return opt_.set; }
  bool translation_invariant() const { return opt_.translation_invariant; }
  const QuadratureSpec& spec() const { return opt_.spec; }
  // Density as a function of the normal coordinate h (translation-invariant case).
  double normal_density(std::span<const double> h) const;

 private:
  int dim_;
  Density density_;
  RegularOptions opt_;
};

Distribution regular(int dim, Density density, RegularOptions opt = {});
// Lebesgue measure (density 1), integrated with `spec`.
Distribution lebesgue(int dim, QuadratureSpec spec = {});
// sum_alpha c_alpha d^alpha delta_location, so <t, phi> = sum c_alpha (-1)^|alpha| d^alpha phi(location).
Distribution point_supported(std::vector<double> location, std::vector<std::pair<std::vector<int>, double>> coeffs);
Distribution sum(std::vector<Distribution> terms);
Distribution scaled(double c, Distribution t);
// psi * t, paired as <t, psi phi>.
Distribution smooth_product(SmoothFunction psi, Distribution t);
// a (x) b on R^{|coords_a| + |coords_b|}; coordinates of the product space are
// split between the factors by the two index lists.
Distribution tensor(Distribution a, Distribution b, std::vector<int> coords_a, std::vector<int> coords_b);

// Access to point-supported coefficients (for reports).
const std::vector<std::pair<std::vector<int>, double>>* point_coefficients(const Distribution& t);

// y -> <b, phi(x_a, y)> as a smooth function of x_a. Jet coefficients are
// pairings of b with the x_a-derivatives of phi.
SmoothFunction partial_pairing(const Distribution& b, const SmoothFunction& phi, std::vector<int> coords_a,
                               std::vector<int> coords_b);

// Flattened pairing: integral of density * phi over the support of phi.
// Requires t.flat_density(); meant for Monte Carlo specs.
double pair_flat(const Distribution& t, const SmoothFunction& phi, const QuadratureSpec& spec);

// Phi(h) = integral over the set directions u of phi(o + E^T u + N^T h), for a
// linear set with along rows E and normal rows N. Values are memoized.
class Marginal {
 public:
  Marginal(const ClosedSet& set, SmoothFunction phi, QuadratureSpec spec);
  ~Marginal();
  Marginal(const Marginal&) = delete;
  Marginal& operator=(const Marginal&) = delete;

  int codim() const { return codim_; }
  // Box in h containing the support of Phi.
  const Box& normal_box() const { return h_box_; }
  double operator()(std::span<const double> h) const;

 private:
  struct Memo;
  ClosedSet set_;
  SmoothFunction phi_;
  QuadratureSpec spec_;
  int codim_ = 0;
  Box u_box_;
  Box h_box_;
  std::unique_ptr<Memo> memo_;
};

// Bounding box of the linear image M (x - shift) of a box.
Box linear_image_box(const LinearMap& m, const Box& b, std::span<const double> shift);

struct GrowthSample {
  double r = 0.0;
  double value = 0.0;
};

// Fit of a blow-up law value ~ C (1 + r^-s) over dyadic shells r = 2^-j.
struct GrowthEstimate {
  double C = 0.0;
  double s = 0.0;
  double raw_slope = 0.0;  // least-squares slope of -log(value) vs log r, before clamping
  double residual = 0.0;   // RMS of the log-log fit
  bool sub_power = false;  // residual above the pure-power threshold (e.g. logarithmic growth)
  std::vector<GrowthSample> samples;
};

struct GrowthOptions {
  int j_min = 2;
  int j_max = 30;
  int resolution = 9;   // grid points per axis (set directions and radius) within a shell
  int directions = 32;  // transverse directions for codimension >= 2
  int samples = 2000;   // random points per shell for non-linear sets
  std::uint64_t seed = 1;
  double sub_power_threshold = 0.05;
};

// Least-squares fit over (r, value) samples with value > 0. Throws
// InsufficientDataError with fewer than 4 usable samples.
GrowthEstimate fit_growth(std::vector<GrowthSample> samples, double sub_power_threshold = 0.05);

// sup_{|nu| <= k} |d^nu f| over shells {r <= d(x, set) <= 2r} within K.
GrowthEstimate growth_fit_function(const SmoothFunction& f, const ClosedSet& set, const Box& k, int order,
                                   const GrowthOptions& opt = {});

// |<t, phi_r>| / ||phi_r||^k for standard bumps phi_r of radius r centered at
// distance 2r from the set, so that d(supp phi_r, set) lies in [r, 3r].
GrowthEstimate growth_fit_distribution(const Distribution& t, const ClosedSet& set, int order,
                                       const GrowthOptions& opt = {});

struct DyadicSeries {
  double base = 0.0;                  // <t, (1 - chi_1) phi>
  std::vector<double> terms;          // <t, (chi_{2^-j} - chi_{2^-j-1}) phi>, j = 0..J
  std::vector<double> partial_sums;   // base + terms[0..j]
  std::vector<double> ratios;         // |terms[j]| / |terms[j-1]| (0 when both vanish)
  bool summable = true;               // false when ratios >= 1 over 5 consecutive terms
  double tail_ratio = 0.0;            // last ratio
  double limit = 0.0;                 // last partial sum plus the geometric tail estimate
};

DyadicSeries dyadic_series(const Distribution& t, const SmoothFunction& phi, const CutoffFamily& fam, int j_max);

}  // namespace distrenorm
