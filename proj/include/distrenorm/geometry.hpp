#pragma once

#include <string>
#include <vector>

#include "distrenorm/smooth_function.hpp"

namespace distrenorm {

enum class SetKind { Point, AffineSubspace, SmallDiagonal, BigDiagonal };

// Closed singular locus in R^D. Configuration spaces (R^d)^n are flattened
// with coordinate (i, a) at index i*d + a.
class ClosedSet {
 public:
  static ClosedSet point(std::vector<double> p);
  // Directions are orthonormalized; linearly dependent directions are rejected.
  static ClosedSet affine_subspace(std::vector<double> base, const std::vector<std::vector<double>>& directions);
  static ClosedSet small_diagonal(int n, int d);
  static ClosedSet big_diagonal(int n, int d);

  SetKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_; }
  int points() const { return n_; }       // diagonals only
  int point_dim() const { return d_; }    // diagonals only
  int codimension() const;
  bool linear() const { return kind_ != SetKind::BigDiagonal; }

  // Linear sets: x = origin + along^T u + normal^T h with orthonormal rows.
  const std::vector<double>& origin() const { return origin_; }
  const LinearMap& along() const { return along_; }
  const LinearMap& normal() const { return normal_; }

  double distance(std::span<const double> x) const;
  // Nearest point of a linear set.
  std::vector<double> project(std::span<const double> x) const;
  // d(., set) as a smooth-off-the-set function; BigDiagonal jets are piecewise
  // and raise SingularLocusError where two pairs tie.
  SmoothFunction distance_function() const;

  // Bounds on the distance over a box.
  double distance_lower_bound(const Box& box) const;
  double distance_upper_bound(const Box& box) const;

  std::string describe() const;
  bool operator==(const ClosedSet& o) const;

 private:
  void check_dim(std::span<const double> x) const;

  SetKind kind_ = SetKind::Point;
  int ambient_ = 0;
  int n_ = 0;
  int d_ = 0;
  std::vector<double> origin_;
  LinearMap along_;
  LinearMap normal_;
};

// Exact min of |x_i - x_j| over configurations in the box.
double pair_separation_lower_bound(const Box& box, int d, int i, int j);

// Unordered nontrivial partition {first} | {second} of {0..n-1}; first holds vertex 0.
struct PartitionPiece {
  std::vector<int> first;
  std::vector<int> second;

  int n() const { return static_cast<int>(first.size() + second.size()); }
  // 1-based rendering, e.g. "{1,2}|{3}".
  std::string label() const;
  static PartitionPiece from_label(const std::string& s);
  bool operator==(const PartitionPiece& o) const = default;
};

// Canonical form: sorted blocks, vertex 0 in `first`. Throws DomainError on
// overlapping, incomplete or empty blocks.
PartitionPiece make_piece(std::vector<int> a, std::vector<int> b);

// min over cross pairs of |x_i - x_j|
double cross_separation(const PartitionPiece& p, std::span<const double> cfg, int d);
bool piece_contains(const PartitionPiece& p, std::span<const double> cfg, int d);
// sigma = cross_separation / |h| > sigma0, with h the center-of-mass coordinates.
bool piece_contains_thresholded(const PartitionPiece& p, std::span<const double> cfg, int d, double sigma0);

// All 2^(n-1) - 1 pieces ordered by |first|, then lexicographically.
std::vector<PartitionPiece> cover_pieces(int n);

// Smooth partition of unity on (R^d)^n minus the small diagonal, subordinate
// to the cover by pieces. The raw score of a piece is
//   prod_{cross pairs} S((|x_i - x_j| / |h| - sigma0) / sigma0),
// which is 0 once sigma <= sigma0 and 1 once sigma >= 2 sigma0.
class TemperedPartition {
 public:
  TemperedPartition(int n, int d, double sigma0 = 0.0);  // sigma0 <= 0 selects 1/(4n)

  int n() const { return n_; }
  int d() const { return d_; }
  double sigma0() const { return sigma0_; }
  const std::vector<PartitionPiece>& pieces() const { return pieces_; }
  std::size_t index_of(const PartitionPiece& p) const;

  std::vector<double> raw_scores(std::span<const double> cfg) const;
  std::vector<double> weights(std::span<const double> cfg) const;
  const SmoothFunction& weight_function(std::size_t piece) const { return weight_fns_[piece]; }
  const SmoothFunction& weight_function(const PartitionPiece& p) const { return weight_fns_[index_of(p)]; }

 private:
  int n_, d_;
  double sigma0_;
  std::vector<PartitionPiece> pieces_;
  std::vector<SmoothFunction> raw_fns_;
  std::vector<SmoothFunction> weight_fns_;
};

}  // namespace distrenorm
