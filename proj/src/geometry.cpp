#include "distrenorm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "distrenorm/errors.hpp"

namespace distrenorm {

namespace {

// Rows of an orthonormal basis of the orthogonal complement of `rows` in R^dim.
LinearMap complement_basis(const LinearMap& rows, int dim) {
  std::vector<std::vector<double>> basis;
  for (int i = 0; i < rows.rows; ++i) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] = rows(i, j);
    basis.push_back(std::move(v));
  }
  LinearMap out(dim - rows.rows, dim);
  int filled = 0;
  for (int e = 0; e < dim && filled < out.rows; ++e) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(e)] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        double dot = 0;
        for (int j = 0; j < dim; ++j) dot += v[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
        for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] -= dot * b[static_cast<std::size_t>(j)];
      }
    double nrm = 0;
    for (double c : v) nrm += c * c;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-8) continue;
    for (auto& c : v) c /= nrm;
    for (int j = 0; j < dim; ++j) out(filled, j) = v[static_cast<std::size_t>(j)];
    basis.push_back(v);
    ++filled;
  }
  return out;
}

class BigDiagonalDistance final : public FunctionNode {
 public:
  BigDiagonalDistance(int n, int d) : n_(n), d_(d) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        LinearMap m(d, n * d);
        for (int a = 0; a < d; ++a) {
          m(a, i * d + a) = 1.0 / std::sqrt(2.0);
          m(a, j * d + a) = -1.0 / std::sqrt(2.0);
        }
        pairs_.push_back(fn::affine_norm(m, std::vector<double>(static_cast<std::size_t>(d), 0.0)));
      }
  }
  int dim() const override { return n_ * d_; }
  double value(std::span<const double> x) const override {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs_) best = std::min(best, p.value(x));
    return best;
  }
  Jet jet(std::span<const double> x, int order) const override {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> vals;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      vals.push_back(pairs_[k].value(x));
      if (vals.back() < best) {
        best = vals.back();
        arg = k;
      }
    }
    if (order > 0) {
      for (std::size_t k = 0; k < vals.size(); ++k)
        if (k != arg && vals[k] - best <= 1e-12 * std::max(1.0, best))
          throw SingularLocusError("big diagonal distance: tie between pairs, not differentiable");
    }
    return pairs_[arg].jet(x, order);
  }

 private:
  int n_, d_;
  std::vector<SmoothFunction> pairs_;
};

}  // namespace

ClosedSet ClosedSet::point(std::vector<double> p) {
  if (p.empty()) throw DomainError("point set needs a positive ambient dimension");
  ClosedSet s;
  s.kind_ = SetKind::Point;
  s.ambient_ = static_cast<int>(p.size());
  s.origin_ = std::move(p);
  s.along_ = LinearMap(0, s.ambient_);
  s.normal_ = LinearMap::identity(s.ambient_);
  return s;
}

ClosedSet ClosedSet::affine_subspace(std::vector<double> base, const std::vector<std::vector<double>>& dirs) {
  const int dim = static_cast<int>(base.size());
  if (dim == 0) throw DomainError("affine subspace needs a positive ambient dimension");
  if (static_cast<int>(dirs.size()) >= dim) throw DomainError("affine subspace must have positive codimension");
  LinearMap along(static_cast<int>(dirs.size()), dim);
  std::vector<std::vector<double>> done;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    if (static_cast<int>(dirs[k].size()) != dim) throw DomainError("affine subspace: direction has wrong dimension");
    auto v = dirs[k];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : done) {
        double dot = 0;
        for (int j = 0; j < dim; ++j) dot += v[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
        for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] -= dot * b[static_cast<std::size_t>(j)];
      }
    double nrm = 0;
    for (double c : v) nrm += c * c;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) throw DomainError("affine subspace: directions are linearly dependent");
    for (auto& c : v) c /= nrm;
    for (int j = 0; j < dim; ++j) along(static_cast<int>(k), j) = v[static_cast<std::size_t>(j)];
    done.push_back(v);
  }
  ClosedSet s;
  s.kind_ = SetKind::AffineSubspace;
  s.ambient_ = dim;
  s.along_ = along;
  s.normal_ = complement_basis(along, dim);
  // Store the base point projected so that origin is the foot of 0's perpendicular.
  s.origin_ = std::move(base);
  return s;
}

ClosedSet ClosedSet::small_diagonal(int n, int d) {
  if (n < 2 || d < 1) throw DomainError("small diagonal needs n >= 2 and d >= 1");
  ClosedSet s;
  s.kind_ = SetKind::SmallDiagonal;
  s.n_ = n;
  s.d_ = d;
  s.ambient_ = n * d;
  s.origin_.assign(static_cast<std::size_t>(n * d), 0.0);
  s.along_ = LinearMap(d, n * d);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < n; ++i) s.along_(a, i * d + a) = 1.0 / std::sqrt(static_cast<double>(n));
  // Helmert contrasts: row (k, a) = (e_1 + ... + e_k - k e_{k+1}) / sqrt(k (k+1)) in the a-th slot.
  s.normal_ = LinearMap((n - 1) * d, n * d);
  for (int k = 1; k < n; ++k) {
    const double c = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
    for (int a = 0; a < d; ++a) {
      const int row = (k - 1) * d + a;
      for (int i = 0; i < k; ++i) s.normal_(row, i * d + a) = c;
      s.normal_(row, k * d + a) = -k * c;
    }
  }
  return s;
}

ClosedSet ClosedSet::big_diagonal(int n, int d) {
  if (n < 2 || d < 1) throw DomainError("big diagonal needs n >= 2 and d >= 1");
  ClosedSet s;
  s.kind_ = SetKind::BigDiagonal;
  s.n_ = n;
  s.d_ = d;
  s.ambient_ = n * d;
  return s;
}

int ClosedSet::codimension() const {
  switch (kind_) {
    case SetKind::Point: return ambient_;
    case SetKind::AffineSubspace:
    case SetKind::SmallDiagonal: return normal_.rows;
    case SetKind::BigDiagonal: return d_;
  }
  return 0;
}

void ClosedSet::check_dim(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != ambient_) throw DomainError("closed set: point has wrong dimension");
}

double ClosedSet::distance(std::span<const double> x) const {
  check_dim(x);
  if (kind_ == SetKind::BigDiagonal) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        double s = 0;
        for (int a = 0; a < d_; ++a) {
          const double v = x[static_cast<std::size_t>(i * d_ + a)] - x[static_cast<std::size_t>(j * d_ + a)];
          s += v * v;
        }
        best = std::min(best, std::sqrt(0.5 * s));
      }
    return best;
  }
  double s = 0;
  for (int r = 0; r < normal_.rows; ++r) {
    double v = 0;
    for (int j = 0; j < ambient_; ++j) v += normal_(r, j) * (x[static_cast<std::size_t>(j)] - origin_[static_cast<std::size_t>(j)]);
    s += v * v;
  }
  return std::sqrt(s);
}

std::vector<double> ClosedSet::project(std::span<const double> x) const {
  check_dim(x);
  if (!linear()) throw CapabilityError("projection onto the big diagonal is not unique");
  std::vector<double> p(origin_);
  for (int r = 0; r < along_.rows; ++r) {
    double v = 0;
    for (int j = 0; j < ambient_; ++j) v += along_(r, j) * (x[static_cast<std::size_t>(j)] - origin_[static_cast<std::size_t>(j)]);
    for (int j = 0; j < ambient_; ++j) p[static_cast<std::size_t>(j)] += v * along_(r, j);
  }
  return p;
}

SmoothFunction ClosedSet::distance_function() const {
  if (kind_ == SetKind::BigDiagonal) return SmoothFunction(std::make_shared<BigDiagonalDistance>(n_, d_));
  auto shift = normal_.apply(origin_);
  for (auto& v : shift) v = -v;
  return fn::affine_norm(normal_, shift);
}

double ClosedSet::distance_lower_bound(const Box& box) const {
  if (box.dim() != ambient_) throw DomainError("closed set: box has wrong dimension");
  if (kind_ == SetKind::Point) {
    double s = 0;
    for (int j = 0; j < ambient_; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double c = std::clamp(origin_[jj], box.lo[jj], box.hi[jj]);
      s += (c - origin_[jj]) * (c - origin_[jj]);
    }
    return std::sqrt(s);
  }
  if (kind_ == SetKind::BigDiagonal) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) best = std::min(best, pair_separation_lower_bound(box, d_, i, j) / std::sqrt(2.0));
    return best;
  }
  if (!box.bounded()) return 0.0;
  auto c = box.center();
  return std::max(0.0, distance(c) - box.half_diagonal());
}

double ClosedSet::distance_upper_bound(const Box& box) const {
  if (!box.bounded()) return std::numeric_limits<double>::infinity();
  auto c = box.center();
  return distance(c) + box.half_diagonal();
}

std::string ClosedSet::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case SetKind::Point: os << "point(dim=" << ambient_ << ")"; break;
    case SetKind::AffineSubspace: os << "affine(dim=" << ambient_ << ",k=" << along_.rows << ")"; break;
    case SetKind::SmallDiagonal: os << "small_diagonal(n=" << n_ << ",d=" << d_ << ")"; break;
    case SetKind::BigDiagonal: os << "big_diagonal(n=" << n_ << ",d=" << d_ << ")"; break;
  }
  return os.str();
}

bool ClosedSet::operator==(const ClosedSet& o) const {
  return kind_ == o.kind_ && ambient_ == o.ambient_ && n_ == o.n_ && d_ == o.d_ && origin_ == o.origin_ &&
         along_.a == o.along_.a && normal_.a == o.normal_.a;
}

double pair_separation_lower_bound(const Box& box, int d, int i, int j) {
  double s = 0;
  for (int a = 0; a < d; ++a) {
    const auto ia = static_cast<std::size_t>(i * d + a), ja = static_cast<std::size_t>(j * d + a);
    const double lo = box.lo[ia] - box.hi[ja];
    const double hi = box.hi[ia] - box.lo[ja];
    double m = 0.0;
    if (lo > 0) m = lo;
    else if (hi < 0) m = -hi;
    s += m * m;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------- pieces

std::string PartitionPiece::label() const {
  std::ostringstream os;
  auto block = [&](const std::vector<int>& b) {
    os << '{';
    for (std::size_t k = 0; k < b.size(); ++k) os << (k ? "," : "") << b[k] + 1;
    os << '}';
  };
  block(first);
  os << '|';
  block(second);
  return os.str();
}

PartitionPiece PartitionPiece::from_label(const std::string& s) {
  auto bar = s.find('|');
  if (bar == std::string::npos) throw DomainError("piece label must look like {1,2}|{3}");
  auto parse = [](std::string t) {
    std::vector<int> out;
    for (auto& c : t)
      if (c == '{' || c == '}' || c == ',') c = ' ';
    std::istringstream is(t);
    int v;
    while (is >> v) out.push_back(v - 1);
    if (!is.eof()) throw DomainError("piece label contains a non-integer entry");
    return out;
  };
  return make_piece(parse(s.substr(0, bar)), parse(s.substr(bar + 1)));
}

PartitionPiece make_piece(std::vector<int> a, std::vector<int> b) {
  if (a.empty() || b.empty()) throw DomainError("partition piece: both blocks must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<int> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t k = 0; k < all.size(); ++k)
    if (all[k] != static_cast<int>(k)) throw DomainError("partition piece: blocks must partition {1..n}");
  if (a.front() != 0) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

double cross_separation(const PartitionPiece& p, std::span<const double> cfg, int d) {
  double best = std::numeric_limits<double>::infinity();
  for (int i : p.first)
    for (int j : p.second) {
      double s = 0;
      for (int a = 0; a < d; ++a) {
        const double v = cfg[static_cast<std::size_t>(i * d + a)] - cfg[static_cast<std::size_t>(j * d + a)];
        s += v * v;
      }
      best = std::min(best, std::sqrt(s));
    }
  return best;
}

bool piece_contains(const PartitionPiece& p, std::span<const double> cfg, int d) {
  return cross_separation(p, cfg, d) > 0.0;
}

bool piece_contains_thresholded(const PartitionPiece& p, std::span<const double> cfg, int d, double sigma0) {
  const double h = ClosedSet::small_diagonal(p.n(), d).distance(cfg);
  if (h == 0.0) return false;
  return cross_separation(p, cfg, d) / h > sigma0;
}

std::vector<PartitionPiece> cover_pieces(int n) {
  if (n < 2) throw DomainError("cover_pieces: n must be at least 2");
  if (n > 16) throw CapabilityError("cover_pieces: n too large");
  std::vector<PartitionPiece> out;
  const unsigned full = (1u << n) - 1;
  for (unsigned mask = 1; mask < full; ++mask) {
    if (!(mask & 1u)) continue;
    PartitionPiece p;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? p.first : p.second).push_back(i);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const PartitionPiece& a, const PartitionPiece& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first < b.first;
  });
  return out;
}

// ---------------------------------------------------------------- partition

namespace {

class OffDiagonalNode final : public FunctionNode {
 public:
  OffDiagonalNode(SmoothFunction f, ClosedSet diag) : f_(std::move(f)), diag_(std::move(diag)) {}
  int dim() const override { return f_.dim(); }
  double value(std::span<const double> x) const override {
    check(x);
    return f_.value(x);
  }
  Jet jet(std::span<const double> x, int order) const override {
    check(x);
    return f_.jet(x, order);
  }

 private:
  void check(std::span<const double> x) const {
    if (diag_.distance(x) == 0.0) throw SingularLocusError("tempered partition: configuration on the small diagonal");
  }
  SmoothFunction f_;
  ClosedSet diag_;
};

}  // namespace

TemperedPartition::TemperedPartition(int n, int d, double sigma0)
    : n_(n), d_(d), sigma0_(sigma0 > 0 ? sigma0 : 1.0 / (4.0 * n)) {
  if (n < 2 || d < 1) throw DomainError("tempered partition needs n >= 2 and d >= 1");
  if (sigma0_ >= 0.5) throw ParameterError("tempered partition: sigma0 must be below 1/2");
  pieces_ = cover_pieces(n);
  const int dim = n * d;
  const auto diag = ClosedSet::small_diagonal(n, d);
  const SmoothFunction inv_h = fn::pow(diag.distance_function(), -1.0);
  const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  SmoothFunction total;
  for (const auto& p : pieces_) {
    SmoothFunction raw;
    for (int i : p.first)
      for (int j : p.second) {
        LinearMap m(d, dim);
        for (int a = 0; a < d; ++a) {
          m(a, i * d + a) = 1.0;
          m(a, j * d + a) = -1.0;
        }
        SmoothFunction ratio = fn::affine_norm(m, zero) * inv_h;
        SmoothFunction s = fn::smoothstep((1.0 / sigma0_) * ratio - fn::constant(dim, 1.0));
        raw = raw ? raw * s : s;
      }
    raw_fns_.push_back(raw);
    total = total ? total + raw : raw;
  }
  const SmoothFunction inv_total = fn::pow(total, -1.0);
  for (const auto& raw : raw_fns_)
    weight_fns_.push_back(SmoothFunction(std::make_shared<OffDiagonalNode>(raw * inv_total, diag)));
}

std::size_t TemperedPartition::index_of(const PartitionPiece& p) const {
  for (std::size_t k = 0; k < pieces_.size(); ++k)
    if (pieces_[k] == p) return k;
  throw DomainError("tempered partition: unknown piece " + p.label());
}

std::vector<double> TemperedPartition::raw_scores(std::span<const double> cfg) const {
  if (static_cast<int>(cfg.size()) != n_ * d_) throw DomainError("tempered partition: wrong configuration size");
  if (ClosedSet::small_diagonal(n_, d_).distance(cfg) == 0.0)
    throw SingularLocusError("tempered partition: configuration on the small diagonal");
  std::vector<double> out;
  for (const auto& f : raw_fns_) out.push_back(f.value(cfg));
  return out;
}

std::vector<double> TemperedPartition::weights(std::span<const double> cfg) const {
  auto raw = raw_scores(cfg);
  double total = 0;
  for (double v : raw) total += v;
  for (auto& v : raw) v /= total;
  return raw;
}

}  // namespace distrenorm
