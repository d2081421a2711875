#include "distrenorm/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "distrenorm/errors.hpp"
#include "distrenorm/kernels.hpp"

namespace distrenorm {

namespace {

Box require_compact(const SmoothFunction& phi) {
  auto b = phi.support();
  if (!b || !b->bounded()) throw DomainError("test function must have a declared compact support");
  return *b;
}

Box project_box(const Box& b, std::span<const int> coords) {
  std::vector<double> lo, hi;
  for (int c : coords) {
    lo.push_back(b.lo[static_cast<std::size_t>(c)]);
    hi.push_back(b.hi[static_cast<std::size_t>(c)]);
  }
  return Box(std::move(lo), std::move(hi));
}

void check_coords(int total, const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != total) throw DomainError("tensor: coordinate lists must partition the space");
  for (int i = 0; i < total; ++i)
    if (all[static_cast<std::size_t>(i)] != i) throw DomainError("tensor: coordinate lists must partition the space");
}

class LebesgueNode final : public DistributionNode {
 public:
  LebesgueNode(int dim, QuadratureSpec spec) : dim_(dim), spec_(spec) {}
  int dim() const override { return dim_; }
  double pair(const SmoothFunction& phi, double) const override {
    return integrate_box([&](std::span<const double> x) { return phi.value(x); }, require_compact(phi), spec_).value;
  }
  std::string describe() const override { return "lebesgue(" + std::to_string(dim_) + ")"; }
  std::optional<Density> flat_density() const override {
    return Density([](std::span<const double>) { return 1.0; });
  }

 private:
  int dim_;
  QuadratureSpec spec_;
};

class PointSupportedNode final : public DistributionNode {
 public:
  PointSupportedNode(std::vector<double> loc, std::vector<std::pair<std::vector<int>, double>> coeffs)
      : loc_(std::move(loc)), coeffs_(std::move(coeffs)) {
    if (loc_.empty()) throw DomainError("point-supported distribution needs a location");
    for (const auto& [alpha, c] : coeffs_) {
      if (alpha.size() != loc_.size()) throw DomainError("point-supported: multi-index has wrong dimension");
      int deg = 0;
      for (int a : alpha) {
        if (a < 0) throw DomainError("point-supported: negative multi-index");
        deg += a;
      }
      order_ = std::max(order_, deg);
      if (!std::isfinite(c)) throw DomainError("point-supported: non-finite coefficient");
    }
  }
  int dim() const override { return static_cast<int>(loc_.size()); }
  double pair(const SmoothFunction& phi, double) const override {
    if (coeffs_.empty()) return 0.0;
    const Jet j = phi.jet(loc_, order_);
    double s = 0.0;
    for (const auto& [alpha, c] : coeffs_) {
      int deg = 0;
      for (int a : alpha) deg += a;
      s += c * ((deg % 2) ? -1.0 : 1.0) * j.derivative(alpha);
    }
    return s;
  }
  std::string describe() const override { return "point_supported(order=" + std::to_string(order_) + ")"; }
  const auto& coefficients() const { return coeffs_; }

 private:
  std::vector<double> loc_;
  std::vector<std::pair<std::vector<int>, double>> coeffs_;
  int order_ = 0;
};

class SumNode final : public DistributionNode {
 public:
  explicit SumNode(std::vector<Distribution> t) : terms_(std::move(t)) {
    if (terms_.empty()) throw DomainError("sum of no distributions");
    for (const auto& s : terms_)
      if (s.dim() != terms_[0].dim()) throw DomainError("sum: dimension mismatch");
  }
  int dim() const override { return terms_[0].dim(); }
  double pair(const SmoothFunction& phi, double md) const override {
    kernels::OrderedAccumulator acc;
    for (const auto& t : terms_) acc.add(t.pair(phi, md));
    return acc.value();
  }
  std::string describe() const override {
    std::string s = "sum(";
    for (std::size_t i = 0; i < terms_.size(); ++i) s += (i ? "," : "") + terms_[i].describe();
    return s + ")";
  }
  std::optional<Density> flat_density() const override {
    std::vector<Density> ds;
    for (const auto& t : terms_) {
      auto d = t.flat_density();
      if (!d) return std::nullopt;
      ds.push_back(std::move(*d));
    }
    return Density([ds](std::span<const double> x) {
      double s = 0.0;
      for (const auto& d : ds) s += d(x);
      return s;
    });
  }

 private:
  std::vector<Distribution> terms_;
};

class ScaledNode final : public DistributionNode {
 public:
  ScaledNode(double c, Distribution t) : c_(c), t_(std::move(t)) {}
  int dim() const override { return t_.dim(); }
  double pair(const SmoothFunction& phi, double md) const override { return c_ == 0.0 ? 0.0 : c_ * t_.pair(phi, md); }
  std::string describe() const override {
    std::ostringstream os;
    os << "scaled(" << c_ << "," << t_.describe() << ")";
    return os.str();
  }
  std::optional<Density> flat_density() const override {
    auto d = t_.flat_density();
    if (!d) return std::nullopt;
    return Density([c = c_, d = *d](std::span<const double> x) { return c * d(x); });
  }

 private:
  double c_;
  Distribution t_;
};

class SmoothProductNode final : public DistributionNode {
 public:
  SmoothProductNode(SmoothFunction psi, Distribution t) : psi_(std::move(psi)), t_(std::move(t)) {
    if (psi_.dim() != t_.dim()) throw DomainError("smooth product: dimension mismatch");
  }
  int dim() const override { return t_.dim(); }
  double pair(const SmoothFunction& phi, double md) const override { return t_.pair(psi_ * phi, md); }
  std::string describe() const override { return "smooth_product(" + t_.describe() + ")"; }
  std::optional<Density> flat_density() const override {
    auto d = t_.flat_density();
    if (!d) return std::nullopt;
    return Density([psi = psi_, d = *d](std::span<const double> x) {
      const double p = psi.value(x);
      return p == 0.0 ? 0.0 : p * d(x);
    });
  }

 private:
  SmoothFunction psi_;
  Distribution t_;
};

// phi with the coordinates outside `free` frozen at `base`.
class SliceNode final : public FunctionNode {
 public:
  SliceNode(SmoothFunction phi, std::vector<double> base, std::vector<int> free)
      : phi_(std::move(phi)), base_(std::move(base)), free_(std::move(free)) {
    if (auto b = phi_.support()) support_ = project_box(*b, free_);
  }
  int dim() const override { return static_cast<int>(free_.size()); }
  double value(std::span<const double> y) const override {
    auto x = fill(y);
    return phi_.value(x);
  }
  Jet jet(std::span<const double> y, int order) const override {
    auto x = fill(y);
    LinearMap m(static_cast<int>(base_.size()), dim());
    for (int j = 0; j < dim(); ++j) m(free_[static_cast<std::size_t>(j)], j) = 1.0;
    return phi_.jet(x, order).substitute_linear(m);
  }
  std::optional<Box> support() const override { return support_; }
  bool is_zero() const override { return phi_.is_zero(); }

 private:
  std::vector<double> fill(std::span<const double> y) const {
    auto x = base_;
    for (std::size_t j = 0; j < free_.size(); ++j) x[static_cast<std::size_t>(free_[j])] = y[j];
    return x;
  }
  SmoothFunction phi_;
  std::vector<double> base_;
  std::vector<int> free_;
  std::optional<Box> support_;
};

class PartialPairingNode final : public FunctionNode {
 public:
  PartialPairingNode(Distribution b, SmoothFunction phi, std::vector<int> ca, std::vector<int> cb)
      : b_(std::move(b)), phi_(std::move(phi)), ca_(std::move(ca)), cb_(std::move(cb)) {
    if (auto s = phi_.support()) support_ = project_box(*s, ca_);
  }
  int dim() const override { return static_cast<int>(ca_.size()); }
  double value(std::span<const double> x) const override { return b_.pair(slice(phi_, x)); }
  Jet jet(std::span<const double> x, int order) const override {
    const auto& table = MultiIndexTable::get(dim(), order);
    Jet out(dim(), order);
    auto coeffs = out.taylor();
    const int total = static_cast<int>(ca_.size() + cb_.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
      auto e = table.exponents(r);
      std::vector<int> alpha(static_cast<std::size_t>(total), 0);
      for (std::size_t i = 0; i < ca_.size(); ++i) alpha[static_cast<std::size_t>(ca_[i])] = e[i];
      const SmoothFunction d = r == 0 ? phi_ : fn::derivative(phi_, alpha);
      coeffs[r] = b_.pair(slice(d, x)) / table.factorial(r);
    }
    return out;
  }
  std::optional<Box> support() const override { return support_; }
  bool is_zero() const override { return phi_.is_zero(); }

 private:
  SmoothFunction slice(const SmoothFunction& f, std::span<const double> x) const {
    std::vector<double> base(ca_.size() + cb_.size(), 0.0);
    for (std::size_t i = 0; i < ca_.size(); ++i) base[static_cast<std::size_t>(ca_[i])] = x[i];
    return SmoothFunction(std::make_shared<SliceNode>(f, std::move(base), cb_));
  }
  Distribution b_;
  SmoothFunction phi_;
  std::vector<int> ca_, cb_;
  std::optional<Box> support_;
};

class TensorNode final : public DistributionNode {
 public:
  TensorNode(Distribution a, Distribution b, std::vector<int> ca, std::vector<int> cb)
      : a_(std::move(a)), b_(std::move(b)), ca_(std::move(ca)), cb_(std::move(cb)) {
    if (static_cast<int>(ca_.size()) != a_.dim() || static_cast<int>(cb_.size()) != b_.dim())
      throw DomainError("tensor: coordinate lists do not match factor dimensions");
    check_coords(a_.dim() + b_.dim(), ca_, cb_);
  }
  int dim() const override { return a_.dim() + b_.dim(); }
  double pair(const SmoothFunction& phi, double) const override {
    return a_.pair(partial_pairing(b_, phi, ca_, cb_));
  }
  std::string describe() const override { return "tensor(" + a_.describe() + "," + b_.describe() + ")"; }
  std::optional<Density> flat_density() const override {
    auto da = a_.flat_density();
    auto db = b_.flat_density();
    if (!da || !db) return std::nullopt;
    return Density([da = *da, db = *db, ca = ca_, cb = cb_](std::span<const double> x) {
      std::vector<double> xa(ca.size()), xb(cb.size());
      for (std::size_t i = 0; i < ca.size(); ++i) xa[i] = x[static_cast<std::size_t>(ca[i])];
      for (std::size_t i = 0; i < cb.size(); ++i) xb[i] = x[static_cast<std::size_t>(cb[i])];
      const double va = da(xa);
      return va == 0.0 ? 0.0 : va * db(xb);
    });
  }

 private:
  Distribution a_, b_;
  std::vector<int> ca_, cb_;
};

}  // namespace

double Distribution::pair(const SmoothFunction& phi, double min_distance) const {
  if (!node_) throw DomainError("empty distribution");
  if (phi.dim() != node_->dim()) throw DomainError("test function dimension does not match the distribution");
  if (phi.is_zero()) return 0.0;
  return node_->pair(phi, min_distance);
}

RegularNode::RegularNode(int dim, Density density, RegularOptions opt)
    : dim_(dim), density_(std::move(density)), opt_(std::move(opt)) {
  if (dim_ < 1) throw DomainError("regular distribution needs a positive dimension");
  if (opt_.set && opt_.set->ambient_dim() != dim_) throw DomainError("regular distribution: set has wrong dimension");
  if (opt_.translation_invariant && (!opt_.set || !opt_.set->linear()))
    throw DomainError("translation invariance needs a linear singular set");
  opt_.spec.validate();
}

double RegularNode::normal_density(std::span<const double> h) const {
  const auto& s = *opt_.set;
  std::vector<double> x(s.origin());
  const auto& n = s.normal();
  for (int i = 0; i < n.rows; ++i)
    for (int j = 0; j < n.cols; ++j) x[static_cast<std::size_t>(j)] += n(i, j) * h[static_cast<std::size_t>(i)];
  return density_(x);
}

double RegularNode::pair(const SmoothFunction& phi, double min_distance) const {
  const Box b = require_compact(phi);
  Integrand f = [&](std::span<const double> x) {
    const double p = phi.value(x);
    return p == 0.0 ? 0.0 : p * density_(x);
  };
  if (!opt_.set) return integrate_box(f, b, opt_.spec).value;
  const ClosedSet& set = *opt_.set;
  if (opt_.translation_invariant && set.kind() != SetKind::Point &&
      opt_.spec.method != QuadratureMethod::MonteCarlo && set.distance_lower_bound(b) <= 0.0) {
    Marginal marginal(set, phi, opt_.spec);
    const Integrand g = [&](std::span<const double> h) {
      const double m = marginal(h);
      return m == 0.0 ? 0.0 : m * normal_density(h);
    };
    const ClosedSet origin = ClosedSet::point(std::vector<double>(static_cast<std::size_t>(set.codimension()), 0.0));
    return integrate_near_set(g, origin, marginal.normal_box(), opt_.spec, min_distance).value;
  }
  return integrate_near_set(f, set, b, opt_.spec, min_distance).value;
}

std::string RegularNode::describe() const {
  std::string s = "regular(dim=" + std::to_string(dim_);
  if (opt_.set) s += "," + opt_.set->describe();
  if (opt_.translation_invariant) s += ",translation_invariant";
  return s + ")";
}

Distribution regular(int dim, Density density, RegularOptions opt) {
  return Distribution(std::make_shared<RegularNode>(dim, std::move(density), std::move(opt)));
}

Distribution lebesgue(int dim, QuadratureSpec spec) {
  if (dim < 1) throw DomainError("lebesgue measure needs a positive dimension");
  spec.validate();
  return Distribution(std::make_shared<LebesgueNode>(dim, spec));
}

Distribution point_supported(std::vector<double> location, std::vector<std::pair<std::vector<int>, double>> coeffs) {
  return Distribution(std::make_shared<PointSupportedNode>(std::move(location), std::move(coeffs)));
}

const std::vector<std::pair<std::vector<int>, double>>* point_coefficients(const Distribution& t) {
  auto p = dynamic_cast<const PointSupportedNode*>(&t.node());
  return p ? &p->coefficients() : nullptr;
}

Distribution sum(std::vector<Distribution> terms) {
  return Distribution(std::make_shared<SumNode>(std::move(terms)));
}

Distribution scaled(double c, Distribution t) { return Distribution(std::make_shared<ScaledNode>(c, std::move(t))); }

Distribution smooth_product(SmoothFunction psi, Distribution t) {
  return Distribution(std::make_shared<SmoothProductNode>(std::move(psi), std::move(t)));
}

Distribution tensor(Distribution a, Distribution b, std::vector<int> coords_a, std::vector<int> coords_b) {
  return Distribution(
      std::make_shared<TensorNode>(std::move(a), std::move(b), std::move(coords_a), std::move(coords_b)));
}

SmoothFunction partial_pairing(const Distribution& b, const SmoothFunction& phi, std::vector<int> coords_a,
                               std::vector<int> coords_b) {
  if (static_cast<int>(coords_b.size()) != b.dim()) throw DomainError("partial pairing: wrong coordinate count");
  check_coords(phi.dim(), coords_a, coords_b);
  return SmoothFunction(std::make_shared<PartialPairingNode>(b, phi, std::move(coords_a), std::move(coords_b)));
}

double pair_flat(const Distribution& t, const SmoothFunction& phi, const QuadratureSpec& spec) {
  if (phi.dim() != t.dim()) throw DomainError("test function dimension does not match the distribution");
  auto d = t.flat_density();
  if (!d) throw CapabilityError("distribution has no pointwise density to flatten: " + t.describe());
  const Box b = require_compact(phi);
  return integrate_box(
             [&](std::span<const double> x) {
               const double p = phi.value(x);
               return p == 0.0 ? 0.0 : p * (*d)(x);
             },
             b, spec)
      .value;
}

Box linear_image_box(const LinearMap& m, const Box& b, std::span<const double> shift) {
  std::vector<double> lo(static_cast<std::size_t>(m.rows)), hi(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) {
    double c = 0.0, w = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      c += m(i, j) * (0.5 * (b.lo[jj] + b.hi[jj]) - shift[jj]);
      w += std::fabs(m(i, j)) * 0.5 * (b.hi[jj] - b.lo[jj]);
    }
    lo[static_cast<std::size_t>(i)] = c - w;
    hi[static_cast<std::size_t>(i)] = c + w;
  }
  return Box(std::move(lo), std::move(hi));
}

struct Marginal::Memo {
  std::mutex mu;
  std::map<std::vector<double>, double> values;
};

Marginal::Marginal(const ClosedSet& set, SmoothFunction phi, QuadratureSpec spec)
    : set_(set), phi_(std::move(phi)), spec_(spec), memo_(std::make_unique<Memo>()) {
  if (!set_.linear()) throw CapabilityError("marginal needs a linear set");
  if (phi_.dim() != set_.ambient_dim()) throw DomainError("marginal: dimension mismatch");
  const Box b = require_compact(phi_);
  codim_ = set_.codimension();
  u_box_ = linear_image_box(set_.along(), b, set_.origin());
  h_box_ = linear_image_box(set_.normal(), b, set_.origin());
}

Marginal::~Marginal() = default;

double Marginal::operator()(std::span<const double> h) const {
  std::vector<double> key(h.begin(), h.end());
  {
    std::lock_guard<std::mutex> lock(memo_->mu);
    auto it = memo_->values.find(key);
    if (it != memo_->values.end()) return it->second;
  }
  const auto& n = set_.normal();
  const auto& e = set_.along();
  std::vector<double> base(set_.origin());
  for (int i = 0; i < n.rows; ++i)
    for (int j = 0; j < n.cols; ++j) base[static_cast<std::size_t>(j)] += n(i, j) * h[static_cast<std::size_t>(i)];
  double v;
  if (e.rows == 0) {
    v = phi_.value(base);
  } else {
    v = integrate_box(
            [&](std::span<const double> u) {
              thread_local std::vector<double> x;
              x.assign(base.begin(), base.end());
              for (int i = 0; i < e.rows; ++i)
                for (int j = 0; j < e.cols; ++j) x[static_cast<std::size_t>(j)] += e(i, j) * u[static_cast<std::size_t>(i)];
              return phi_.value(x);
            },
            u_box_, spec_)
            .value;
  }
  std::lock_guard<std::mutex> lock(memo_->mu);
  memo_->values.emplace(std::move(key), v);
  return v;
}

GrowthEstimate fit_growth(std::vector<GrowthSample> samples, double sub_power_threshold) {
  GrowthEstimate g;
  std::vector<double> xs, ys;
  for (const auto& s : samples)
    if (s.r > 0.0 && s.value > 0.0 && std::isfinite(s.value)) {
      xs.push_back(std::log(s.r));
      ys.push_back(std::log(s.value));
    }
  g.samples = std::move(samples);
  if (xs.size() < 4) throw InsufficientDataError("growth fit needs at least 4 usable shells, got " + std::to_string(xs.size()));
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  const double icpt = my - slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (icpt + slope * xs[i]);
    rss += e * e;
  }
  g.raw_slope = -slope;
  g.s = std::max(0.0, -slope);
  g.residual = std::sqrt(rss / n);
  g.sub_power = g.residual > sub_power_threshold;
  for (const auto& s : g.samples)
    if (s.r > 0.0 && s.value > 0.0 && std::isfinite(s.value))
      g.C = std::max(g.C, s.value / (1.0 + std::pow(s.r, -g.s)));
  return g;
}

namespace {

std::vector<std::vector<double>> transverse_directions(int codim, const GrowthOptions& opt) {
  std::vector<std::vector<double>> dirs;
  if (codim == 1) return {{1.0}, {-1.0}};
  const int nd = std::max(4, opt.directions);
  if (codim == 2) {
    for (int k = 0; k < nd; ++k) {
      const double a = 2.0 * std::numbers::pi * k / nd;
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  for (int i = 0; i < codim; ++i)
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> v(static_cast<std::size_t>(codim), 0.0);
      v[static_cast<std::size_t>(i)] = sgn;
      dirs.push_back(v);
    }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nrm;
  while (static_cast<int>(dirs.size()) < nd + 2 * codim) {
    std::vector<double> v(static_cast<std::size_t>(codim));
    double s = 0;
    for (auto& c : v) {
      c = nrm(rng);
      s += c * c;
    }
    s = std::sqrt(s);
    if (s < 1e-12) continue;
    for (auto& c : v) c /= s;
    dirs.push_back(v);
  }
  return dirs;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
  return g;
}

// Sample points of {r <= d(x, set) <= 2r} within K.
std::vector<std::vector<double>> shell_points(const ClosedSet& set, const Box& k, double r, const GrowthOptions& opt,
                                              int shell_index) {
  std::vector<std::vector<double>> pts;
  const int dim = set.ambient_dim();
  auto keep = [&](const std::vector<double>& x) {
    if (!k.contains(x)) return;
    const double d = set.distance(x);
    if (d >= r * (1 - 1e-12) && d <= 2 * r * (1 + 1e-12)) pts.push_back(x);
  };
  if (set.linear()) {
    const auto& e = set.along();
    const auto& n = set.normal();
    const int along = e.rows, codim = n.rows;
    const Box ub = linear_image_box(e, k, set.origin());
    const int per_axis = along == 0 ? 1 : std::max(3, opt.resolution / along);
    std::vector<std::vector<double>> ugrids;
    for (int i = 0; i < along; ++i)
      ugrids.push_back(grid(ub.lo[static_cast<std::size_t>(i)], ub.hi[static_cast<std::size_t>(i)], per_axis));
    const auto rhos = grid(r, 2 * r, std::max(2, opt.resolution));
    const auto dirs = transverse_directions(codim, opt);
    std::size_t ucount = 1;
    for (int i = 0; i < along; ++i) ucount *= static_cast<std::size_t>(per_axis);
    for (std::size_t ui = 0; ui < ucount; ++ui) {
      std::vector<double> base(set.origin());
      std::size_t rem = ui;
      for (int i = 0; i < along; ++i) {
        const double u = ugrids[static_cast<std::size_t>(i)][rem % static_cast<std::size_t>(per_axis)];
        rem /= static_cast<std::size_t>(per_axis);
        for (int j = 0; j < dim; ++j) base[static_cast<std::size_t>(j)] += e(i, j) * u;
      }
      for (double rho : rhos)
        for (const auto& w : dirs) {
          auto x = base;
          for (int i = 0; i < codim; ++i)
            for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] += n(i, j) * rho * w[static_cast<std::size_t>(i)];
          keep(x);
        }
    }
    return pts;
  }
  // Non-linear (big diagonal): random configurations with one pair pulled together.
  const int np = set.points(), d = set.point_dim();
  std::mt19937_64 rng(opt.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(shell_index + 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> nrm;
  for (int s = 0; s < opt.samples; ++s) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      x[jj] = k.lo[jj] + (k.hi[jj] - k.lo[jj]) * unit(rng);
    }
    int i = static_cast<int>(unit(rng) * np) % np;
    int j = static_cast<int>(unit(rng) * (np - 1)) % (np - 1);
    if (j >= i) ++j;
    const double rho = r * (1.0 + unit(rng));
    std::vector<double> w(static_cast<std::size_t>(d));
    double nn = 0;
    for (auto& c : w) {
      c = nrm(rng);
      nn += c * c;
    }
    nn = std::sqrt(nn);
    if (nn < 1e-12) continue;
    for (int a = 0; a < d; ++a)
      x[static_cast<std::size_t>(j * d + a)] =
          x[static_cast<std::size_t>(i * d + a)] + std::sqrt(2.0) * rho * w[static_cast<std::size_t>(a)] / nn;
    keep(x);
  }
  return pts;
}

}  // namespace

GrowthEstimate growth_fit_function(const SmoothFunction& f, const ClosedSet& set, const Box& k, int order,
                                   const GrowthOptions& opt) {
  if (f.dim() != set.ambient_dim() || k.dim() != f.dim()) throw DomainError("growth fit: dimension mismatch");
  if (!k.bounded() || k.empty()) throw DomainError("growth fit: K must be a bounded nonempty box");
  if (order < 0 || order > kMaxJetOrder) throw ParameterError("growth fit: derivative order out of range");
  if (opt.j_min < 0 || opt.j_max < opt.j_min) throw ParameterError("growth fit: bad shell range");
  std::vector<GrowthSample> samples;
  for (int j = opt.j_min; j <= opt.j_max; ++j) {
    const double r = std::ldexp(1.0, -j);
    const auto pts = shell_points(set, k, r, opt, j);
    if (pts.empty()) continue;
    auto vals = kernels::map_indexed(pts.size(), [&](std::size_t i) {
      if (order == 0) return std::fabs(f.value(pts[i]));
      return f.jet(pts[i], order).max_abs_derivative(order);
    });
    double sup = 0.0;
    for (double v : vals) sup = std::max(sup, v);
    samples.push_back({r, sup});
  }
  return fit_growth(std::move(samples), opt.sub_power_threshold);
}

GrowthEstimate growth_fit_distribution(const Distribution& t, const ClosedSet& set, int order,
                                       const GrowthOptions& opt) {
  if (t.dim() != set.ambient_dim()) throw DomainError("growth fit: dimension mismatch");
  if (!set.linear()) throw CapabilityError("distribution growth fit needs a linear set");
  if (opt.j_min < 0 || opt.j_max < opt.j_min) throw ParameterError("growth fit: bad shell range");
  const int dim = t.dim();
  std::vector<double> nhat(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) nhat[static_cast<std::size_t>(j)] = set.normal()(0, j);
  const int res = dim == 1 ? 201 : dim == 2 ? 41 : 11;
  std::vector<GrowthSample> samples;
  for (int j = opt.j_min; j <= opt.j_max; ++j) {
    const double r = std::ldexp(1.0, -j);
    std::vector<double> c(set.origin());
    for (int i = 0; i < dim; ++i) c[static_cast<std::size_t>(i)] += 2.0 * r * nhat[static_cast<std::size_t>(i)];
    const SmoothFunction probe = fn::bump(c, r);
    const double v = std::fabs(t.pair(probe, r));
    const double norm = seminorm(probe, SeminormSpec{order, Box::cube(c, r), res});
    samples.push_back({r, v / norm});
  }
  return fit_growth(std::move(samples), opt.sub_power_threshold);
}

DyadicSeries dyadic_series(const Distribution& t, const SmoothFunction& phi, const CutoffFamily& fam, int j_max) {
  if (j_max < 1) throw ParameterError("dyadic series needs at least two terms");
  if (j_max > kMaxShellDepth) throw ParameterError("dyadic series: too many terms");
  const Box b = require_compact(phi);
  const double dlow = fam.set().distance_lower_bound(b);
  DyadicSeries out;
  out.base = t.pair(fam.beta_function(1.0) * phi, 0.125);
  out.terms = kernels::map_indexed(static_cast<std::size_t>(j_max + 1), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    const double a = std::ldexp(1.0, -j), c = std::ldexp(1.0, -j - 1);
    if (dlow >= a) return 0.0;
    return t.pair((fam.chi_function(a) - fam.chi_function(c)) * phi, c / 8.0);
  });
  kernels::OrderedAccumulator acc;
  acc.add(out.base);
  int run = 0;
  for (std::size_t j = 0; j < out.terms.size(); ++j) {
    acc.add(out.terms[j]);
    out.partial_sums.push_back(acc.value());
    if (j == 0) continue;
    const double p = std::fabs(out.terms[j - 1]), q = std::fabs(out.terms[j]);
    const double ratio = q == 0.0 ? 0.0 : p == 0.0 ? std::numeric_limits<double>::infinity() : q / p;
    out.ratios.push_back(ratio);
    run = ratio >= 1.0 ? run + 1 : 0;
    if (run >= 5) out.summable = false;
  }
  out.tail_ratio = out.ratios.back();
  out.limit = out.partial_sums.back();
  const double last = out.terms.back(), prev = out.terms[out.terms.size() - 2];
  if (prev != 0.0) {
    const double rho = last / prev;
    if (std::fabs(rho) < 1.0) out.limit += last * rho / (1.0 - rho);
  }
  return out;
}

}  // namespace distrenorm
