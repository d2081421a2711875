#include "distrenorm/smooth_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "distrenorm/errors.hpp"
#include "distrenorm/kernels.hpp"

namespace distrenorm {

// ---------------------------------------------------------------- Box

Box::Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
  if (lo.size() != hi.size()) throw DomainError("box: bound dimensions differ");
}

Box Box::cube(std::span<const double> c, double hw) {
  Box b;
  for (double v : c) {
    b.lo.push_back(v - hw);
    b.hi.push_back(v + hw);
  }
  return b;
}

Box Box::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return Box(std::vector<double>(static_cast<std::size_t>(dim), -inf),
             std::vector<double>(static_cast<std::size_t>(dim), inf));
}

bool Box::empty() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) return true;
  return lo.empty();
}

bool Box::bounded() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
  return true;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

std::vector<double> Box::center() const {
  std::vector<double> c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

double Box::half_diagonal() const {
  double s = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) s += 0.25 * (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

Box Box::intersect(const Box& o) const {
  Box b = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b.lo[i] = std::max(lo[i], o.lo[i]);
    b.hi[i] = std::min(hi[i], o.hi[i]);
  }
  return b;
}

Box Box::hull(const Box& o) const {
  Box b = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b.lo[i] = std::min(lo[i], o.lo[i]);
    b.hi[i] = std::max(hi[i], o.hi[i]);
  }
  return b;
}

Box Box::expanded(double r) const {
  Box b = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b.lo[i] -= r;
    b.hi[i] += r;
  }
  return b;
}

// ---------------------------------------------------------------- handle

SmoothFunction::SmoothFunction(std::shared_ptr<const FunctionNode> node) : node_(std::move(node)) {
  if (!node_) return;
  dim_ = node_->dim();
  if (auto s = node_->support()) support_ = std::make_shared<const Box>(std::move(*s));
  zero_ = node_->is_zero();
}

double SmoothFunction::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw DomainError("function: point has wrong dimension");
  if (zero_) return 0.0;
  if (support_ && !support_->contains(x)) return 0.0;
  return node_->value(x);
}

Jet SmoothFunction::jet(std::span<const double> x, int order) const {
  if (static_cast<int>(x.size()) != dim()) throw DomainError("function: point has wrong dimension");
  if (order < 0 || order > kMaxJetOrder) throw CapabilityError("function: jet order exceeds kMaxJetOrder");
  if (zero_) return Jet(dim(), order);
  if (support_ && !support_->contains(x)) return Jet(dim(), order);
  return node_->jet(x, order);
}

bool SmoothFunction::compact() const {
  return support_ && support_->bounded();
}

namespace {

class ZeroNode final : public FunctionNode {
 public:
  explicit ZeroNode(int d) : d_(d) {}
  int dim() const override { return d_; }
  double value(std::span<const double>) const override { return 0.0; }
  Jet jet(std::span<const double>, int order) const override { return Jet(d_, order); }
  std::optional<Box> support() const override {
    return Box(std::vector<double>(static_cast<std::size_t>(d_), 0.0),
               std::vector<double>(static_cast<std::size_t>(d_), 0.0));
  }
  bool is_zero() const override { return true; }

 private:
  int d_;
};

class ConstantNode final : public FunctionNode {
 public:
  ConstantNode(int d, double c) : d_(d), c_(c) {}
  int dim() const override { return d_; }
  double value(std::span<const double>) const override { return c_; }
  Jet jet(std::span<const double>, int order) const override { return Jet::constant(d_, order, c_); }

 private:
  int d_;
  double c_;
};

class CallableNode final : public FunctionNode {
 public:
  CallableNode(int d, std::function<double(std::span<const double>)> v,
               std::function<Jet(std::span<const double>, int)> j, std::optional<Box> s)
      : d_(d), v_(std::move(v)), j_(std::move(j)), s_(std::move(s)) {}
  int dim() const override { return d_; }
  double value(std::span<const double> x) const override { return v_(x); }
  Jet jet(std::span<const double> x, int order) const override {
    if (!j_) {
      if (order == 0) return Jet::constant(d_, 0, v_(x));
      throw CapabilityError("function: no jet oracle available");
    }
    return j_(x, order);
  }
  std::optional<Box> support() const override { return s_; }

 private:
  int d_;
  std::function<double(std::span<const double>)> v_;
  std::function<Jet(std::span<const double>, int)> j_;
  std::optional<Box> s_;
};

class SumNode final : public FunctionNode {
 public:
  SumNode(SmoothFunction a, SmoothFunction b, double sb) : a_(std::move(a)), b_(std::move(b)), sb_(sb) {
    if (a_.dim() != b_.dim()) throw DomainError("sum: dimension mismatch");
    auto sa = a_.support(), sbx = b_.support();
    if (sa && sbx) s_ = sa->hull(*sbx);
  }
  int dim() const override { return a_.dim(); }
  double value(std::span<const double> x) const override { return a_.value(x) + sb_ * b_.value(x); }
  Jet jet(std::span<const double> x, int order) const override {
    Jet j = a_.jet(x, order);
    Jet k = b_.jet(x, order);
    if (sb_ != 1.0) k *= sb_;
    j += k;
    return j;
  }
  std::optional<Box> support() const override { return s_; }

 private:
  SmoothFunction a_, b_;
  double sb_;
  std::optional<Box> s_;
};

class ProductNode final : public FunctionNode {
 public:
  ProductNode(SmoothFunction a, SmoothFunction b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.dim() != b_.dim()) throw DomainError("product: dimension mismatch");
    auto sa = a_.support(), sb = b_.support();
    if (sa && sb)
      s_ = sa->intersect(*sb);
    else if (sa)
      s_ = sa;
    else if (sb)
      s_ = sb;
  }
  int dim() const override { return a_.dim(); }
  double value(std::span<const double> x) const override {
    const double va = a_.value(x);
    if (va == 0.0) return 0.0;
    return va * b_.value(x);
  }
  Jet jet(std::span<const double> x, int order) const override {
    Jet ja = a_.jet(x, order);
    if (ja.is_zero()) return ja;
    Jet jb = b_.jet(x, order);
    if (jb.is_zero()) return jb;
    return ja * jb;
  }
  std::optional<Box> support() const override { return s_; }
  bool is_zero() const override { return a_.is_zero() || b_.is_zero() || (s_ && s_->empty()); }

 private:
  SmoothFunction a_, b_;
  std::optional<Box> s_;
};

class ScaleNode final : public FunctionNode {
 public:
  ScaleNode(double c, SmoothFunction f) : c_(c), f_(std::move(f)) {}
  int dim() const override { return f_.dim(); }
  double value(std::span<const double> x) const override { return c_ * f_.value(x); }
  Jet jet(std::span<const double> x, int order) const override { return f_.jet(x, order) * c_; }
  std::optional<Box> support() const override { return f_.support(); }
  bool is_zero() const override { return c_ == 0.0 || f_.is_zero(); }

 private:
  double c_;
  SmoothFunction f_;
};

enum class UnaryKind { Exp, Log, Pow, Sin, Cos, Smoothstep, BumpProfile };

class UnaryNode final : public FunctionNode {
 public:
  UnaryNode(UnaryKind k, SmoothFunction f, double p = 0.0) : k_(k), f_(std::move(f)), p_(p) {}
  int dim() const override { return f_.dim(); }

  double value(std::span<const double> x) const override { return apply(f_.value(x)); }

  Jet jet(std::span<const double> x, int order) const override {
    // Flat regions of the outer function need no inner jet.
    if (k_ == UnaryKind::Smoothstep || k_ == UnaryKind::BumpProfile) {
      const double a = f_.value(x);
      if (k_ == UnaryKind::Smoothstep && (a <= 0.0 || a >= 1.0))
        return Jet::constant(dim(), order, a <= 0.0 ? 0.0 : 1.0);
      if (k_ == UnaryKind::BumpProfile && univariate::bump_profile_value(a) == 0.0) return Jet(dim(), order);
    }
    Jet inner = f_.jet(x, order);
    return inner.compose(coefficients(inner.value(), order));
  }

  std::optional<Box> support() const override {
    if (k_ == UnaryKind::Smoothstep || k_ == UnaryKind::Sin) return f_.support();
    if (k_ == UnaryKind::Pow && p_ > 0) return f_.support();
    return std::nullopt;
  }

 private:
  double apply(double a) const {
    switch (k_) {
      case UnaryKind::Exp: return std::exp(a);
      case UnaryKind::Log:
        if (!(a > 0.0)) throw DomainError("log: argument must be positive");
        return std::log(a);
      case UnaryKind::Pow:
        if (p_ == 1.0) return a;
        if (p_ == -1.0) return 1.0 / a;
        if (p_ == 2.0) return a * a;
        if (p_ == 0.5) return std::sqrt(a);
        return std::pow(a, p_);
      case UnaryKind::Sin: return std::sin(a);
      case UnaryKind::Cos: return std::cos(a);
      case UnaryKind::Smoothstep: return univariate::smoothstep_value(a);
      case UnaryKind::BumpProfile: return univariate::bump_profile_value(a);
    }
    return 0.0;
  }
  std::vector<double> coefficients(double a, int order) const {
    switch (k_) {
      case UnaryKind::Exp: return univariate::exp(a, order);
      case UnaryKind::Log: return univariate::log(a, order);
      case UnaryKind::Pow: return univariate::power(a, p_, order);
      case UnaryKind::Sin: return univariate::sin(a, order);
      case UnaryKind::Cos: return univariate::cos(a, order);
      case UnaryKind::Smoothstep: return univariate::smoothstep(a, order);
      case UnaryKind::BumpProfile: return univariate::bump_profile(a, order);
    }
    return {};
  }

  UnaryKind k_;
  SmoothFunction f_;
  double p_;
};

class MonomialNode final : public FunctionNode {
 public:
  MonomialNode(std::vector<double> a, std::vector<int> k) : a_(std::move(a)), k_(std::move(k)) {
    if (a_.size() != k_.size()) throw DomainError("monomial: dimension mismatch");
  }
  int dim() const override { return static_cast<int>(a_.size()); }
  double value(std::span<const double> x) const override {
    double v = 1.0;
    for (std::size_t i = 0; i < a_.size(); ++i)
      for (int e = 0; e < k_[i]; ++e) v *= x[i] - a_[i];
    return v;
  }
  Jet jet(std::span<const double> x, int order) const override {
    Jet out = Jet::constant(dim(), order, 1.0);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (k_[i] == 0) continue;
      Jet v = Jet::variable(dim(), order, static_cast<int>(i), x[i] - a_[i]);
      out = out * v.compose(univariate::power(x[i] - a_[i], k_[i], order));
    }
    return out;
  }

 private:
  std::vector<double> a_;
  std::vector<int> k_;
};

class BumpNode final : public FunctionNode {
 public:
  BumpNode(std::vector<double> c, double r) : c_(std::move(c)), r_(r) {
    if (!(r > 0.0)) throw ParameterError("bump: radius must be positive");
  }
  int dim() const override { return static_cast<int>(c_.size()); }
  double value(std::span<const double> x) const override {
    return univariate::bump_profile_value(radius_sq(x));
  }
  Jet jet(std::span<const double> x, int order) const override {
    const double s = radius_sq(x);
    if (univariate::bump_profile_value(s) == 0.0) return Jet(dim(), order);
    Jet u(dim(), order);
    const double inv = 1.0 / (r_ * r_);
    for (int i = 0; i < dim(); ++i) {
      const double d = x[static_cast<std::size_t>(i)] - c_[static_cast<std::size_t>(i)];
      Jet v = Jet::variable(dim(), order, i, d);
      u += v * v;
    }
    u *= inv;
    return u.compose(univariate::bump_profile(s, order));
  }
  std::optional<Box> support() const override { return Box::cube(c_, r_); }

 private:
  double radius_sq(std::span<const double> x) const {
    double s = 0;
    for (std::size_t i = 0; i < c_.size(); ++i) s += (x[i] - c_[i]) * (x[i] - c_[i]);
    return s / (r_ * r_);
  }
  std::vector<double> c_;
  double r_;
};

class AffineNode final : public FunctionNode {
 public:
  AffineNode(SmoothFunction f, LinearMap m, std::vector<double> b, std::optional<Box> s)
      : f_(std::move(f)), m_(std::move(m)), b_(std::move(b)), s_(std::move(s)) {
    if (m_.rows != f_.dim() || static_cast<int>(b_.size()) != m_.rows)
      throw DomainError("compose_affine: shape mismatch");
  }
  int dim() const override { return m_.cols; }
  double value(std::span<const double> y) const override {
    constexpr int kStack = 32;
    if (m_.rows > kStack) return f_.value(map(y));
    double z[kStack];
    for (int i = 0; i < m_.rows; ++i) {
      double t = b_[static_cast<std::size_t>(i)];
      for (int j = 0; j < m_.cols; ++j) t += m_(i, j) * y[static_cast<std::size_t>(j)];
      z[i] = t;
    }
    return f_.value(std::span<const double>(z, static_cast<std::size_t>(m_.rows)));
  }
  Jet jet(std::span<const double> y, int order) const override {
    Jet j = f_.jet(map(y), order);
    if (j.is_zero()) return Jet(dim(), order);
    return j.substitute_linear(m_);
  }
  std::optional<Box> support() const override { return s_; }
  bool is_zero() const override { return f_.is_zero(); }

 private:
  std::vector<double> map(std::span<const double> y) const {
    auto z = m_.apply(y);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += b_[i];
    return z;
  }
  SmoothFunction f_;
  LinearMap m_;
  std::vector<double> b_;
  std::optional<Box> s_;
};

class NormNode final : public FunctionNode {
 public:
  NormNode(LinearMap m, std::vector<double> b) : m_(std::move(m)), b_(std::move(b)) {}
  int dim() const override { return m_.cols; }
  double value(std::span<const double> y) const override {
    double s = 0;
    for (int i = 0; i < m_.rows; ++i) {
      double t = b_[static_cast<std::size_t>(i)];
      for (int j = 0; j < m_.cols; ++j) t += m_(i, j) * y[static_cast<std::size_t>(j)];
      s += t * t;
    }
    return std::sqrt(s);
  }
  Jet jet(std::span<const double> y, int order) const override {
    auto z = map(y);
    double s = 0;
    for (double v : z) s += v * v;
    if (order == 0) return Jet::constant(dim(), 0, std::sqrt(s));
    if (s == 0.0) throw SingularLocusError("norm: jet requested on the zero set");
    Jet q(dim(), order);
    for (int i = 0; i < m_.rows; ++i) {
      Jet l = Jet::constant(dim(), order, z[static_cast<std::size_t>(i)]);
      for (int j = 0; j < m_.cols; ++j) l.taylor()[static_cast<std::size_t>(j) + 1] = m_(i, j);
      q += l * l;
    }
    return q.compose(univariate::power(s, 0.5, order));
  }

 private:
  std::vector<double> map(std::span<const double> y) const {
    auto z = m_.apply(y);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += b_[i];
    return z;
  }
  LinearMap m_;
  std::vector<double> b_;
};

class DerivativeNode final : public FunctionNode {
 public:
  DerivativeNode(SmoothFunction f, std::vector<int> alpha) : f_(std::move(f)), alpha_(std::move(alpha)) {
    if (static_cast<int>(alpha_.size()) != f_.dim()) throw DomainError("derivative: index dimension mismatch");
    for (int a : alpha_) deg_ += a;
  }
  int dim() const override { return f_.dim(); }
  double value(std::span<const double> x) const override { return f_.jet(x, deg_).derivative(alpha_); }
  Jet jet(std::span<const double> x, int order) const override {
    if (order + deg_ > kMaxJetOrder) throw CapabilityError("derivative: jet order exceeds kMaxJetOrder");
    return f_.jet(x, order + deg_).derivative_jet(alpha_, order);
  }
  std::optional<Box> support() const override { return f_.support(); }
  bool is_zero() const override { return f_.is_zero(); }

 private:
  SmoothFunction f_;
  std::vector<int> alpha_;
  int deg_ = 0;
};

class SupportNode final : public FunctionNode {
 public:
  SupportNode(SmoothFunction f, Box b) : f_(std::move(f)), b_(std::move(b)) {
    if (auto s = f_.support()) b_ = b_.intersect(*s);
  }
  int dim() const override { return f_.dim(); }
  double value(std::span<const double> x) const override { return f_.value(x); }
  Jet jet(std::span<const double> x, int order) const override { return f_.jet(x, order); }
  std::optional<Box> support() const override { return b_; }
  bool is_zero() const override { return f_.is_zero() || b_.empty(); }

 private:
  SmoothFunction f_;
  Box b_;
};

class TaylorNode final : public FunctionNode {
 public:
  TaylorNode(Jet j, std::vector<double> a) : j_(std::move(j)), a_(std::move(a)) {}
  int dim() const override { return j_.dim(); }
  double value(std::span<const double> x) const override {
    std::vector<double> v(a_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] - a_[i];
    return j_.evaluate_polynomial(v);
  }
  Jet jet(std::span<const double> x, int order) const override {
    const int d = dim();
    const int deg = j_.order();
    Jet out(d, order);
    if (order == 0) {
      out.taylor()[0] = value(x);
      return out;
    }
    std::vector<std::vector<Jet>> pw(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      Jet v = Jet::variable(d, order, i, x[static_cast<std::size_t>(i)] - a_[static_cast<std::size_t>(i)]);
      auto& p = pw[static_cast<std::size_t>(i)];
      p.push_back(Jet::constant(d, order, 1.0));
      for (int e = 1; e <= deg; ++e) p.push_back(p.back() * v);
    }
    const auto& tab = j_.table();
    for (std::size_t r = 0; r < j_.size(); ++r) {
      const double c = j_.taylor(r);
      if (c == 0.0) continue;
      auto k = tab.exponents(r);
      Jet term = Jet::constant(d, order, c);
      for (int i = 0; i < d; ++i)
        if (k[static_cast<std::size_t>(i)] > 0) term = term * pw[static_cast<std::size_t>(i)][k[static_cast<std::size_t>(i)]];
      out += term;
    }
    return out;
  }
  bool is_zero() const override { return j_.is_zero(); }

 private:
  Jet j_;
  std::vector<double> a_;
};

}  // namespace

SmoothFunction SmoothFunction::from_callable(int dim, std::function<double(std::span<const double>)> v,
                                             std::function<Jet(std::span<const double>, int)> j,
                                             std::optional<Box> support) {
  return SmoothFunction(std::make_shared<CallableNode>(dim, std::move(v), std::move(j), std::move(support)));
}

SmoothFunction operator+(const SmoothFunction& a, const SmoothFunction& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return b;
  return SmoothFunction(std::make_shared<SumNode>(a, b, 1.0));
}

SmoothFunction operator-(const SmoothFunction& a, const SmoothFunction& b) {
  if (b.is_zero()) return a;
  return SmoothFunction(std::make_shared<SumNode>(a, b, -1.0));
}

SmoothFunction operator*(const SmoothFunction& a, const SmoothFunction& b) {
  if (a.is_zero()) return a;
  if (b.is_zero()) return b;
  return SmoothFunction(std::make_shared<ProductNode>(a, b));
}

SmoothFunction operator*(double s, const SmoothFunction& f) {
  if (s == 1.0) return f;
  if (s == 0.0) return fn::zero(f.dim());
  return SmoothFunction(std::make_shared<ScaleNode>(s, f));
}

SmoothFunction operator-(const SmoothFunction& f) { return -1.0 * f; }

namespace fn {

SmoothFunction zero(int dim) { return SmoothFunction(std::make_shared<ZeroNode>(dim)); }
SmoothFunction constant(int dim, double c) {
  if (c == 0.0) return zero(dim);
  return SmoothFunction(std::make_shared<ConstantNode>(dim, c));
}

SmoothFunction coordinate(int dim, int i) {
  std::vector<double> a(static_cast<std::size_t>(dim), 0.0);
  std::vector<int> k(static_cast<std::size_t>(dim), 0);
  k[static_cast<std::size_t>(i)] = 1;
  return monomial(a, k);
}

SmoothFunction monomial(std::span<const double> a, std::span<const int> k) {
  return SmoothFunction(std::make_shared<MonomialNode>(std::vector<double>(a.begin(), a.end()),
                                                       std::vector<int>(k.begin(), k.end())));
}

SmoothFunction bump(std::span<const double> center, double radius) {
  return SmoothFunction(std::make_shared<BumpNode>(std::vector<double>(center.begin(), center.end()), radius));
}

SmoothFunction bump_product(std::span<const double> center, std::span<const double> radii) {
  const int d = static_cast<int>(center.size());
  SmoothFunction out;
  for (int i = 0; i < d; ++i) {
    const double c = center[static_cast<std::size_t>(i)];
    const int idx[1] = {i};
    SmoothFunction b = embed(bump(std::span<const double>(&c, 1), radii[static_cast<std::size_t>(i)]), d, idx);
    out = out ? out * b : b;
  }
  return out;
}

#define DISTRENORM_UNARY(name, kind) \
  SmoothFunction name(const SmoothFunction& f) { return SmoothFunction(std::make_shared<UnaryNode>(kind, f)); }
DISTRENORM_UNARY(exp, UnaryKind::Exp)
DISTRENORM_UNARY(log, UnaryKind::Log)
DISTRENORM_UNARY(sin, UnaryKind::Sin)
DISTRENORM_UNARY(cos, UnaryKind::Cos)
DISTRENORM_UNARY(smoothstep, UnaryKind::Smoothstep)
DISTRENORM_UNARY(bump_profile, UnaryKind::BumpProfile)
#undef DISTRENORM_UNARY

SmoothFunction pow(const SmoothFunction& f, double p) {
  return SmoothFunction(std::make_shared<UnaryNode>(UnaryKind::Pow, f, p));
}

SmoothFunction compose_affine(const SmoothFunction& f, const LinearMap& m, std::span<const double> b,
                              std::optional<Box> support) {
  if (f.is_zero()) return zero(m.cols);
  return SmoothFunction(
      std::make_shared<AffineNode>(f, m, std::vector<double>(b.begin(), b.end()), std::move(support)));
}

SmoothFunction embed(const SmoothFunction& f, int dim, std::span<const int> coords) {
  if (static_cast<int>(coords.size()) != f.dim()) throw DomainError("embed: coordinate count mismatch");
  LinearMap m(f.dim(), dim);
  for (int i = 0; i < f.dim(); ++i) m(i, coords[static_cast<std::size_t>(i)]) = 1.0;
  std::optional<Box> s;
  if (auto fs = f.support()) {
    Box b = Box::unbounded(dim);
    for (int i = 0; i < f.dim(); ++i) {
      auto c = static_cast<std::size_t>(coords[static_cast<std::size_t>(i)]);
      b.lo[c] = fs->lo[static_cast<std::size_t>(i)];
      b.hi[c] = fs->hi[static_cast<std::size_t>(i)];
    }
    s = b;
  }
  std::vector<double> zero_shift(static_cast<std::size_t>(f.dim()), 0.0);
  return compose_affine(f, m, zero_shift, s);
}

SmoothFunction affine_norm(const LinearMap& m, std::span<const double> b) {
  return SmoothFunction(std::make_shared<NormNode>(m, std::vector<double>(b.begin(), b.end())));
}

SmoothFunction derivative(const SmoothFunction& f, std::span<const int> alpha) {
  return SmoothFunction(std::make_shared<DerivativeNode>(f, std::vector<int>(alpha.begin(), alpha.end())));
}

SmoothFunction helmholtz(const SmoothFunction& f, double mass) {
  SmoothFunction out = (mass * mass) * f;
  if (mass == 0.0) out = zero(f.dim());
  for (int i = 0; i < f.dim(); ++i) {
    std::vector<int> a(static_cast<std::size_t>(f.dim()), 0);
    a[static_cast<std::size_t>(i)] = 2;
    out = out - derivative(f, a);
  }
  return out;
}

SmoothFunction with_support(const SmoothFunction& f, const Box& box) {
  return SmoothFunction(std::make_shared<SupportNode>(f, box));
}

}  // namespace fn

SmoothFunction taylor_field(const Jet& j, std::span<const double> a, int m) {
  if (m > j.order()) throw PreconditionError("taylor_field: jet order below requested order");
  if (static_cast<int>(a.size()) != j.dim()) throw DomainError("taylor_field: point has wrong dimension");
  Jet t = j.truncated(m);
  if (t.is_zero()) return fn::zero(j.dim());
  return SmoothFunction(std::make_shared<TaylorNode>(std::move(t), std::vector<double>(a.begin(), a.end())));
}

double seminorm(const SmoothFunction& f, const SeminormSpec& spec) {
  const int d = f.dim();
  if (spec.region.dim() != d) throw DomainError("seminorm: region dimension mismatch");
  if (spec.region.empty() || !spec.region.bounded()) throw DomainError("seminorm: region must be a nonempty box");
  if (spec.resolution < 2) throw ParameterError("seminorm: resolution must be at least 2");
  if (spec.order < 0) throw ParameterError("seminorm: negative order");
  const auto n = static_cast<std::size_t>(spec.resolution);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  const auto support = f.support();
  const std::size_t rows = total / n;
  // One task per grid row along the last axis.
  auto row_max = kernels::map_indexed(rows, [&](std::size_t row) {
    std::vector<double> x(static_cast<std::size_t>(d));
    std::size_t rem = row;
    for (int i = d - 2; i >= 0; --i) {
      const auto ii = static_cast<std::size_t>(i);
      const std::size_t k = rem % n;
      rem /= n;
      x[ii] = spec.region.lo[ii] + (spec.region.hi[ii] - spec.region.lo[ii]) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    double best = 0.0;
    const auto last = static_cast<std::size_t>(d - 1);
    for (std::size_t k = 0; k < n; ++k) {
      x[last] = spec.region.lo[last] +
                (spec.region.hi[last] - spec.region.lo[last]) * static_cast<double>(k) / static_cast<double>(n - 1);
      if (support && !support->contains(x)) continue;
      best = std::max(best, f.jet(x, spec.order).max_abs_derivative(spec.order));
    }
    return best;
  });
  double m = 0.0;
  for (double v : row_max) m = std::max(m, v);
  return m;
}

}  // namespace distrenorm
