#include "distrenorm/feynman.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "distrenorm/errors.hpp"

namespace distrenorm {

namespace {

constexpr double kPi = std::numbers::pi;

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// g(|M x + b|)^p for a radial kernel profile g.
class RadialKernelNode final : public FunctionNode {
 public:
  RadialKernelNode(GreenKernel k, LinearMap m, std::vector<double> b, int p)
      : k_(k), m_(std::move(m)), b_(std::move(b)), p_(p) {}

  int dim() const override { return m_.cols; }

  double value(std::span<const double> x) const override {
    const double r = radius(x);
    if (r == 0.0) throw SingularLocusError("Green kernel evaluated on the diagonal");
    const double g = k_.radial(r);
    double v = g;
    for (int i = 1; i < p_; ++i) v *= g;
    return v;
  }

  Jet jet(std::span<const double> x, int order) const override {
    auto z = map(x);
    double s = 0;
    for (double v : z) s += v * v;
    if (s == 0.0) throw SingularLocusError("Green kernel jet requested on the diagonal");
    const double r = std::sqrt(s);
    if (order == 0) return Jet::constant(dim(), 0, std::pow(k_.radial(r), p_));
    Jet q(dim(), order);
    for (int i = 0; i < m_.rows; ++i) {
      Jet l = Jet::constant(dim(), order, z[static_cast<std::size_t>(i)]);
      for (int j = 0; j < m_.cols; ++j) l.taylor()[static_cast<std::size_t>(j) + 1] = m_(i, j);
      q += l * l;
    }
    Jet rj = q.compose(univariate::power(s, 0.5, order));
    Jet g = rj.compose(k_.radial_taylor(r, order));
    Jet out = g;
    for (int i = 1; i < p_; ++i) out = out * g;
    return out;
  }

 private:
  std::vector<double> map(std::span<const double> x) const {
    auto z = m_.apply(x);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += b_[i];
    return z;
  }
  double radius(std::span<const double> x) const {
    double s = 0;
    for (int i = 0; i < m_.rows; ++i) {
      double t = b_[static_cast<std::size_t>(i)];
      for (int j = 0; j < m_.cols; ++j) t += m_(i, j) * x[static_cast<std::size_t>(j)];
      s += t * t;
    }
    return std::sqrt(s);
  }

  GreenKernel k_;
  LinearMap m_;
  std::vector<double> b_;
  int p_;
};

double pair_distance(std::span<const double> cfg, int d, int i, int j) {
  double s = 0;
  for (int a = 0; a < d; ++a) {
    const double t = cfg[static_cast<std::size_t>(i * d + a)] - cfg[static_cast<std::size_t>(j * d + a)];
    s += t * t;
  }
  return std::sqrt(s);
}

std::vector<int> mask_vertices(std::uint32_t mask) {
  std::vector<int> v;
  for (int i = 0; i < 32; ++i)
    if (mask & (1u << i)) v.push_back(i);
  return v;
}

std::uint32_t vertices_mask(const std::vector<int>& v) {
  std::uint32_t m = 0;
  for (int i : v) m |= 1u << i;
  return m;
}

std::vector<int> block_coords(const std::vector<int>& vertices, int d) {
  std::vector<int> c;
  for (int v : vertices)
    for (int a = 0; a < d; ++a) c.push_back(v * d + a);
  return c;
}

std::string vertex_label(const std::vector<int>& v) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i] + 1;
  os << '}';
  return os.str();
}

}  // namespace

GreenKernel::GreenKernel(int d, double mass) : d_(d), m_(mass) {
  if (d < 1 || d > 3) throw DomainError("Green kernel: dimension must be 1, 2 or 3");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw ParameterError("Green kernel: mass must be finite and >= 0");
}

double GreenKernel::radial(double r) const {
  if (!(r > 0.0)) throw SingularLocusError("Green kernel evaluated at r = 0");
  switch (d_) {
    case 1: return m_ == 0.0 ? -0.5 * r : std::exp(-m_ * r) / (2.0 * m_);
    case 2: return m_ == 0.0 ? -std::log(r) / (2.0 * kPi) : std::cyl_bessel_k(0.0, m_ * r) / (2.0 * kPi);
    default: return std::exp(-m_ * r) / (4.0 * kPi * r);
  }
}

std::vector<double> GreenKernel::radial_taylor(double r, int order) const {
  if (!(r > 0.0)) throw SingularLocusError("Green kernel jet at r = 0");
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  auto exp_series = [&]() {
    std::vector<double> e(c.size());
    const double e0 = std::exp(-m_ * r);
    for (int k = 0; k <= order; ++k) e[static_cast<std::size_t>(k)] = e0 * std::pow(-m_, k) / factorial(k);
    return e;
  };
  if (d_ == 1) {
    if (m_ == 0.0) {
      c[0] = -0.5 * r;
      if (order >= 1) c[1] = -0.5;
    } else {
      c = exp_series();
      for (double& v : c) v /= 2.0 * m_;
    }
  } else if (d_ == 2) {
    if (m_ == 0.0) {
      c = univariate::log(r, order);
      for (double& v : c) v *= -1.0 / (2.0 * kPi);
    } else {
      // d^k/dz^k K_0 = (-1/2)^k sum_i C(k,i) K_{|k-2i|}
      const double z = m_ * r;
      for (int k = 0; k <= order; ++k) {
        double s = 0;
        for (int i = 0; i <= k; ++i) s += binomial(k, i) * std::cyl_bessel_k(static_cast<double>(std::abs(k - 2 * i)), z);
        c[static_cast<std::size_t>(k)] = std::pow(-0.5 * m_, k) * s / factorial(k) / (2.0 * kPi);
      }
    }
  } else {
    auto p = univariate::power(r, -1.0, order);
    if (m_ == 0.0) {
      c = p;
    } else {
      auto e = exp_series();
      for (int k = 0; k <= order; ++k)
        for (int i = 0; i <= k; ++i)
          c[static_cast<std::size_t>(k)] += e[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(k - i)];
    }
    for (double& v : c) v /= 4.0 * kPi;
  }
  return c;
}

double GreenKernel::singular_degree(int power) const { return d_ == 3 ? power * 1.0 : 0.0; }

std::string GreenKernel::describe() const {
  std::ostringstream os;
  os << "Green(d=" << d_ << ", m=" << m_ << ")";
  return os.str();
}

double green_eval(const GreenKernel& k, std::span<const double> x, std::span<const double> y) {
  if (static_cast<int>(x.size()) != k.d() || static_cast<int>(y.size()) != k.d())
    throw DomainError("green_eval: point dimension mismatch");
  double s = 0;
  for (int a = 0; a < k.d(); ++a) s += (x[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(a)]) *
                                       (x[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(a)]);
  if (s == 0.0) throw SingularLocusError("green_eval: x = y");
  return k.radial(std::sqrt(s));
}

SmoothFunction green_function(const GreenKernel& k, int n, int i, int j, int power) {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) throw DomainError("green_function: bad vertex pair");
  if (power < 1) throw DomainError("green_function: power must be >= 1");
  const int d = k.d();
  LinearMap m(d, n * d);
  for (int a = 0; a < d; ++a) {
    m(a, i * d + a) = 1.0;
    m(a, j * d + a) = -1.0;
  }
  return SmoothFunction(std::make_shared<RadialKernelNode>(k, std::move(m), std::vector<double>(static_cast<std::size_t>(d), 0.0), power));
}

SmoothFunction green_function_at(const GreenKernel& k, std::span<const double> y) {
  if (static_cast<int>(y.size()) != k.d()) throw DomainError("green_function_at: point dimension mismatch");
  std::vector<double> b(y.size());
  for (std::size_t a = 0; a < y.size(); ++a) b[a] = -y[a];
  return SmoothFunction(std::make_shared<RadialKernelNode>(k, LinearMap::identity(k.d()), std::move(b), 1));
}

Jet green_jet(const GreenKernel& k, std::span<const double> x, std::span<const double> y, int order) {
  if (static_cast<int>(x.size()) != k.d() || static_cast<int>(y.size()) != k.d())
    throw DomainError("green_jet: point dimension mismatch");
  std::vector<double> xy(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  return green_function(k, 2, 0, 1).jet(xy, order);
}

TemperednessReport green_temperedness_check(const GreenKernel& k, int order, const GrowthOptions& shells) {
  if (order < 0 || order > kMaxJetOrder) throw ParameterError("temperedness check: bad derivative order");
  if (shells.j_max - shells.j_min + 1 < 4) throw InsufficientDataError("temperedness check: need at least 4 shells");
  const int d = k.d();
  std::vector<double> c(static_cast<std::size_t>(2 * d), 0.0);
  TemperednessReport rep;
  rep.order = order;
  rep.fit = growth_fit_function(green_function(k, 2, 0, 1), ClosedSet::small_diagonal(2, d), Box::cube(c, 1.0), order, shells);
  rep.exponent = rep.fit.s;
  rep.bound = d + order + 1;
  rep.analytic = d == 3 ? 1.0 + order : (d == 2 ? order : 0.0);
  rep.within_bound = rep.exponent <= rep.bound;
  return rep;
}

FeynmanGraph::FeynmanGraph(int n) : n_(n) {
  if (n < 2) throw DomainError("Feynman graph needs at least 2 vertices");
  if (n > 31) throw DomainError("Feynman graph: too many vertices");
  m_.assign(static_cast<std::size_t>(n * n), 0);
}

FeynmanGraph::FeynmanGraph(int n, const std::vector<int>& upper) : FeynmanGraph(n) {
  if (static_cast<int>(upper.size()) != n * (n - 1) / 2)
    throw DomainError("Feynman graph: expected n(n-1)/2 edge multiplicities");
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) set_edge(i, j, upper[idx++]);
}

int FeynmanGraph::edge(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw DomainError("Feynman graph: vertex out of range");
  return m_[static_cast<std::size_t>(i * n_ + j)];
}

void FeynmanGraph::set_edge(int i, int j, int mult) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw DomainError("Feynman graph: vertex out of range");
  if (mult < 0) throw DomainError("Feynman graph: negative edge multiplicity");
  if (i == j && mult != 0) throw DomainError("Feynman graph: self-loops are not allowed");
  m_[static_cast<std::size_t>(i * n_ + j)] = mult;
  m_[static_cast<std::size_t>(j * n_ + i)] = mult;
}

int FeynmanGraph::total_edges() const {
  int t = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) t += edge(i, j);
  return t;
}

FeynmanGraph FeynmanGraph::restrict(const std::vector<int>& vertices) const {
  FeynmanGraph g(static_cast<int>(vertices.size()));
  for (std::size_t a = 0; a < vertices.size(); ++a)
    for (std::size_t b = a + 1; b < vertices.size(); ++b)
      g.set_edge(static_cast<int>(a), static_cast<int>(b), edge(vertices[a], vertices[b]));
  return g;
}

std::vector<int> FeynmanGraph::upper() const {
  std::vector<int> u;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) u.push_back(edge(i, j));
  return u;
}

std::string FeynmanGraph::describe() const {
  std::ostringstream os;
  os << "graph(n=" << n_ << ", edges=[";
  auto u = upper();
  for (std::size_t i = 0; i < u.size(); ++i) os << (i ? "," : "") << u[i];
  os << "])";
  return os.str();
}

double amplitude_eval(const FeynmanGraph& g, const GreenKernel& k, std::span<const double> cfg) {
  const int d = k.d();
  if (static_cast<int>(cfg.size()) != g.n() * d) throw DomainError("amplitude_eval: configuration dimension mismatch");
  double v = 1.0;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j) {
      const int e = g.edge(i, j);
      if (e == 0) continue;
      const double r = pair_distance(cfg, d, i, j);
      if (r == 0.0) throw SingularLocusError("amplitude_eval: coincident points on an edge");
      v *= std::pow(k.radial(r), e);
    }
  return v;
}

SmoothFunction amplitude_function(const FeynmanGraph& g, const GreenKernel& k) {
  SmoothFunction f;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j) {
      const int e = g.edge(i, j);
      if (e == 0) continue;
      auto gij = green_function(k, g.n(), i, j, e);
      f = f ? f * gij : gij;
    }
  return f ? f : fn::constant(g.n() * k.d(), 1.0);
}

SmoothFunction cross_kernel(const FeynmanGraph& g, const GreenKernel& k, const PartitionPiece& piece) {
  if (piece.n() != g.n()) throw DomainError("cross_kernel: piece does not match the graph");
  SmoothFunction f;
  for (int i : piece.first)
    for (int j : piece.second) {
      const int e = g.edge(i, j);
      if (e == 0) continue;
      auto gij = green_function(k, g.n(), i, j, e);
      f = f ? f * gij : gij;
    }
  return f ? f : fn::constant(g.n() * k.d(), 1.0);
}

Distribution renorm_product(const SmoothFunction& f, const Distribution& t, const RenormScheme& scheme,
                            const Box& growth_box, LadderSpec ladder) {
  auto* rn = dynamic_cast<const RegularNode*>(&t.node());
  if (!rn) throw CapabilityError("renorm_product: t must be a Regular distribution");
  if (f.dim() != t.dim()) throw DomainError("renorm_product: dimension mismatch");
  GrowthEstimate est;
  try {
    est = growth_fit_function(f, scheme.set, growth_box, 0);
  } catch (const InsufficientDataError& e) {
    throw PreconditionError(std::string("renorm_product: f has no growth fit near the set: ") + e.what());
  }
  if (!std::isfinite(est.s)) throw PreconditionError("renorm_product: f is not tempered near the set");
  Density base = rn->density();
  Density prod = [f, base](std::span<const double> x) {
    const double b = base(x);
    if (b == 0.0) return 0.0;
    return f.value(x) * b;
  };
  RegularOptions opt;
  opt.set = scheme.set;
  opt.spec = rn->spec();
  return extend(regular(t.dim(), std::move(prod), opt), scheme, ladder);
}

int power_counting_order(const FeynmanGraph& g, const GreenKernel& k) {
  const double s = k.singular_degree(g.total_edges());
  const int codim = (g.n() - 1) * k.d();
  if (s < codim) return kNoSubtraction;
  return static_cast<int>(std::lround(s)) - codim;
}

AmplitudeDistribution::AmplitudeDistribution(FeynmanGraph g, GreenKernel k, RenormalizeOptions opt)
    : g_(std::move(g)), k_(k), opt_(std::move(opt)), partition_(g_.n(), k_.d(), opt_.sigma0) {
  opt_.spec.validate();
  opt_.ladder.validate();
  const int n = g_.n(), d = k_.d();
  const bool mc = opt_.spec.method == QuadratureMethod::MonteCarlo;
  if (n > 3) throw CapabilityError("renormalize: at most 3 vertices are supported");
  if (n == 3 && d == 3) throw CapabilityError("renormalize: n = 3 in d = 3 is out of scope");
  if (n == 3 && d == 2 && !mc) throw CapabilityError("renormalize: n = 3, d = 2 requires a Monte Carlo spec");
  for (const auto& [size, lv] : opt_.levels) {
    if (size < 2 || size > n) throw ParameterError("renormalize: scheme level outside 2..n");
    if (lv.order < kAutoOrder || lv.order > kMaxJetOrder) throw ParameterError("renormalize: bad scheme order");
  }
  build(full_mask());
}

int AmplitudeDistribution::level_order(const FeynmanGraph& sub_graph, int size) const {
  auto it = opt_.levels.find(size);
  const int o = it == opt_.levels.end() ? kAutoOrder : it->second.order;
  return o == kAutoOrder ? power_counting_order(sub_graph, k_) : o;
}

Distribution AmplitudeDistribution::build(std::uint32_t mask) {
  if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
  const int d = k_.d();
  const auto verts = mask_vertices(mask);
  const int size = static_cast<int>(verts.size());
  Distribution out;
  if (size == 1) {
    out = lebesgue(d, opt_.spec);
  } else {
    const FeynmanGraph sub = g_.restrict(verts);
    LevelScheme lv;
    if (auto it = opt_.levels.find(size); it != opt_.levels.end()) lv = it->second;
    const int order = level_order(sub, size);
    const ClosedSet diag = ClosedSet::small_diagonal(size, d);
    RenormScheme scheme(diag, order, lv.r_in, lv.r_out);
    Distribution t;
    if (size == 2) {
      const int e = sub.edge(0, 1);
      if (e == 0) {
        t = lebesgue(2 * d, opt_.spec);
      } else {
        const GreenKernel kk = k_;
        Density dens = [kk, d, e](std::span<const double> x) {
          const double r = pair_distance(x, d, 0, 1);
          // d = 1 kernels are continuous: use the limit on the diagonal.
          if (r == 0.0) return kk.d() == 1 ? std::pow(kk.mass() == 0.0 ? 0.0 : 0.5 / kk.mass(), e) : 0.0;
          return std::pow(kk.radial(r), e);
        };
        RegularOptions ro;
        ro.set = diag;
        ro.translation_invariant = true;
        ro.spec = opt_.spec;
        t = regular(2 * d, std::move(dens), ro);
      }
    } else {
      const TemperedPartition part(size, d, opt_.sigma0);
      std::vector<Distribution> terms;
      for (std::size_t p = 0; p < part.pieces().size(); ++p) {
        const PartitionPiece& pc = part.pieces()[p];
        std::vector<int> v1, v2;
        for (int i : pc.first) v1.push_back(verts[static_cast<std::size_t>(i)]);
        for (int i : pc.second) v2.push_back(verts[static_cast<std::size_t>(i)]);
        Distribution r1 = build(vertices_mask(v1));
        Distribution r2 = build(vertices_mask(v2));
        SmoothFunction psi = part.weight_function(p) * cross_kernel(sub, k_, pc);
        terms.push_back(smooth_product(psi, tensor(r1, r2, block_coords(pc.first, d), block_coords(pc.second, d))));
      }
      t = sum(std::move(terms));
    }
    out = extend(t, scheme, opt_.ladder);
    levels_.push_back({mask, verts, order, power_counting_order(sub, k_), vertex_label(verts) + ": " + scheme.describe()});
  }
  memo_.emplace(mask, out);
  return out;
}

const Distribution& AmplitudeDistribution::sub(std::uint32_t mask) const {
  auto it = memo_.find(mask);
  if (it == memo_.end()) throw DomainError("AmplitudeDistribution: unknown vertex subset");
  return it->second;
}

Distribution AmplitudeDistribution::factorized(const PartitionPiece& piece) const {
  if (piece.n() != g_.n()) throw DomainError("factorized: piece does not match the graph");
  const int d = k_.d();
  Distribution tp = tensor(sub(vertices_mask(piece.first)), sub(vertices_mask(piece.second)),
                           block_coords(piece.first, d), block_coords(piece.second, d));
  bool cross = false;
  for (int i : piece.first)
    for (int j : piece.second) cross = cross || g_.edge(i, j) > 0;
  if (!cross) return tp;
  return smooth_product(cross_kernel(g_, k_, piece), tp);
}

double AmplitudeDistribution::pair(const SmoothFunction& phi) const {
  if (opt_.spec.method == QuadratureMethod::MonteCarlo) return pair_flat(full(), phi, opt_.spec);
  return full().pair(phi);
}

double AmplitudeDistribution::pair_factorized(const PartitionPiece& piece, const SmoothFunction& phi,
                                              std::uint64_t seed_offset) const {
  Distribution f = factorized(piece);
  if (opt_.spec.method == QuadratureMethod::MonteCarlo) {
    QuadratureSpec s = opt_.spec;
    s.seed += seed_offset;
    return pair_flat(f, phi, s);
  }
  return f.pair(phi);
}

AmplitudeResult AmplitudeDistribution::evaluate(const SmoothFunction& phi) const {
  AmplitudeResult r;
  auto level_notes = [&] {
    std::string s;
    for (const auto& lv : levels_) s += (s.empty() ? "" : "; ") + lv.description;
    return s;
  };
  if (opt_.spec.method == QuadratureMethod::MonteCarlo) {
    try {
      r.value = pair(phi);
    } catch (const DivergenceError& e) {
      r.diverged = true;
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.diagnostic = std::string(e.what()) + " [levels: " + level_notes() + "]";
    }
    return r;
  }
  if (auto box = phi.support(); box && box->bounded()) {
    for (const auto& lv : levels_) {
      if (lv.order >= lv.required) continue;
      bool touches = true;
      for (std::size_t a = 0; a < lv.vertices.size() && touches; ++a)
        for (std::size_t b = a + 1; b < lv.vertices.size() && touches; ++b)
          touches = pair_separation_lower_bound(*box, k_.d(), lv.vertices[a], lv.vertices[b]) == 0.0;
      if (!touches) continue;
      r.diverged = true;
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.diagnostic = "level " + vertex_label(lv.vertices) + ": subtraction order " + std::to_string(lv.order) +
                     " is below the divergence degree " + std::to_string(lv.required) +
                     " and supp phi reaches the diagonal [levels: " + level_notes() + "]";
      return r;
    }
  }
  r.top = evaluate_extension(full(), phi);
  r.value = r.top.value;
  r.diverged = r.top.diverged;
  r.diagnostic = r.top.diagnostic;
  if (r.diverged) r.diagnostic += " [levels: " + level_notes() + "]";
  return r;
}

AmplitudeDistribution renormalize(const FeynmanGraph& g, const GreenKernel& k, RenormalizeOptions opt) {
  return AmplitudeDistribution(g, k, std::move(opt));
}

double relative_residual(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kResidualFloor});
}

FactorizationReport factorization_check(const AmplitudeDistribution& a, const PartitionPiece& piece,
                                        const SmoothFunction& phi) {
  const int d = a.kernel().d();
  if (piece.n() != a.graph().n()) throw DomainError("factorization_check: piece does not match the graph");
  auto box = phi.support();
  if (!box || !box->bounded()) throw PreconditionError("factorization_check: phi must have a bounded support box");
  for (int i : piece.first)
    for (int j : piece.second)
      if (!(pair_separation_lower_bound(*box, d, i, j) > 0.0))
        throw PreconditionError("factorization_check: supp phi meets the coincidence locus x" + std::to_string(i + 1) +
                                " = x" + std::to_string(j + 1));
  FactorizationReport r;
  r.lhs = a.pair(phi);
  r.rhs = a.pair_factorized(piece, phi, 1);
  r.residual = relative_residual(r.lhs, r.rhs);
  return r;
}

FactorizationReport consistency_check(const AmplitudeDistribution& a, const PartitionPiece& p1,
                                      const PartitionPiece& p2, const SmoothFunction& phi) {
  const int n = a.graph().n(), d = a.kernel().d();
  if (p1.n() != n || p2.n() != n) throw DomainError("consistency_check: piece does not match the graph");
  auto box = phi.support();
  if (!box || !box->bounded()) throw DomainError("consistency_check: phi must have a bounded support box");
  const int dim = n * d;
  const int per_axis = dim <= 6 ? 5 : 3;
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(per_axis);
  const double sigma0 = a.partition().sigma0();
  bool found = false;
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (std::size_t idx = 0; idx < total && !found; ++idx) {
    std::size_t rem = idx;
    for (int i = 0; i < dim; ++i) {
      const int k = static_cast<int>(rem % static_cast<std::size_t>(per_axis));
      rem /= static_cast<std::size_t>(per_axis);
      const auto u = static_cast<std::size_t>(i);
      x[u] = box->lo[u] + (box->hi[u] - box->lo[u]) * (k + 0.5) / per_axis;
    }
    try {
      found = piece_contains_thresholded(p1, x, d, sigma0) && piece_contains_thresholded(p2, x, d, sigma0);
    } catch (const SingularLocusError&) {
    }
  }
  if (!found) throw DomainError("consistency_check: supp phi misses the thresholded intersection of the pieces");
  FactorizationReport r;
  r.lhs = a.pair_factorized(p1, phi, 0);
  if (p1 == p2) {
    r.rhs = r.lhs;
    r.residual = 0.0;
    return r;
  }
  r.rhs = a.pair_factorized(p2, phi, 1);
  r.residual = relative_residual(r.lhs, r.rhs);
  return r;
}

}  // namespace distrenorm
