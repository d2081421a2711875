#include "distrenorm/extension.hpp"

#include <cmath>
#include <sstream>

#include "distrenorm/errors.hpp"
#include "distrenorm/kernels.hpp"

namespace distrenorm {

namespace {

Box compact_support(const SmoothFunction& phi) {
  auto b = phi.support();
  if (!b || !b->bounded()) throw DomainError("test function must have a declared compact support");
  return *b;
}

double factorial_of(std::span<const int> beta) {
  double f = 1.0;
  for (int b : beta)
    for (int i = 2; i <= b; ++i) f *= i;
  return f;
}

// Transverse Taylor polynomial about the nearest set point, for linear sets
// with a nonempty along part. Built from composed functions so jets are exact.
SmoothFunction transverse_taylor(const ClosedSet& set, const SmoothFunction& phi, int m) {
  const int dim = set.ambient_dim();
  const auto& e = set.along();
  const auto& n = set.normal();
  const int along = e.rows, codim = n.rows;
  const auto& o = set.origin();
  // psi(u, h) = phi(o + E^T u + N^T h)
  LinearMap q(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < along; ++i) q(j, i) = e(i, j);
    for (int i = 0; i < codim; ++i) q(j, along + i) = n(i, j);
  }
  const SmoothFunction psi = fn::compose_affine(phi, q, o);
  // x -> (E (x - o), 0)
  LinearMap r(dim, dim);
  std::vector<double> rb(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < along; ++i)
    for (int j = 0; j < dim; ++j) {
      r(i, j) = e(i, j);
      rb[static_cast<std::size_t>(i)] -= e(i, j) * o[static_cast<std::size_t>(j)];
    }
  // x -> N (x - o)
  std::vector<double> nb(static_cast<std::size_t>(codim), 0.0);
  for (int i = 0; i < codim; ++i)
    for (int j = 0; j < dim; ++j) nb[static_cast<std::size_t>(i)] -= n(i, j) * o[static_cast<std::size_t>(j)];
  const std::vector<double> zero_h(static_cast<std::size_t>(codim), 0.0);

  const auto& table = MultiIndexTable::get(codim, m);
  SmoothFunction total;
  for (std::size_t rank = 0; rank < table.size(); ++rank) {
    auto ex = table.exponents(rank);
    std::vector<int> beta(ex.begin(), ex.end());
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    for (int i = 0; i < codim; ++i) alpha[static_cast<std::size_t>(along + i)] = beta[static_cast<std::size_t>(i)];
    const SmoothFunction d = rank == 0 ? psi : fn::derivative(psi, alpha);
    SmoothFunction term = fn::compose_affine(d, r, rb);
    if (rank > 0) {
      term = (1.0 / factorial_of(beta)) * (term * fn::compose_affine(fn::monomial(zero_h, beta), n, nb));
    }
    total = rank == 0 ? term : total + term;
  }
  return total;
}

}  // namespace

RenormScheme::RenormScheme(ClosedSet s, int m, double rin, double rout)
    : set(std::move(s)), order(m), r_in(rin), r_out(rout) {
  if (!set.linear()) throw CapabilityError("renormalization schemes need a point, affine or small-diagonal set");
  if (order < kNoSubtraction || order > kMaxJetOrder) throw ParameterError("scheme order out of range");
  if (!(r_in > 0.0) || !(r_out > r_in) || !std::isfinite(r_out)) throw ParameterError("scheme window needs 0 < r_in < r_out");
}

SmoothFunction RenormScheme::window() const { return distance_ramp(set, r_in, r_out); }

std::string RenormScheme::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "scheme(" << set.describe() << ",m=";
  if (subtracts()) os << order;
  else os << "none";
  os << ",window=[" << r_in << "," << r_out << "])";
  return os.str();
}

SmoothFunction project_D(const RenormScheme& s, const SmoothFunction& phi) {
  if (phi.dim() != s.set.ambient_dim()) throw DomainError("projection: dimension mismatch");
  if (!s.subtracts() || phi.is_zero()) return fn::zero(phi.dim());
  const Box b = compact_support(phi);
  if (s.set.distance_lower_bound(b) > 0.0) return fn::zero(phi.dim());
  if (s.set.kind() == SetKind::Point) {
    const Jet j = phi.jet(s.set.origin(), s.order);
    if (j.is_zero()) return fn::zero(phi.dim());
    return taylor_field(j, s.set.origin(), s.order) * s.window();
  }
  return fn::with_support(transverse_taylor(s.set, phi, s.order) * s.window(), b.expanded(s.r_out));
}

SmoothFunction project_I(const RenormScheme& s, const SmoothFunction& phi) {
  SmoothFunction p = project_D(s, phi);
  if (p.is_zero()) return phi;
  return fn::with_support(phi - p, compact_support(phi).hull(*p.support()));
}

double LadderSpec::lambda(int j) const { return std::ldexp(1.0, -j); }

void LadderSpec::validate() const {
  if (j_min < 0 || j_max < j_min + 4 || j_max > 60) throw ParameterError("ladder needs 0 <= j_min, j_max >= j_min + 4, j_max <= 60");
}

namespace {

class ExtendedNode final : public DistributionNode {
 public:
  ExtendedNode(Distribution t, RenormScheme s, LadderSpec l) : t_(std::move(t)), s_(std::move(s)), ladder_(l) {}
  int dim() const override { return t_.dim(); }
  double pair(const SmoothFunction& phi, double md) const override {
    if (!s_.subtracts()) return t_.pair(phi, md);
    return t_.pair(project_I(s_, phi), md);
  }
  std::string describe() const override { return "extended(" + t_.describe() + "," + s_.describe() + ")"; }
  std::optional<Density> flat_density() const override {
    if (s_.subtracts()) return std::nullopt;
    return t_.flat_density();
  }
  const Distribution& base() const { return t_; }
  const RenormScheme& scheme() const { return s_; }
  const LadderSpec& ladder() const { return ladder_; }

 private:
  Distribution t_;
  RenormScheme s_;
  LadderSpec ladder_;
};

// Translation-invariant regular distribution along a diagonal: the whole
// ladder reduces to weighted integrals of one marginal over R^codim.
bool fubini_capable(const Distribution& t, const ClosedSet& set) {
  auto r = dynamic_cast<const RegularNode*>(&t.node());
  return r && r->translation_invariant() && set.kind() != SetKind::Point &&
         r->spec().method != QuadratureMethod::MonteCarlo && r->set() && *r->set() == set;
}

}  // namespace

Distribution extend(const Distribution& t, const RenormScheme& scheme, LadderSpec ladder) {
  ladder.validate();
  if (t.dim() != scheme.set.ambient_dim()) throw DomainError("extension: scheme set has wrong dimension");
  if (auto r = dynamic_cast<const RegularNode*>(&t.node()); r && r->set() && !(*r->set() == scheme.set))
    throw DomainError("extension: scheme set does not match the singular set of the density");
  return Distribution(std::make_shared<ExtendedNode>(t, scheme, ladder));
}

const RenormScheme* extension_scheme(const Distribution& e) {
  auto n = dynamic_cast<const ExtendedNode*>(&e.node());
  return n ? &n->scheme() : nullptr;
}

ExtensionResult evaluate_extension(const Distribution& extended, const SmoothFunction& phi) {
  auto node = dynamic_cast<const ExtendedNode*>(&extended.node());
  if (!node) throw DomainError("evaluate_extension needs an extended distribution");
  if (phi.dim() != extended.dim()) throw DomainError("test function dimension does not match the distribution");
  const Distribution& t = node->base();
  const RenormScheme& s = node->scheme();
  const LadderSpec& ls = node->ladder();
  const Box b = compact_support(phi);
  const double dlow = s.set.distance_lower_bound(b);

  ExtensionResult res;
  res.distribution = extended;
  res.restricted = dlow >= ls.lambda(ls.j_min);
  const SmoothFunction iphi = s.subtracts() ? project_I(s, phi) : phi;
  const CutoffFamily fam(s.set);
  const int rungs = ls.j_max - ls.j_min + 1;

  std::vector<double> raw;  // raw[0] = F(lambda_first), raw[i] = increment into rung i
  double direct = std::numeric_limits<double>::quiet_NaN();
  bool direct_diverged = false;
  std::string direct_msg;

  if (fubini_capable(t, s.set)) {
    auto reg = dynamic_cast<const RegularNode*>(&t.node());
    const QuadratureSpec& spec = reg->spec();
    Marginal marginal(s.set, iphi, spec);
    const ClosedSet origin = ClosedSet::point(std::vector<double>(static_cast<std::size_t>(s.set.codimension()), 0.0));
    auto weighted = [&](const std::function<double(double)>& weight, double min_distance) {
      const Integrand g = [&](std::span<const double> h) {
        double rr = 0.0;
        for (double v : h) rr += v * v;
        const double w = weight(std::sqrt(rr));
        if (w == 0.0) return 0.0;
        const double m = marginal(h);
        return m == 0.0 ? 0.0 : w * m * reg->normal_density(h);
      };
      return integrate_near_set(g, origin, marginal.normal_box(), spec, min_distance).value;
    };
    raw = kernels::map_indexed(static_cast<std::size_t>(rungs), [&](std::size_t i) {
      const int j = ls.j_min + static_cast<int>(i);
      const double lam = ls.lambda(j);
      if (i == 0) return weighted([lam](double d) { return 1.0 - ramp_value(d, lam / 8.0, lam); }, lam / 8.0);
      const double prev = ls.lambda(j - 1);
      if (dlow >= prev) return 0.0;
      return weighted([lam, prev](double d) { return ramp_value(d, prev / 8.0, prev) - ramp_value(d, lam / 8.0, lam); },
                      lam / 8.0);
    });
    try {
      direct = weighted([](double) { return 1.0; }, 0.0);
    } catch (const DivergenceError& e) {
      direct_diverged = true;
      direct_msg = e.what();
    }
  } else {
    raw = kernels::map_indexed(static_cast<std::size_t>(rungs), [&](std::size_t i) {
      const int j = ls.j_min + static_cast<int>(i);
      const double lam = ls.lambda(j);
      if (i == 0) return t.pair(fam.beta_function(lam) * iphi, lam / 8.0);
      const double prev = ls.lambda(j - 1);
      if (dlow >= prev) return 0.0;
      return t.pair((fam.chi_function(prev) - fam.chi_function(lam)) * iphi, lam / 8.0);
    });
    try {
      direct = t.pair(iphi);
    } catch (const DivergenceError& e) {
      direct_diverged = true;
      direct_msg = e.what();
    }
  }

  kernels::OrderedAccumulator acc;
  for (int i = 0; i < rungs; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    LadderRung r;
    r.j = ls.j_min + i;
    r.lambda = ls.lambda(r.j);
    acc.add(raw[ii]);
    r.F = acc.value();
    r.deltaF = i == 0 ? std::numeric_limits<double>::quiet_NaN() : raw[ii];
    if (i >= 2) {
      const double p = std::fabs(raw[ii - 1]), q = std::fabs(raw[ii]);
      r.ratio = q == 0.0 ? 0.0 : p == 0.0 ? std::numeric_limits<double>::infinity() : q / p;
    } else {
      r.ratio = std::numeric_limits<double>::quiet_NaN();
    }
    res.ladder.push_back(r);
  }
  const auto& last = res.ladder.back();
  res.tail_ratio = last.ratio;
  bool all_small = true, all_large = true;
  for (int i = rungs - 4; i < rungs; ++i) {
    const double q = res.ladder[static_cast<std::size_t>(i)].ratio;
    all_small = all_small && q < 0.9;
    all_large = all_large && q >= 1.0;
  }
  res.converged = all_small;
  res.extrapolated = last.F;
  const double d1 = raw[static_cast<std::size_t>(rungs - 1)], d0 = raw[static_cast<std::size_t>(rungs - 2)];
  if (d0 != 0.0) {
    const double rho = d1 / d0;
    if (std::fabs(rho) < 1.0) res.extrapolated = last.F + d1 * rho / (1.0 - rho);
  }
  res.direct = direct;
  res.diverged = direct_diverged || all_large;
  if (direct_diverged) {
    res.diagnostic = "subtracted integrand is not integrable (scheme order below the divergence degree): " + direct_msg;
  } else if (all_large) {
    res.diagnostic = "ladder increments do not decay";
  } else if (!res.converged) {
    res.diagnostic = "ladder tail ratios not below 0.9 on the last 4 rungs";
  }
  if (!res.diverged) res.value = std::isfinite(direct) ? direct : res.extrapolated;
  return res;
}

double counterterm_pair(const Distribution& t, const RenormScheme& scheme, double lambda, const SmoothFunction& phi) {
  check_lambda(lambda);
  const SmoothFunction p = project_D(scheme, phi);
  if (p.is_zero()) return 0.0;
  const CutoffFamily fam(scheme.set);
  return t.pair(fam.beta_function(lambda) * p, lambda / 8.0);
}

SchemeDifference scheme_difference(const Distribution& t, const RenormScheme& s1, const RenormScheme& s2, double tol) {
  if (!(s1.set == s2.set)) throw DomainError("scheme difference: schemes live on different sets");
  if (s1.order != s2.order) throw DomainError("scheme difference: schemes have different orders");
  if (s1.set.kind() != SetKind::Point) throw CapabilityError("scheme difference is implemented for point sets");
  const Distribution e1 = extend(t, s1), e2 = extend(t, s2);
  const auto& p = s1.set.origin();
  const int dim = s1.set.ambient_dim();
  SchemeDifference out;
  if (s1.subtracts()) {
    const double r_pl = std::min(s1.r_in, s2.r_in);
    const SmoothFunction plateau = distance_ramp(s1.set, 0.5 * r_pl, r_pl);
    const auto& table = MultiIndexTable::get(dim, s1.order);
    auto coeffs = kernels::map_indexed(table.size(), [&](std::size_t rank) {
      auto ex = table.exponents(rank);
      std::vector<int> beta(ex.begin(), ex.end());
      const SmoothFunction probe =
          (1.0 / table.factorial(rank)) * (fn::monomial(p, beta) * plateau);
      const double delta = e1.pair(probe) - e2.pair(probe);
      return (table.degree(rank) % 2 ? -1.0 : 1.0) * delta;
    });
    for (std::size_t rank = 0; rank < table.size(); ++rank) {
      auto ex = table.exponents(rank);
      out.coefficients.emplace_back(std::vector<int>(ex.begin(), ex.end()), coeffs[rank]);
    }
  }
  out.distribution = point_supported(p, out.coefficients);
  // Held-out probe: an off-centre bump covering both windows.
  std::vector<double> c(p);
  for (int i = 0; i < dim; ++i) c[static_cast<std::size_t>(i)] += 0.1 / std::sqrt(static_cast<double>(dim));
  const SmoothFunction held = fn::bump(c, std::max(s1.r_out, s2.r_out) + 0.5);
  const double actual = e1.pair(held) - e2.pair(held);
  const double predicted = out.distribution.pair(held);
  out.residual = std::fabs(actual - predicted) / std::max(1.0, std::fabs(actual));
  if (out.residual > tol) {
    std::ostringstream os;
    os << "scheme difference is not reproduced by its fitted jet coefficients (residual " << out.residual << ")";
    throw InconsistencyError(os.str());
  }
  return out;
}

int default_order(double s_fit, int codim) {
  if (s_fit < codim - 0.1) return kNoSubtraction;
  return std::max(0, static_cast<int>(std::ceil(s_fit - 0.1)) - codim + 1);
}

int default_order(const SmoothFunction& density, const ClosedSet& set, const Box& k) {
  return default_order(growth_fit_function(density, set, k, 0).s, set.codimension());
}

}  // namespace distrenorm
