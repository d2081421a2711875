#include "distrenorm/cutoff.hpp"

#include <algorithm>
#include <cmath>

#include "distrenorm/errors.hpp"

namespace distrenorm {

double ramp_value(double d, double r_in, double r_out) {
  if (d <= r_in) return 1.0;
  if (d >= r_out) return 0.0;
  return univariate::smoothstep_value((r_out - d) / (r_out - r_in));
}

std::vector<double> ramp_taylor(double d, double r_in, double r_out, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  if (d <= r_in) {
    c[0] = 1.0;
    return c;
  }
  if (d >= r_out) return c;
  const double w = r_out - r_in;
  c = univariate::smoothstep((r_out - d) / w, order);
  double f = 1.0;
  for (int n = 1; n <= order; ++n) {
    f *= -1.0 / w;
    c[static_cast<std::size_t>(n)] *= f;
  }
  return c;
}

namespace {

class RampNode final : public FunctionNode {
 public:
  RampNode(ClosedSet set, double r_in, double r_out, bool complement)
      : set_(std::move(set)), dist_(set_.distance_function()), r_in_(r_in), r_out_(r_out), complement_(complement) {
    if (!(r_in >= 0.0) || !(r_out > r_in)) throw ParameterError("ramp: need 0 <= r_in < r_out");
  }
  int dim() const override { return set_.ambient_dim(); }
  double value(std::span<const double> x) const override {
    const double v = ramp_value(set_.distance(x), r_in_, r_out_);
    return complement_ ? 1.0 - v : v;
  }
  Jet jet(std::span<const double> x, int order) const override {
    const double d = set_.distance(x);
    Jet out;
    if (d <= r_in_)
      out = Jet::constant(dim(), order, 1.0);
    else if (d >= r_out_)
      out = Jet(dim(), order);
    else
      out = dist_.jet(x, order).compose(ramp_taylor(d, r_in_, r_out_, order));
    if (complement_) {
      out *= -1.0;
      out.add_constant(1.0);
    }
    return out;
  }
  std::optional<Box> support() const override {
    if (complement_ || set_.kind() != SetKind::Point) return std::nullopt;
    return Box::cube(set_.origin(), r_out_);
  }

 private:
  ClosedSet set_;
  SmoothFunction dist_;
  double r_in_, r_out_;
  bool complement_;
};

}  // namespace

SmoothFunction distance_ramp(const ClosedSet& set, double r_in, double r_out) {
  return SmoothFunction(std::make_shared<RampNode>(set, r_in, r_out, false));
}

SmoothFunction distance_coramp(const ClosedSet& set, double r_in, double r_out) {
  return SmoothFunction(std::make_shared<RampNode>(set, r_in, r_out, true));
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || lambda > 1.0) throw ParameterError("cutoff: lambda must lie in (0, 1]");
}

double CutoffFamily::chi(double lambda, std::span<const double> x) const {
  check_lambda(lambda);
  return ramp_value(set_.distance(x), lambda / 8.0, lambda);
}

Jet CutoffFamily::chi_jet(double lambda, std::span<const double> x, int order) const {
  check_lambda(lambda);
  return chi_function(lambda).jet(x, order);
}

SmoothFunction CutoffFamily::chi_function(double lambda) const {
  check_lambda(lambda);
  return distance_ramp(set_, lambda / 8.0, lambda);
}

SmoothFunction CutoffFamily::beta_function(double lambda) const {
  check_lambda(lambda);
  return distance_coramp(set_, lambda / 8.0, lambda);
}

namespace {

// Points of the set at which the vanishing precondition is sampled.
std::vector<std::vector<double>> set_samples(const ClosedSet& set, const Box& k) {
  std::vector<std::vector<double>> out;
  if (set.kind() == SetKind::Point) {
    out.push_back(set.origin());
    return out;
  }
  if (!set.linear()) throw CapabilityError("ideal decay: sampling is implemented for linear sets");
  auto base = set.project(k.center());
  out.push_back(base);
  const double r = k.half_diagonal();
  for (int i = 0; i < set.along().rows; ++i)
    for (double s : {-0.5, 0.5}) {
      auto p = base;
      for (int j = 0; j < set.ambient_dim(); ++j) p[static_cast<std::size_t>(j)] += s * r * set.along()(i, j);
      out.push_back(p);
    }
  return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

IdealDecayReport ideal_decay_check(const CutoffFamily& fam, const SmoothFunction& phi, int m, int n, const Box& k,
                                   const IdealDecayOptions& opt) {
  if (m < 0 || n < 0 || m + n > kMaxJetOrder) throw ParameterError("ideal decay: bad (m, n)");
  if (opt.j_min < 0 || opt.j_max - opt.j_min < 1) throw ParameterError("ideal decay: need at least two rungs");
  const auto& set = fam.set();
  if (k.dim() != set.ambient_dim() || k.empty() || !k.bounded()) throw DomainError("ideal decay: bad region K");
  if (m + n > 0) {
    for (const auto& p : set_samples(set, k)) {
      const auto j = phi.jet(p, m + n - 1);
      for (std::size_t r = 0; r < j.size(); ++r)
        if (std::fabs(j.derivative_at(r)) > opt.vanishing_tol)
          throw PreconditionError("ideal decay: phi does not vanish to the required order on the set");
    }
  }
  IdealDecayReport rep;
  std::vector<double> lx, ly;
  for (int j = opt.j_min; j <= opt.j_max; ++j) {
    const double lambda = std::ldexp(1.0, -j);
    Box region = k;
    if (set.kind() == SetKind::Point) region = k.intersect(Box::cube(set.origin(), lambda));
    double v = 0.0;
    if (!region.empty()) v = seminorm(fam.chi_function(lambda) * phi, {m, region, opt.resolution});
    rep.lambdas.push_back(lambda);
    rep.norms.push_back(v);
    if (v > 0.0) {
      lx.push_back(std::log(lambda));
      ly.push_back(std::log(v));
    }
  }
  if (lx.size() >= 2) rep.slope = least_squares_slope(lx, ly);
  return rep;
}

}  // namespace distrenorm
