#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include <unistd.h>

#include "distrenorm/errors.hpp"
#include "distrenorm/extension.hpp"
#include "distrenorm/feynman.hpp"
#include "distrenorm/kernels.hpp"
#include "distrenorm/oracles.hpp"
#include "distrenorm/runner.hpp"

namespace distrenorm::cli {

namespace orc = distrenorm::oracle;

namespace {

constexpr long double kPiL = std::numbers::pi_v<long double>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- oracle formulas (long double, independent of the engine) ----

long double bump_1d(long double x, long double c, long double r, int power) {
  return std::pow(x - c, static_cast<long double>(power)) * orc::bump(x - c, r);
}

// Finite part of 1/|x| against a 1-D (monomial) bump, one subtraction.
double finite_part_bump(double c, double r, int power, double r_in, double r_out) {
  const long double R = std::max<long double>(r_out, std::fabs(c) + r);
  auto phi = [=](long double x) { return bump_1d(x, c, r, power); };
  return static_cast<double>(orc::finite_part_inverse_abs(phi, r_in, r_out, R,
                                                          {std::fabs(c - r), std::fabs(c + r)}));
}

double improper_power_bump(double c, double r, int power, double p) {
  const long double R = std::fabs(c) + r;
  auto phi = [=](long double x) { return bump_1d(x, c, r, power); };
  return static_cast<double>(orc::improper_power(phi, p, R));
}

long double green_radial_3d(long double rho, long double mass) { return std::exp(-mass * rho) / (4 * kPiL * rho); }

// Integral of the standard bump of radius r over R^3.
long double bump_mass_3d(long double r) {
  return orc::radial_integral_3d([](long double) { return 1.0L; }, [r](long double p) { return orc::bump(p, r); }, r);
}

// <R_2(G^n), A(mean) B(diff)> in R^3 with radial B of radius rb, radial window
// radii given in the distance to the diagonal (|x1 - x2| / sqrt 2).
double two_point_3d(int n, double mass, double ra, double rb, int order, double r_in, double r_out) {
  auto kernel = [=](long double rho) { return std::pow(green_radial_3d(rho, mass), static_cast<long double>(n)); };
  auto profile = [=](long double rho) { return orc::bump(rho, rb); };
  const long double m = bump_mass_3d(ra);
  if (order == kNoSubtraction) return static_cast<double>(m * orc::radial_integral_3d(kernel, profile, rb));
  const long double s2 = std::sqrt(2.0L);
  const long double R = std::max<long double>(rb, s2 * r_out);
  return static_cast<double>(m * orc::radial_finite_part_3d(kernel, profile, s2 * r_in, s2 * r_out, R, {rb}));
}

// <G^n(x1 - x2), A(mean) B(diff)> in R^1 (no subtraction), B centered at cb.
double two_point_1d(int n, double mass, double ra, double cb, double rb) {
  auto g = [=](long double r) {
    r = std::fabs(r);
    return mass == 0 ? -r / 2 : std::exp(-mass * r) / (2 * mass);
  };
  auto f = [=](long double r) { return std::pow(g(r), static_cast<long double>(n)) * orc::bump(r - cb, rb); };
  const long double mass_a = orc::tanh_sinh([=](long double x) { return orc::bump(x, ra); }, -ra, ra);
  long double b = 0;
  const long double lo = cb - rb, hi = cb + rb;
  if (lo < 0 && hi > 0)
    b = orc::tanh_sinh(f, lo, 0) + orc::tanh_sinh(f, 0, hi);
  else
    b = orc::tanh_sinh(f, lo, hi);
  return static_cast<double>(mass_a * b);
}

// ---- builders ----

std::vector<double> vec(const Json& j) { return j.get<std::vector<double>>(); }

ClosedSet build_set(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "point") return ClosedSet::point(vec(j.at("point")));
  if (type == "affine") return ClosedSet::affine_subspace(vec(j.at("base")), j.at("directions").get<std::vector<std::vector<double>>>());
  const int n = j.at("n").get<int>(), d = j.at("d").get<int>();
  return type == "small-diagonal" ? ClosedSet::small_diagonal(n, d) : ClosedSet::big_diagonal(n, d);
}

SmoothFunction mean_diff_bump(const std::vector<double>& ca, double ra, const std::vector<double>& cb, double rb) {
  const int d = static_cast<int>(ca.size());
  LinearMap mean(d, 2 * d), diff(d, 2 * d);
  for (int a = 0; a < d; ++a) {
    mean(a, a) = 0.5;
    mean(a, d + a) = 0.5;
    diff(a, a) = 1.0;
    diff(a, d + a) = -1.0;
  }
  std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  auto f = fn::compose_affine(fn::bump(ca, ra), mean, zero) * fn::compose_affine(fn::bump(cb, rb), diff, zero);
  std::vector<double> lo(static_cast<std::size_t>(2 * d)), hi(static_cast<std::size_t>(2 * d));
  for (int a = 0; a < d; ++a) {
    const auto u = static_cast<std::size_t>(a), v = static_cast<std::size_t>(a + d);
    const double w = ra + 0.5 * rb;
    lo[u] = ca[u] + 0.5 * cb[u] - w;
    hi[u] = ca[u] + 0.5 * cb[u] + w;
    lo[v] = ca[u] - 0.5 * cb[u] - w;
    hi[v] = ca[u] - 0.5 * cb[u] + w;
  }
  return fn::with_support(f, Box(lo, hi));
}

SmoothFunction build_phi(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "bump") return fn::bump(vec(j.at("center")), j.at("radius").get<double>());
  if (type == "bump-product") return fn::bump_product(vec(j.at("center")), vec(j.at("radii")));
  if (type == "monomial-bump") {
    const auto c = vec(j.at("center"));
    const auto k = j.at("powers").get<std::vector<int>>();
    return fn::monomial(c, k) * fn::bump(c, j.at("radius").get<double>());
  }
  return mean_diff_bump(vec(j.at("mean_center")), j.at("mean_radius").get<double>(), vec(j.at("diff_center")),
                        j.at("diff_radius").get<double>());
}

QuadratureSpec build_spec(const Json& j, std::uint64_t seed) {
  QuadratureSpec s;
  s.abs_tol = j.at("abs_tol").get<double>();
  s.rel_tol = j.at("rel_tol").get<double>();
  s.max_depth = j.at("max_depth").get<int>();
  s.shell_refinement = j.at("shell_refinement").get<bool>();
  s.max_subdivisions = j.at("max_subdivisions").get<int>();
  s.edge_refinement = j.at("edge_refinement").get<int>();
  s.method = quadrature_method_from_string(j.at("method").get<std::string>());
  s.mc_samples = j.at("mc_samples").get<std::uint64_t>();
  s.seed = seed;
  return s;
}

LadderSpec build_ladder(const Json& j) {
  LadderSpec l;
  l.j_min = j.at("j_min").get<int>();
  l.j_max = j.at("j_max").get<int>();
  return l;
}

GrowthOptions build_growth(const Json& j, std::uint64_t seed) {
  GrowthOptions g;
  g.j_min = j.at("j_min").get<int>();
  g.j_max = j.at("j_max").get<int>();
  g.resolution = j.at("resolution").get<int>();
  g.directions = j.at("directions").get<int>();
  g.samples = j.at("samples").get<int>();
  g.seed = seed;
  return g;
}

int order_of(const Json& v, int auto_value) {
  if (v.is_string()) return v.get<std::string>() == "none" ? kNoSubtraction : auto_value;
  return v.get<int>();
}

std::string order_label(int m) { return m == kNoSubtraction ? "none" : m == kAutoOrder ? "auto" : std::to_string(m); }

// ---- CSV ----

class Csv {
 public:
  explicit Csv(const std::string& header) : text_(header + "\n") {}
  Csv& cell(const std::string& s) {
    sep();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      text_ += '"';
      for (char c : s) {
        if (c == '"') text_ += '"';
        text_ += c;
      }
      text_ += '"';
    } else {
      text_ += s;
    }
    return *this;
  }
  Csv& num(double v) {
    sep();
    text_ += format_double(v);
    return *this;
  }
  Csv& integer(long long v) {
    sep();
    text_ += std::to_string(v);
    return *this;
  }
  Csv& flag(bool b) { return integer(b ? 1 : 0); }
  void end() {
    text_ += '\n';
    fresh_ = true;
  }
  const std::string& text() const { return text_; }

 private:
  void sep() {
    if (!fresh_) text_ += ',';
    fresh_ = false;
  }
  std::string text_;
  bool fresh_ = true;
};

const KindInfo& info(const std::string& kind) {
  for (const auto& k : experiment_kinds())
    if (k.name == kind) return k;
  throw ConfigError("unknown experiment kind '" + kind + "'");
}

// Worst status seen so far, ordered as for exit codes.
void worsen(Status& s, Status t) {
  auto rank = [](Status x) {
    switch (x) {
      case Status::Pass: return 0;
      case Status::Fail: return 1;
      case Status::Diverged: return 2;
      case Status::Error: return 3;
    }
    return 3;
  };
  if (rank(t) > rank(s)) s = t;
}

struct Job {
  const Json& e;
  std::uint64_t seed;
  ExperimentOutcome& out;
  Csv csv;
  void fail(const std::string& msg) {
    worsen(out.status, Status::Fail);
    if (out.message.empty()) out.message = msg;
  }
  void diverged(const std::string& msg) {
    if (out.status != Status::Diverged && out.status != Status::Error) out.message = msg;
    worsen(out.status, Status::Diverged);
  }
};

Distribution power_density(const ClosedSet& set, double p, const QuadratureSpec& spec) {
  RegularOptions o;
  o.set = set;
  o.translation_invariant = set.linear();
  o.spec = spec;
  const int dim = set.ambient_dim();
  return regular(
      dim, [set, p](std::span<const double> x) { return std::pow(set.distance(x), -p); }, o);
}

void run_finite_part(Job& job) {
  const auto& e = job.e;
  const double p = e.at("exponent").get<double>();
  const int m = order_of(e.at("order"), 0);
  const double r_in = e.at("r_in").get<double>(), r_out = e.at("r_out").get<double>();
  const auto& pj = e.at("phi");
  const double c = pj.at("center")[0].get<double>(), r = pj.at("radius").get<double>();
  const int power = pj.contains("powers") ? pj.at("powers")[0].get<int>() : 0;
  const double tol = e.at("tolerance").get<double>();

  const auto set = ClosedSet::point({0.0});
  auto ext = extend(power_density(set, p, build_spec(e.at("quadrature"), job.seed)), RenormScheme(set, m, r_in, r_out),
                    build_ladder(e.at("ladder")));
  const auto res = evaluate_extension(ext, build_phi(pj));

  double oracle = kNaN;
  if (p == 1.0 && (m == 0 || m == 1))
    oracle = finite_part_bump(c, r, power, r_in, r_out);  // the first-order term is odd and drops out
  else if (p < 1.0 && m == kNoSubtraction)
    oracle = improper_power_bump(c, r, power, p);
  const double err = std::fabs(res.extrapolated - oracle);
  for (const auto& rung : res.ladder)
    job.csv.integer(rung.j).num(rung.lambda).num(rung.F).num(rung.deltaF).num(rung.ratio).num(res.extrapolated)
        .num(oracle).num(err).end();

  job.out.metrics = Json{{"value", res.value},       {"direct", res.direct},       {"extrapolated", res.extrapolated},
                         {"tail_ratio", res.tail_ratio}, {"converged", res.converged}, {"restricted", res.restricted},
                         {"oracle", oracle},         {"abs_err", err}};
  if (res.diverged) {
    job.diverged(res.diagnostic);
  } else if (!std::isnan(oracle)) {
    if (!(err <= tol)) job.fail("extrapolated value differs from the oracle by " + format_double(err));
  } else if (!res.converged && !res.restricted) {
    job.fail("ladder did not converge (no oracle for this exponent and order)");
  }
}

void run_extend(Job& job) {
  const auto& e = job.e;
  const auto set = build_set(e.at("set"));
  const double p = e.at("exponent").get<double>();
  const int m = order_of(e.at("order"), default_order(p, set.codimension()));
  const double tol = e.at("tolerance").get<double>();
  auto ext = extend(power_density(set, p, build_spec(e.at("quadrature"), job.seed)),
                    RenormScheme(set, m, e.at("r_in").get<double>(), e.at("r_out").get<double>()),
                    build_ladder(e.at("ladder")));
  Json rows = Json::array();
  std::size_t id = 0;
  for (const auto& pj : e.at("phis")) {
    const auto res = evaluate_extension(ext, build_phi(pj));
    const double err = std::fabs(res.extrapolated - res.value);
    job.csv.integer(static_cast<long long>(id)).num(res.value).num(res.direct).num(res.extrapolated)
        .num(res.tail_ratio).flag(res.converged).flag(res.restricted).flag(res.diverged).num(err).end();
    rows.push_back(Json{{"phi_id", id}, {"value", res.value}, {"extrapolated", res.extrapolated}, {"abs_err", err}});
    if (res.diverged)
      job.diverged("phi " + std::to_string(id) + ": " + res.diagnostic);
    else if (!res.restricted && !(res.converged && err <= tol))
      job.fail("phi " + std::to_string(id) + ": ladder does not settle on the extension value");
    ++id;
  }
  job.out.metrics = Json{{"order", order_label(m)}, {"phis", rows}};
}

void run_growth(Job& job) {
  const auto& e = job.e;
  const auto& fj = e.at("function");
  const auto type = fj.at("type").get<std::string>();
  SmoothFunction f;
  int dim = 1;
  if (type == "green") {
    dim = fj.at("d").get<int>();
    f = green_function_at(GreenKernel(dim, fj.at("mass").get<double>()), std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  } else {
    dim = fj.at("dimension").get<int>();
    const std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
    auto norm = fn::affine_norm(LinearMap::identity(dim), zero);
    if (type == "power")
      f = fn::pow(norm, -fj.at("exponent").get<double>());
    else if (type == "log")
      f = fn::log(norm);
    else
      f = fn::cos(fn::coordinate(dim, 0));
  }
  const std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
  const auto est = growth_fit_function(f, ClosedSet::point(zero), Box::cube(zero, e.at("box_half_width").get<double>()),
                                       e.at("order").get<int>(), build_growth(e.at("growth"), job.seed));
  for (const auto& s : est.samples) job.csv.num(s.r).num(s.value).num(est.s).num(est.C).num(est.residual).end();
  job.out.metrics = Json{{"s", est.s}, {"C", est.C}, {"raw_slope", est.raw_slope}, {"residual", est.residual},
                         {"sub_power", est.sub_power}};
  const double tol = e.at("tolerance").get<double>();
  if (!e.at("expected_s").is_null()) {
    const double want = e.at("expected_s").get<double>();
    if (!(std::fabs(est.s - want) <= tol))
      job.fail("fitted exponent " + format_double(est.s) + " is not within " + format_double(tol) + " of " +
               format_double(want));
  }
  if (!e.at("max_s").is_null() && !(est.s <= e.at("max_s").get<double>()))
    job.fail("fitted exponent " + format_double(est.s) + " exceeds " + format_double(e.at("max_s").get<double>()));
}

// A point of the set near which to sample.
std::vector<double> set_point(const ClosedSet& set, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> y(static_cast<std::size_t>(set.ambient_dim()));
  for (auto& v : y) v = u(rng);
  if (set.kind() != SetKind::BigDiagonal) return set.project(y);
  const int n = set.points(), d = set.point_dim();
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int i = pick(rng);
  int j = pick(rng);
  if (j == i) j = (i + 1) % n;
  for (int a = 0; a < d; ++a) y[static_cast<std::size_t>(j * d + a)] = y[static_cast<std::size_t>(i * d + a)];
  return y;
}

void run_cutoff_check(Job& job) {
  const auto& e = job.e;
  const auto samples = e.at("samples").get<long long>();
  std::mt19937_64 rng(job.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long long total = 0;
  for (const auto& sj : e.at("sets")) {
    const auto set = build_set(sj);
    CutoffFamily fam(set);
    for (const auto& lj : e.at("lambdas")) {
      const double lambda = lj.get<double>();
      long long plateau = 0, zero = 0, range = 0;
      for (long long t = 0; t < samples; ++t) {
        auto x = set_point(set, rng);
        // Spread distances over [0, ~2 lambda sqrt(dim)] so both zones are hit.
        for (auto& v : x) v += 2.0 * lambda * u(rng);
        const double d = set.distance(x), v = fam.chi(lambda, x);
        if (d <= lambda / 8 && v != 1.0) ++plateau;
        if (d >= lambda && v != 0.0) ++zero;
        if (v < 0.0 || v > 1.0) ++range;
      }
      job.csv.cell(set.describe()).num(lambda).integer(samples).integer(plateau).integer(zero).integer(range).end();
      total += plateau + zero + range;
    }
  }
  job.out.metrics = Json{{"violations", total}};
  if (total != 0) job.fail(std::to_string(total) + " cutoff exactness violations");
}

void run_green_check(Job& job) {
  const auto& e = job.e;
  const int d = e.at("d").get<int>();
  const double mass = e.at("mass").get<double>();
  const double tol = e.at("tolerance").get<double>(), etol = e.at("exponent_tolerance").get<double>();
  const GreenKernel k(d, mass);
  const auto spec = build_spec(e.at("quadrature"), job.seed);
  double worst = 0;
  for (std::size_t i = 0; i < e.at("points").size(); ++i) {
    const auto y = vec(e.at("points")[i]);
    const auto phi = build_phi(e.at("phis")[i]);
    const auto g = green_function_at(k, y);
    RegularOptions o;
    o.set = ClosedSet::point(y);
    o.spec = spec;
    const auto t = regular(d, [g](std::span<const double> x) { return g.value(x); }, o);
    const double lhs = t.pair(fn::helmholtz(phi, mass)), ref = phi.value(y);
    const double dev = std::fabs(lhs - ref);
    const bool ok = dev <= tol;
    worst = std::max(worst, dev);
    job.csv.cell("identity").integer(static_cast<long long>(i)).num(lhs).num(ref).num(dev).flag(ok).end();
    if (!ok) job.fail("identity " + std::to_string(i) + ": deviation " + format_double(dev));
  }
  Json exps = Json::array();
  for (const auto& oj : e.at("orders")) {
    const int order = oj.get<int>();
    const auto r = green_temperedness_check(k, order);
    // Logarithmic kernels (d = 2, order 0) have no power to match.
    const bool log_case = d == 2 && order == 0;
    const double dev = std::fabs(r.exponent - r.analytic);
    const bool ok = r.within_bound && (log_case || dev <= etol);
    job.csv.cell("temperedness").integer(order).num(r.exponent).num(r.analytic).num(dev).flag(ok).end();
    exps.push_back(Json{{"order", order}, {"exponent", r.exponent}, {"analytic", r.analytic}, {"bound", r.bound}});
    if (!ok) job.fail("temperedness order " + std::to_string(order) + ": exponent " + format_double(r.exponent));
  }
  job.out.metrics = Json{{"max_identity_deviation", worst}, {"temperedness", exps}};
}

AmplitudeDistribution build_amplitude(const Json& e, std::uint64_t seed) {
  FeynmanGraph g(e.at("n").get<int>(), e.at("edges").get<std::vector<int>>());
  GreenKernel k(e.at("d").get<int>(), e.at("mass").get<double>());
  RenormalizeOptions o;
  for (auto it = e.at("levels").begin(); it != e.at("levels").end(); ++it) {
    LevelScheme l;
    l.order = order_of(it.value().at("order"), kAutoOrder);
    l.r_in = it.value().at("r_in").get<double>();
    l.r_out = it.value().at("r_out").get<double>();
    o.levels[std::stoi(it.key())] = l;
  }
  o.spec = build_spec(e.at("quadrature"), seed);
  o.sigma0 = e.at("sigma0").get<double>();
  if (e.contains("ladder")) o.ladder = build_ladder(e.at("ladder"));
  return renormalize(g, k, o);
}

double amplitude_oracle(const AmplitudeDistribution& a, const Json& e, const Json& pj) {
  if (a.graph().n() != 2 || pj.at("type") != "mean-diff-bump") return kNaN;
  const int d = a.kernel().d(), n12 = a.graph().edge(0, 1);
  const int order = a.levels().back().order;
  const double ra = pj.at("mean_radius").get<double>(), rb = pj.at("diff_radius").get<double>();
  const auto cb = vec(pj.at("diff_center"));
  if (d == 3) {
    for (double v : cb)
      if (v != 0.0) return kNaN;
    // Radial B: the first-order Taylor term integrates to zero over angles.
    if (order != kNoSubtraction && order != 0 && order != 1) return kNaN;
    const auto& lv = e.at("levels").at("2");
    return two_point_3d(n12, a.kernel().mass(), ra, rb, order, lv.at("r_in").get<double>(), lv.at("r_out").get<double>());
  }
  if (d == 1 && order == kNoSubtraction) return two_point_1d(n12, a.kernel().mass(), ra, cb[0], rb);
  return kNaN;
}

void run_amplitude(Job& job) {
  const auto& e = job.e;
  const auto a = build_amplitude(e, job.seed);
  const double tol = e.at("tolerance").get<double>();
  const bool use_oracle = e.at("oracle").get<bool>();
  Csv ladder("phi_id,j,lambda,F,deltaF,ratio");
  Json rows = Json::array();
  std::size_t id = 0;
  for (const auto& pj : e.at("phis")) {
    const auto res = a.evaluate(build_phi(pj));
    const double oracle = use_oracle && !res.diverged ? amplitude_oracle(a, e, pj) : kNaN;
    const double value = std::isfinite(res.top.extrapolated) ? res.top.extrapolated : res.value;
    const double err = std::fabs(value - oracle), rel = err / std::fabs(oracle);
    job.csv.integer(static_cast<long long>(id)).num(res.value).num(res.top.extrapolated).num(res.top.tail_ratio)
        .flag(res.top.converged).flag(res.diverged).num(oracle).num(err).num(rel).end();
    for (const auto& r : res.top.ladder)
      ladder.integer(static_cast<long long>(id)).integer(r.j).num(r.lambda).num(r.F).num(r.deltaF).num(r.ratio).end();
    rows.push_back(Json{{"phi_id", id}, {"value", res.value}, {"extrapolated", res.top.extrapolated},
                        {"oracle", oracle}, {"rel_err", rel}});
    if (res.diverged)
      job.diverged("phi " + std::to_string(id) + ": " + res.diagnostic);
    else if (!std::isfinite(res.value))
      job.fail("phi " + std::to_string(id) + ": non-finite pairing");
    else if (!std::isnan(oracle) && !(rel <= tol))
      job.fail("phi " + std::to_string(id) + ": relative error " + format_double(rel) + " against the oracle");
    ++id;
  }
  Json levels = Json::array();
  for (const auto& l : a.levels())
    levels.push_back(Json{{"level", l.description}, {"order", order_label(l.order)}, {"required", order_label(l.required)}});
  job.out.metrics = Json{{"levels", levels}, {"phis", rows}};
  job.out.files.emplace_back(job.out.name + ".ladder.csv", ladder.text());
}

void run_factorize(Job& job) {
  const auto& e = job.e;
  const auto a = build_amplitude(e, job.seed);
  const double tol = e.at("tolerance").get<double>();
  double worst = 0;
  for (const auto& pl : e.at("pieces")) {
    const auto piece = PartitionPiece::from_label(pl.get<std::string>());
    std::size_t id = 0;
    for (const auto& pj : e.at("phis")) {
      const auto r = factorization_check(a, piece, build_phi(pj));
      job.csv.cell(piece.label()).integer(static_cast<long long>(id)).num(r.lhs).num(r.rhs).num(r.residual).end();
      if (!(r.residual <= tol))
        job.fail(piece.label() + ", phi " + std::to_string(id) + ": residual " + format_double(r.residual));
      worst = std::isnan(r.residual) ? r.residual : std::max(worst, r.residual);
      ++id;
    }
  }
  job.out.metrics = Json{{"max_residual", worst}};
}

void run_consistency(Job& job) {
  const auto& e = job.e;
  const auto a = build_amplitude(e, job.seed);
  const double tol = e.at("tolerance").get<double>();
  double worst = 0;
  for (const auto& pr : e.at("pairs")) {
    const auto p1 = PartitionPiece::from_label(pr[0].get<std::string>());
    const auto p2 = PartitionPiece::from_label(pr[1].get<std::string>());
    std::size_t id = 0;
    for (const auto& pj : e.at("phis")) {
      const auto r = consistency_check(a, p1, p2, build_phi(pj));
      job.csv.cell(p1.label()).cell(p2.label()).integer(static_cast<long long>(id)).num(r.lhs).num(r.rhs)
          .num(r.residual).end();
      if (!(r.residual <= tol))
        job.fail(p1.label() + " vs " + p2.label() + ", phi " + std::to_string(id) + ": residual " +
                 format_double(r.residual));
      worst = std::isnan(r.residual) ? r.residual : std::max(worst, r.residual);
      ++id;
    }
  }
  job.out.metrics = Json{{"max_residual", worst}};
}

}  // namespace

ExperimentOutcome run_experiment(const Json& resolved, std::size_t index) {
  const Json& e = resolved.at("experiments").at(index);
  ExperimentOutcome out;
  out.name = e.at("name").get<std::string>();
  out.kind = e.at("kind").get<std::string>();
  const auto seed = resolved.at("seed").get<std::uint64_t>() + index;
  Job job{e, seed, out, Csv(info(out.kind).csv_header)};
  try {
    if (out.kind == "finite-part") run_finite_part(job);
    else if (out.kind == "extend") run_extend(job);
    else if (out.kind == "growth") run_growth(job);
    else if (out.kind == "cutoff-check") run_cutoff_check(job);
    else if (out.kind == "green-check") run_green_check(job);
    else if (out.kind == "amplitude") run_amplitude(job);
    else if (out.kind == "factorize") run_factorize(job);
    else run_consistency(job);
  } catch (const DivergenceError& err) {
    out.status = Status::Diverged;
    out.message = err.what();
    job.csv = Csv(info(out.kind).csv_header);
  } catch (const InsufficientDataError& err) {
    out.status = Status::Fail;
    out.message = err.what();
    job.csv = Csv(info(out.kind).csv_header);
  } catch (const InconsistencyError& err) {
    out.status = Status::Fail;
    out.message = err.what();
    job.csv = Csv(info(out.kind).csv_header);
  } catch (const std::exception& err) {
    out.status = Status::Error;
    out.message = err.what();
    job.csv = Csv(info(out.kind).csv_header);
  }
  out.files.insert(out.files.begin(), {out.name + ".csv", job.csv.text()});
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

RunReport run(const Json& resolved, int jobs) {
  const std::filesystem::path dir = resolved.at("output").get<std::string>();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("output: cannot create directory " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / "resolved_config.json", dump_json(resolved));

  const std::size_t n = resolved.at("experiments").size();
  RunReport rep;
  rep.outcomes.resize(n);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::exception_ptr failure;
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  auto work = [&] {
    // Concurrent experiments keep their kernels serial; a single worker may use every core.
    if (workers > 1) kernels::set_policy(kernels::Policy::Serial);
    for (std::size_t i = next++; i < n; i = next++) {
      rep.outcomes[i] = run_experiment(resolved, i);
      try {
        for (const auto& [name, text] : rep.outcomes[i].files) write_file_atomic(dir / name, text);
      } catch (...) {
        std::lock_guard<std::mutex> lock(io);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Status> statuses;
  Json list = Json::array();
  for (const auto& o : rep.outcomes) {
    statuses.push_back(o.status);
    Json files = Json::array();
    for (const auto& f : o.files) files.push_back(f.first);
    list.push_back(Json{{"name", o.name}, {"kind", o.kind}, {"status", to_string(o.status)}, {"message", o.message},
                        {"files", files}, {"metrics", o.metrics}});
  }
  rep.exit_code = exit_code(statuses);
  Json summary{{"seed", resolved.at("seed")}, {"exit_code", rep.exit_code}, {"experiments", list}};
  write_file_atomic(dir / "summary.json", dump_json(summary));
  return rep;
}

// ---- oracle table ----

const std::vector<OracleKind>& oracle_kinds() {
  static const std::vector<OracleKind> kinds{
      {"finite-part",
       "finite part of 1/|x| against a bump: integral of (phi(x) - phi(0) w(|x|)) / |x|",
       {{"center", 0.0, "bump center"}, {"radius", 1.0, "bump radius"}, {"power", 0, "extra factor (x - center)^power"},
        {"r_in", 0.25, "window plateau radius"}, {"r_out", 1.0, "window support radius"}}},
      {"improper-power",
       "integral of phi(x) / |x|^p for p < 1",
       {{"center", 0.0, "bump center"}, {"radius", 1.0, "bump radius"}, {"power", 0, "extra factor (x - center)^power"},
        {"exponent", 0.5, "p"}}},
      {"inverse-abs-away",
       "integral of phi(x) / |x| for a bump supported away from 0",
       {{"center", 1.5, "bump center"}, {"radius", 0.5, "bump radius (must be below |center|)"}}},
      {"window-difference",
       "integral of (w2(|x|) - w1(|x|)) / |x| over R",
       {{"r_in1", 0.25, ""}, {"r_out1", 1.0, ""}, {"r_in2", 0.5, ""}, {"r_out2", 2.0, ""}}},
      {"counterterm",
       "integral of beta_lambda(|x|) w(|x|) / |x| over R",
       {{"lambda", 0.5, ""}, {"r_in", 0.25, ""}, {"r_out", 1.0, ""}}},
      {"two-point-3d",
       "<R(G^n), A(mean) B(diff)> in R^3 with radial bumps A, B; order 0 or -1 (no subtraction)",
       {{"n", 3, "edge multiplicity"}, {"mass", 0.0, ""}, {"mean_radius", 0.7, ""}, {"diff_radius", 0.9, ""},
        {"order", 0, "0 or -1"}, {"r_in", 0.25, "window radii in the distance to the diagonal"}, {"r_out", 1.0, ""}}},
      {"two-point-1d",
       "<G^n(x1 - x2), A(mean) B(diff)> in R^1",
       {{"n", 1, "edge multiplicity"}, {"mass", 0.0, ""}, {"mean_radius", 0.7, ""}, {"diff_center", 0.0, ""},
        {"diff_radius", 0.9, ""}}},
  };
  return kinds;
}

double evaluate_oracle(const std::string& kind, const std::map<std::string, double>& given) {
  const OracleKind* k = nullptr;
  for (const auto& o : oracle_kinds())
    if (o.name == kind) k = &o;
  if (!k) throw ConfigError("unknown oracle kind '" + kind + "'");
  std::map<std::string, double> p;
  for (const auto& q : k->params) p[q.name] = q.default_value;
  for (const auto& [name, v] : given) {
    if (!p.count(name)) throw ConfigError("oracle " + kind + ": unknown parameter '" + name + "'");
    p[name] = v;
  }
  auto positive = [&](const char* name) {
    if (!(p[name] > 0)) throw ConfigError(std::string("oracle ") + kind + ": " + name + " must be positive");
    return p[name];
  };
  auto window = [&](const char* a, const char* b) {
    if (!(positive(a) < positive(b))) throw ConfigError("oracle " + kind + ": " + a + " must be below " + b);
  };
  auto integer = [&](const char* name, int lo, int hi) {
    const double v = p[name];
    if (v != std::floor(v) || v < lo || v > hi)
      throw ConfigError("oracle " + kind + ": " + name + " must be an integer in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    return static_cast<int>(v);
  };
  if (kind == "finite-part") {
    window("r_in", "r_out");
    return finite_part_bump(p["center"], positive("radius"), integer("power", 0, 8), p["r_in"], p["r_out"]);
  }
  if (kind == "improper-power") {
    if (!(p["exponent"] < 1)) throw ConfigError("oracle improper-power: exponent must be below 1");
    return improper_power_bump(p["center"], positive("radius"), integer("power", 0, 8), p["exponent"]);
  }
  if (kind == "inverse-abs-away") {
    const double c = p["center"], r = positive("radius");
    if (!(r < std::fabs(c))) throw ConfigError("oracle inverse-abs-away: the support must avoid 0");
    auto phi = [=](long double x) { return orc::bump(x - c, r); };
    return static_cast<double>(c > 0 ? orc::inverse_abs_away(phi, c - r, c + r)
                                     : orc::inverse_abs_away([=](long double x) { return phi(-x); }, -c - r, -c + r));
  }
  if (kind == "window-difference") {
    window("r_in1", "r_out1");
    window("r_in2", "r_out2");
    return static_cast<double>(orc::window_difference(p["r_in1"], p["r_out1"], p["r_in2"], p["r_out2"]));
  }
  if (kind == "counterterm") {
    window("r_in", "r_out");
    if (!(p["lambda"] > 0 && p["lambda"] <= 1)) throw ConfigError("oracle counterterm: lambda must lie in (0, 1]");
    return static_cast<double>(orc::counterterm_inverse_abs(p["lambda"], p["r_in"], p["r_out"]));
  }
  if (kind == "two-point-3d") {
    window("r_in", "r_out");
    const int order = integer("order", -1, 0);
    if (p["mass"] < 0) throw ConfigError("oracle two-point-3d: mass must be nonnegative");
    return two_point_3d(integer("n", 1, 4), p["mass"], positive("mean_radius"), positive("diff_radius"),
                        order < 0 ? kNoSubtraction : 0, p["r_in"], p["r_out"]);
  }
  if (p["mass"] < 0) throw ConfigError("oracle two-point-1d: mass must be nonnegative");
  return two_point_1d(integer("n", 0, 8), p["mass"], positive("mean_radius"), p["diff_center"], positive("diff_radius"));
}

}  // namespace distrenorm::cli
