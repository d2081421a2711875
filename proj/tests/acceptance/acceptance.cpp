// Acceptance suite: one PASS/FAIL line per criterion; exit status 0 only when all pass.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "distrenorm/cutoff.hpp"
#include "distrenorm/errors.hpp"
#include "distrenorm/extension.hpp"
#include "distrenorm/feynman.hpp"
#include "distrenorm/oracles.hpp"
#include "distrenorm/runner.hpp"

using namespace distrenorm;
namespace orc = distrenorm::oracle;
namespace fs = std::filesystem;

namespace {

constexpr long double kPiL = std::numbers::pi_v<long double>;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SmoothFunction bump1(double c, double r) { return fn::bump(std::vector<double>{c}, r); }

Distribution inverse_power(double p) {
  RegularOptions o;
  o.set = ClosedSet::point({0.0});
  return regular(1, [p](std::span<const double> x) { return std::pow(std::fabs(x[0]), -p); }, o);
}

SmoothFunction box_bump(const std::vector<double>& c, double r) {
  return fn::bump_product(c, std::vector<double>(c.size(), r));
}

// A(mean) B(difference) on (R^d)^2 with A, B standard bumps centered at 0.
SmoothFunction mean_diff_bump(int d, double ra, double rb) {
  LinearMap mean(d, 2 * d), diff(d, 2 * d);
  for (int a = 0; a < d; ++a) {
    mean(a, a) = 0.5;
    mean(a, d + a) = 0.5;
    diff(a, a) = 1.0;
    diff(a, d + a) = -1.0;
  }
  const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  auto f = fn::compose_affine(fn::bump(zero, ra), mean, zero) * fn::compose_affine(fn::bump(zero, rb), diff, zero);
  const double w = ra + 0.5 * rb;
  return fn::with_support(f, Box(std::vector<double>(static_cast<std::size_t>(2 * d), -w),
                                 std::vector<double>(static_cast<std::size_t>(2 * d), w)));
}

// 1. Finite part of 1/|x| against three bumps.
Verdict finite_part_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  auto e = extend(inverse_power(1.0), RenormScheme(ClosedSet::point({0.0}), 0, 0.25, 1.0));
  double worst = 0;
  for (auto [c, r] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {0.2, 0.7}, {-0.1, 1.5}}) {
    const long double R = std::max(1.0, std::fabs(c) + r);
    const double oracle = static_cast<double>(orc::finite_part_inverse_abs(
        [c, r](long double x) { return orc::bump(x - c, r); }, 0.25L, 1.0L, R, {std::fabs(c - r), std::fabs(c + r)}));
    worst = std::max(worst, std::fabs(e.pair(bump1(c, r)) - oracle));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs <= 60, fmt("max |pairing - oracle| = %.3g, runtime %.2f s", worst, secs)};
}

// 2. Extended and plain pairings agree for phi at distance >= 0.5 from the set.
Verdict restriction_agreement() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> cen(0.8, 3.0), rad(0.1, 0.4), coin(0, 1);
  double worst = 0;
  // Point in R.
  auto t = inverse_power(1.0);
  auto e = extend(t, RenormScheme(ClosedSet::point({0.0}), 0));
  for (int i = 0; i < 10; ++i) {
    double c = cen(rng);
    const double r = std::min(rad(rng), c - 0.5);
    if (coin(rng) < 0.5) c = -c;
    auto phi = bump1(c, r);
    worst = std::max(worst, std::fabs(e.pair(phi) - t.pair(phi)));
  }
  // Diagonal of R^2.
  RegularOptions o;
  o.set = ClosedSet::small_diagonal(2, 1);
  o.translation_invariant = true;
  auto t2 = regular(2, [](std::span<const double> x) { return 1.0 / std::fabs(x[0] - x[1]); }, o);
  auto e2 = extend(t2, RenormScheme(ClosedSet::small_diagonal(2, 1), 0));
  for (int i = 0; i < 10; ++i) {
    const double a = 2 * coin(rng) - 1, gap = cen(rng) * std::sqrt(2.0), r = 0.2;
    // Distance from the diagonal of the support box is at least (gap - 2r) / sqrt 2 >= 0.5.
    auto phi = box_bump({a, a + (coin(rng) < 0.5 ? gap : -gap)}, r);
    worst = std::max(worst, std::fabs(e2.pair(phi) - t2.pair(phi)));
  }
  return {worst <= 1e-10, fmt("max |extended - plain| = %.3g over 20 test functions", worst)};
}

// 3. Plateau and zero zone of the cutoff are exact.
Verdict cutoff_exactness() {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.0, 1.0), logl(std::log(1e-4), 0.0), wide(-2.0, 2.0);
  std::vector<ClosedSet> sets{ClosedSet::point({0.1, -0.2, 0.3}),
                              ClosedSet::affine_subspace({0.0, 1.0, 0.0}, {{1.0, 1.0, 0.0}}),
                              ClosedSet::small_diagonal(3, 1), ClosedSet::big_diagonal(3, 1)};
  long long worst = 0, plateau_hits = 0, zero_hits = 0;
  for (const auto& set : sets) {
    CutoffFamily fam(set);
    long long violations = 0;
    for (int s = 0; s < 10000; ++s) {
      const double lambda = std::exp(logl(rng));
      std::vector<double> x(3);
      for (auto& v : x) v = wide(rng);
      if (set.kind() == SetKind::BigDiagonal) {
        x[1] = x[0];
      } else {
        x = set.project(x);
      }
      for (auto& v : x) v += 2 * lambda * u(rng);
      const double d = set.distance(x), v = fam.chi(lambda, x);
      if (d <= lambda / 8) {
        ++plateau_hits;
        if (v != 1.0) ++violations;
      }
      if (d >= lambda) {
        ++zero_hits;
        if (v != 0.0) ++violations;
      }
      if (v < 0.0 || v > 1.0) ++violations;
    }
    worst = std::max(worst, violations);
  }
  std::ostringstream os;
  os << "max violations per set type = " << worst << " (4 set types x 10^4 samples; " << plateau_hits
     << " in plateaus, " << zero_hits << " in zero zones)";
  return {worst == 0 && plateau_hits > 0 && zero_hits > 0, os.str()};
}

// 4. Ideal decay of chi_lambda phi.
Verdict ideal_decay() {
  CutoffFamily fam(ClosedSet::point({0.0}));
  const double c[1] = {0.0};
  const int one[1] = {1}, two[1] = {2};
  const Box k({-1.0}, {1.0});
  auto b = fn::bump(c, 1.0);
  struct Case {
    int m, n;
    SmoothFunction phi;
  };
  std::vector<Case> cases{{0, 1, fn::monomial(c, one) * b}, {0, 2, fn::monomial(c, two) * b}, {1, 1, fn::monomial(c, two) * b}};
  bool ok = true;
  std::ostringstream os;
  for (const auto& cs : cases) {
    const auto rep = ideal_decay_check(fam, cs.phi, cs.m, cs.n, k);  // lambda = 2^-3 .. 2^-10
    ok = ok && rep.slope >= cs.n - 0.2;
    os << "(m,n)=(" << cs.m << "," << cs.n << ") slope " << fmt("%.3f", rep.slope) << "; ";
  }
  return {ok, os.str()};
}

// 5. Growth exponents.
Verdict growth_exponents() {
  const std::vector<double> z{0.0};
  auto absx = fn::affine_norm(LinearMap::identity(1), z);
  const Box k({-1.0}, {1.0});
  const auto p = growth_fit_function(fn::pow(absx, -1.5), ClosedSet::point(z), k, 0);
  double cos_s = 0;
  for (int order = 0; order <= 2; ++order)
    cos_s = std::max(cos_s, growth_fit_function(fn::cos(fn::coordinate(1, 0)), ClosedSet::point(z), k, order).s);
  const auto g = green_temperedness_check(GreenKernel(3), 0);
  bool bounds = true;
  for (int order = 0; order <= 2; ++order) {
    const auto r = green_temperedness_check(GreenKernel(3), order);
    bounds = bounds && r.within_bound && r.exponent <= r.bound;
  }
  const bool ok = std::fabs(p.s - 1.5) <= 0.1 && cos_s <= 0.1 && std::fabs(g.exponent - 1.0) <= 0.1 && bounds;
  std::ostringstream os;
  os << "|x|^-3/2: s = " << fmt("%.4f", p.s) << "; cos: s = " << fmt("%.4f", cos_s) << "; G(d=3,m=0): s = "
     << fmt("%.4f", g.exponent) << " (bound " << g.bound << ")" << (bounds ? "" : "; bound violated for |beta| <= 2");
  return {ok, os.str()};
}

// 6. Ladder geometry and radial finite-part oracle for G^3 in d = 3.
Verdict lambda_convergence() {
  RenormalizeOptions o;
  o.spec.abs_tol = 1e-7;
  o.spec.rel_tol = 1e-7;
  o.levels[2].order = 0;
  auto a = renormalize(FeynmanGraph(2, {3}), GreenKernel(3), o);
  const auto res = a.evaluate(mean_diff_bump(3, 0.7, 0.9));
  const long double s2 = std::sqrt(2.0L);
  const long double mass = orc::radial_integral_3d([](long double) { return 1.0L; },
                                                   [](long double r) { return orc::bump(r, 0.7L); }, 0.7L);
  const double oracle = static_cast<double>(
      mass * orc::radial_finite_part_3d([](long double r) { return 1.0L / (64 * kPiL * kPiL * kPiL * r * r * r); },
                                        [](long double r) { return orc::bump(r, 0.9L); }, 0.25L * s2, s2, 1.5L, {0.9L}));
  const auto& lad = res.top.ladder;
  double worst_ratio = 0;
  bool enough = lad.size() >= 5;
  for (std::size_t i = lad.size() >= 4 ? lad.size() - 4 : 0; i < lad.size(); ++i)
    worst_ratio = std::max(worst_ratio, std::isnan(lad[i].ratio) ? 1e9 : lad[i].ratio);
  const double rel = std::fabs(res.top.extrapolated - oracle) / std::fabs(oracle);
  const bool ok = !res.diverged && enough && worst_ratio <= 0.75 && rel <= 1e-4;
  std::ostringstream os;
  os << "max ratio on last 4 rungs = " << fmt("%.4f", worst_ratio) << "; extrapolated " << fmt("%.10g", res.top.extrapolated)
     << " vs oracle " << fmt("%.10g", oracle) << " (rel err " << fmt("%.2e", rel) << ")";
  return {ok, os.str()};
}

// 7. Scheme ambiguity is a delta at the point.
Verdict scheme_locality() {
  auto t = inverse_power(1.0);
  RenormScheme s1(ClosedSet::point({0.0}), 0, 0.25, 1.0), s2(ClosedSet::point({0.0}), 0, 0.5, 2.0);
  const auto diff = scheme_difference(t, s1, s2);
  const double oracle = static_cast<double>(orc::window_difference(0.25L, 1.0L, 0.5L, 2.0L));
  double c0 = std::nan(""), higher = 0;
  for (const auto& [alpha, c] : diff.coefficients) {
    if (alpha.size() == 1 && alpha[0] == 0)
      c0 = c;
    else
      higher = std::max(higher, std::fabs(c));
  }
  auto e1 = extend(t, s1), e2 = extend(t, s2);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> cen(-0.5, 0.5), rad(0.5, 2.5), amp(-2, 2);
  double worst = 0;
  const double zero[1] = {0.0};
  const int one[1] = {1};
  for (int i = 0; i < 10; ++i) {
    auto phi = amp(rng) * (fn::monomial(zero, one) * bump1(cen(rng), rad(rng)));  // phi(0) = 0
    worst = std::max(worst, std::fabs(e1.pair(phi) - e2.pair(phi)));
  }
  const double err = std::fabs(c0 - oracle);
  const bool ok = err <= 1e-6 && higher <= 1e-8 && worst <= 1e-8;
  std::ostringstream os;
  os << "delta coefficient " << fmt("%.12f", c0) << " vs " << fmt("%.12f", oracle) << " (err " << fmt("%.2e", err)
     << "); other coefficients <= " << fmt("%.1e", higher) << "; max difference on phi(0)=0: " << fmt("%.2e", worst);
  return {ok, os.str()};
}

// 8. <G(., y), (-Laplacian + m^2) phi> = phi(y).
Verdict fundamental_solution() {
  double worst = 0;
  for (auto [d, m] : std::vector<std::pair<int, double>>{{2, 0.0}, {3, 0.0}, {3, 1.0}}) {
    GreenKernel k(d, m);
    const auto ud = static_cast<std::size_t>(d);
    for (int choice = 0; choice < 3; ++choice) {
      std::vector<double> y(ud, 0.0), c(ud, 0.0);
      double r = 1.0;
      if (choice == 0) {
        c[0] = 0.2;
      } else if (choice == 1) {
        y[0] = 0.25;
        c[0] = 0.1;
        c[1] = -0.1;
        r = 0.8;
      } else {
        y[0] = -0.3;
        y[1] = 0.1;
        c[0] = -0.4;
        c[1] = 0.2;
        r = 1.2;
      }
      auto phi = fn::bump(c, r);
      auto g = green_function_at(k, y);
      RegularOptions o;
      o.set = ClosedSet::point(y);
      auto t = regular(d, [g](std::span<const double> x) { return g.value(x); }, o);
      worst = std::max(worst, std::fabs(t.pair(fn::helmholtz(phi, m)) - phi.value(y)));
    }
  }
  return {worst <= 1e-4, fmt("max |<G(.,y), (-Lap+m^2) phi> - phi(y)| = %.3g over 9 cases", worst)};
}

// 9. Factorization on three pieces and consistency on two piece pairs.
Verdict factorization_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  auto a = renormalize(FeynmanGraph(3, {1, 1, 1}), GreenKernel(1));
  double worst = 0;
  std::ostringstream os;
  const std::vector<std::pair<const char*, std::vector<double>>> pieces{
      {"{1,2}|{3}", {0.0, 0.2, 5.0}}, {"{1}|{2,3}", {5.0, 0.0, 0.2}}, {"{1,3}|{2}", {0.0, 5.0, 0.2}}};
  for (const auto& [label, c] : pieces) {
    const auto r = factorization_check(a, PartitionPiece::from_label(label), box_bump(c, 0.3));
    worst = std::max(worst, std::isnan(r.residual) ? 1e9 : r.residual);
    os << label << " " << fmt("%.1e", r.residual) << "; ";
  }
  struct PairCase {
    const char* p1;
    const char* p2;
    std::vector<double> c;
  };
  const std::vector<PairCase> pairs{{"{1}|{2,3}", "{1,2}|{3}", {0.0, 5.0, 10.0}}, {"{2}|{1,3}", "{3}|{1,2}", {5.0, 0.0, 10.0}}};
  for (const auto& pc : pairs) {
    const auto r = consistency_check(a, PartitionPiece::from_label(pc.p1), PartitionPiece::from_label(pc.p2),
                                     box_bump(pc.c, 0.3));
    worst = std::max(worst, std::isnan(r.residual) ? 1e9 : r.residual);
    os << pc.p1 << " vs " << pc.p2 << " " << fmt("%.1e", r.residual) << "; ";
  }
  const double secs = seconds_since(t0);
  os << "runtime " << fmt("%.1f", secs) << " s";
  return {worst <= 1e-3 && secs <= 600, "max residual " + fmt("%.2e", worst) + ": " + os.str()};
}

// 10. Tempered partition of unity.
Verdict partition_of_unity() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0), logs(std::log(1e-3), 0.0);
  double worst_sum = 0;
  long long support_violations = 0;
  for (int d = 1; d <= 2; ++d) {
    TemperedPartition part(3, d);
    for (int s = 0; s < 10000; ++s) {
      // Mix generic configurations with clustered ones close to partial diagonals.
      std::vector<double> x(static_cast<std::size_t>(3 * d));
      for (auto& v : x) v = u(rng);
      if (s % 2 == 1) {
        const double scale = std::exp(logs(rng));
        for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(d + a)] = x[static_cast<std::size_t>(a)] + scale * u(rng);
      }
      if (ClosedSet::small_diagonal(3, d).distance(x) == 0.0) continue;
      const auto w = part.weights(x);
      double sum = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        sum += w[i];
        if (w[i] != 0.0 && !piece_contains_thresholded(part.pieces()[i], x, d, part.sigma0())) ++support_violations;
      }
      worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    }
  }
  // Derivatives of the weights blow up at most like d(x, d_3)^-|alpha|.
  TemperedPartition part(3, 1);
  GrowthOptions g;
  g.j_max = 16;
  g.samples = 400;
  double worst_margin = 1e9;
  std::ostringstream slopes;
  for (std::size_t i = 0; i < part.pieces().size(); ++i)
    for (int order = 0; order <= 2; ++order) {
      const auto fit = growth_fit_function(part.weight_function(i), ClosedSet::small_diagonal(3, 1),
                                           Box({-1, -1, -1}, {1, 1, 1}), order, g);
      worst_margin = std::min(worst_margin, -fit.s + order + 0.2);
      if (i == 0) slopes << "|alpha|<=" << order << ": slope " << fmt("%.3f", -fit.s) << "; ";
    }
  const bool ok = worst_sum <= 1e-12 && support_violations == 0 && worst_margin >= 0;
  std::ostringstream os;
  os << "max |sum - 1| = " << fmt("%.2e", worst_sum) << " over 2 x 10^4 configurations; support violations "
     << support_violations << "; " << slopes.str() << "min slope margin " << fmt("%.3f", worst_margin);
  return {ok, os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Two runs of the experiment suite give byte-identical CSV files.
Verdict determinism() {
  const auto base = fs::temp_directory_path() / ("distrenorm-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(base);
  const auto raw = cli::load_config_file(DISTRENORM_SUITE_CONFIG);
  const auto r1 = cli::run(cli::resolve_config(raw, {(base / "run1").string(), 42}), 1);
  const auto r2 = cli::run(cli::resolve_config(raw, {(base / "run2").string(), 42}), 2);
  int files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(base / "run1")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    if (slurp(entry.path()) != slurp(base / "run2" / entry.path().filename())) ++differing;
  }
  fs::remove_all(base);
  std::ostringstream os;
  os << files << " CSV files compared, " << differing << " differ (suite exit codes " << r1.exit_code << ", "
     << r2.exit_code << "; second run with 2 concurrent jobs)";
  return {files > 0 && differing == 0, os.str()};
}

}  // namespace

// Optional arguments select criteria by number; by default all run.
int main(int argc, char** argv) {
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(static_cast<std::size_t>(std::strtoul(argv[i], nullptr, 10)));
  struct Criterion {
    const char* name;
    std::function<Verdict()> fn;
  };
  const std::vector<Criterion> criteria{
      {"finite-part oracle match", finite_part_oracle},
      {"restriction agreement", restriction_agreement},
      {"cut-off exactness", cutoff_exactness},
      {"ideal decay", ideal_decay},
      {"growth-exponent fits", growth_exponents},
      {"lambda-convergence geometry", lambda_convergence},
      {"scheme-ambiguity locality", scheme_locality},
      {"fundamental-solution identity", fundamental_solution},
      {"factorization and consistency", factorization_consistency},
      {"partition of unity", partition_of_unity},
      {"determinism", determinism},
  };
  int failures = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s  %2zu  %-31s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
