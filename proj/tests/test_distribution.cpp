#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "distrenorm/distribution.hpp"
#include "distrenorm/errors.hpp"
#include "distrenorm/kernels.hpp"
#include "distrenorm/oracles.hpp"

using namespace distrenorm;
namespace orc = distrenorm::oracle;

namespace {

std::vector<double> v1(double a) { return {a}; }

SmoothFunction bump1(double c = 0.0, double r = 1.0) { return fn::bump(v1(c), r); }

SmoothFunction abs_x() { return fn::affine_norm(LinearMap::identity(1), v1(0.0)); }

Density power_density(double p) {
  return [p](std::span<const double> x) { return std::pow(std::fabs(x[0]), -p); };
}

RegularOptions at_origin() {
  RegularOptions o;
  o.set = ClosedSet::point({0.0});
  return o;
}

long double ob(long double x) { return orc::bump(x); }

}  // namespace

TEST(Pairing, LebesgueOnBumpMatchesReference) {
  auto t = regular(1, [](std::span<const double>) { return 1.0; });
  const double oracle = static_cast<double>(orc::tanh_sinh(ob, -1, 1, 1e-18L));
  EXPECT_NEAR(t.pair(bump1()), oracle, 1e-10);
  EXPECT_NEAR(lebesgue(1).pair(bump1()), oracle, 1e-10);
}

TEST(Pairing, OddDensityOnEvenBumpVanishes) {
  auto t = regular(1, [](std::span<const double> x) { return x[0]; });
  EXPECT_NEAR(t.pair(bump1()), 0.0, 1e-12);
}

TEST(Pairing, PointSupportedSecondDerivative) {
  auto t = point_supported({0.0}, {{{2}, 1.0}});
  EXPECT_NEAR(t.pair(bump1()), -2.0 * std::exp(-1.0), 1e-13);
  auto d1 = point_supported({0.3}, {{{1}, 1.0}});
  // <delta', phi> = -phi'(x0), phi' = phi * (-2x / (1 - x^2)^2)
  const double x = 0.3, expect = std::exp(-1 / (1 - x * x)) * 2 * x / ((1 - x * x) * (1 - x * x));
  EXPECT_NEAR(d1.pair(bump1()), expect, 1e-13);
  EXPECT_NE(point_coefficients(t), nullptr);
  EXPECT_THROW(point_supported({0.0}, {{{1, 0}, 1.0}}), DomainError);
}

TEST(Pairing, IntegrableSingularityMatchesImproperIntegral) {
  auto t = regular(1, power_density(0.5), at_origin());
  const double oracle = static_cast<double>(orc::improper_power(ob, 0.5L, 1));
  EXPECT_NEAR(t.pair(bump1()), oracle, 1e-8 * oracle);
}

TEST(Pairing, NonIntegrableDensityDiverges) {
  auto t = regular(1, power_density(1.0), at_origin());
  EXPECT_THROW(t.pair(bump1()), DivergenceError);
  // Away from the set the pairing is an ordinary integral.
  const double oracle = static_cast<double>(orc::inverse_abs_away([](long double x) { return orc::bump(x - 1.5L, 0.5L); }, 1, 2));
  EXPECT_NEAR(t.pair(bump1(1.5, 0.5)), oracle, 1e-10);
}

TEST(Pairing, RequiresCompactSupport) {
  auto t = lebesgue(1);
  EXPECT_THROW(t.pair(fn::constant(1, 1.0)), DomainError);
  EXPECT_THROW(t.pair(fn::bump(std::vector<double>{0.0, 0.0}, 1.0)), DomainError);
}

TEST(Pairing, LinearInTestFunction) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  auto t = regular(1, power_density(0.5), at_origin());
  for (int trial = 0; trial < 5; ++trial) {
    const double a = u(rng), b = u(rng);
    auto phi = bump1(0.1 * u(rng), 1.0);
    auto psi = bump1(0.2 * u(rng), 0.7);
    const double lhs = t.pair(a * phi + b * psi);
    const double rhs = a * t.pair(phi) + b * t.pair(psi);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::fabs(rhs)));
  }
}

TEST(Pairing, SmoothProductAdjunction) {
  auto t = regular(1, power_density(0.5), at_origin());
  auto psi = fn::cos(fn::coordinate(1, 0)) + fn::constant(1, 0.5);
  auto phi = bump1(0.2, 0.9);
  EXPECT_NEAR(smooth_product(psi, t).pair(phi), t.pair(psi * phi), 1e-10);
}

TEST(Pairing, SumAndScale) {
  auto t = regular(1, power_density(0.5), at_origin());
  auto d = point_supported({0.0}, {{{0}, 1.0}});
  auto phi = bump1();
  EXPECT_NEAR(sum({t, scaled(-3.0, d)}).pair(phi), t.pair(phi) - 3.0 * std::exp(-1.0), 1e-10);
  EXPECT_EQ(scaled(0.0, t).pair(phi), 0.0);
}

TEST(Pairing, Deterministic) {
  auto t = regular(1, power_density(0.5), at_origin());
  auto phi = bump1(0.1, 0.8);
  const double a = t.pair(phi), b = t.pair(phi);
  EXPECT_EQ(a, b);
  kernels::set_thread_budget(3);
  double c;
  {
    kernels::ScopedPolicy p(kernels::Policy::Serial);
    c = t.pair(phi);
  }
  kernels::set_thread_budget(0);
  EXPECT_EQ(a, c);
}

TEST(Pairing, SeminormBoundConstantIsStable) {
  // |<t, phi>| <= C ||phi||_0 for phi supported in [-1, 1]; the per-function
  // constants stay within +-10% of their midrange.
  auto t = regular(1, power_density(0.5), at_origin());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> shift(-0.05, 0.05), rad(0.9, 0.95), amp(0.5, 2.0);
  double lo = 1e300, hi = 0;
  for (int i = 0; i < 20; ++i) {
    const double s = shift(rng), r = rad(rng), a = amp(rng);
    auto phi = a * bump1(s, r);
    const double c = std::fabs(t.pair(phi)) / seminorm(phi, SeminormSpec{0, Box({-1}, {1}), 401});
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const double mid = 0.5 * (lo + hi);
  EXPECT_LE(hi, 1.1 * mid);
  EXPECT_GE(lo, 0.9 * mid);
}

TEST(Tensor, ProductOfOneDimensionalPairings) {
  auto a = lebesgue(1);
  auto b = regular(1, power_density(0.5), at_origin());
  auto t = tensor(a, b, {0}, {1});
  std::vector<double> c{0.0, 0.0}, r{1.0, 1.0};
  auto phi = fn::bump_product(c, r);
  const double oracle = static_cast<double>(orc::tanh_sinh(ob, -1, 1) * orc::improper_power(ob, 0.5L, 1));
  EXPECT_NEAR(t.pair(phi), oracle, 1e-8 * oracle);
  // Swapped coordinate roles.
  auto s = tensor(b, a, {1}, {0});
  EXPECT_NEAR(s.pair(phi), oracle, 1e-8 * oracle);
  EXPECT_THROW(tensor(a, b, {0}, {0}), DomainError);
}

TEST(Tensor, FlatDensityMatchesNestedPairing) {
  auto t = tensor(lebesgue(1), regular(1, [](std::span<const double> y) { return 1.0 + y[0] * y[0]; }), {0}, {1});
  std::vector<double> c{0.1, -0.2}, r{0.8, 0.9};
  auto phi = fn::bump_product(c, r);
  QuadratureSpec spec;
  EXPECT_NEAR(pair_flat(t, phi, spec), t.pair(phi), 1e-9);
  EXPECT_THROW(pair_flat(point_supported({0.0}, {}), bump1(), spec), CapabilityError);
}

TEST(Tensor, PartialPairingJet) {
  std::vector<double> c{0.0, 0.0}, r{1.0, 1.0};
  auto phi = fn::bump_product(c, r);
  auto pp = partial_pairing(lebesgue(1), phi, {0}, {1});
  const double x = 0.4;
  const double mass = static_cast<double>(orc::tanh_sinh(ob, -1, 1));
  const double b = std::exp(-1 / (1 - x * x)), db = b * (-2 * x / ((1 - x * x) * (1 - x * x)));
  const Jet j = pp.jet(v1(x), 1);
  EXPECT_NEAR(j.value(), b * mass, 1e-10);
  EXPECT_NEAR(j.derivative_at(1), db * mass, 1e-9);
  EXPECT_EQ(pp.value(v1(1.5)), 0.0);
}

TEST(Marginal, TranslationInvariantMatchesDirectShells) {
  // |x1 - x2|^{-1/2} along the diagonal of R^2.
  auto dens = [](std::span<const double> x) { return std::pow(std::fabs(x[0] - x[1]), -0.5); };
  RegularOptions ti;
  ti.set = ClosedSet::small_diagonal(2, 1);
  ti.translation_invariant = true;
  RegularOptions plain;
  plain.set = ClosedSet::small_diagonal(2, 1);
  std::vector<double> c{0.1, -0.1}, r{0.9, 0.8};
  auto phi = fn::bump_product(c, r);
  const double a = regular(2, dens, ti).pair(phi);
  const double b = regular(2, dens, plain).pair(phi);
  EXPECT_NEAR(a, b, 1e-8 * std::fabs(b));
  Marginal m(ClosedSet::small_diagonal(2, 1), phi, QuadratureSpec{});
  EXPECT_EQ(m.codim(), 1);
  const double h0 = 0.0;
  EXPECT_GT(m(std::span<const double>(&h0, 1)), 0.0);
  EXPECT_THROW(regular(2, dens, [] {
                 RegularOptions o;
                 o.set = ClosedSet::big_diagonal(2, 1);
                 o.translation_invariant = true;
                 return o;
               }()),
               DomainError);
}

TEST(GrowthFunction, PowerSingularity) {
  auto f = fn::pow(abs_x(), -1.5);
  auto g = growth_fit_function(f, ClosedSet::point({0.0}), Box({-1}, {1}), 0);
  EXPECT_NEAR(g.s, 1.5, 0.1);
  EXPECT_FALSE(g.sub_power);
  EXPECT_GT(g.C, 0.0);
}

TEST(GrowthFunction, BoundedFunction) {
  auto g = growth_fit_function(fn::cos(fn::coordinate(1, 0)), ClosedSet::point({0.0}), Box({-1}, {1}), 2);
  EXPECT_LE(g.s, 0.1);
}

TEST(GrowthFunction, LogarithmIsSubPower) {
  // Oracle: the shell sup of |log x| over [r, 2r] is |log r| for r < 1/2.
  auto g = growth_fit_function(fn::log(abs_x()), ClosedSet::point({0.0}), Box({-1}, {1}), 0);
  EXPECT_LE(g.s, 0.2);
  EXPECT_TRUE(g.sub_power);
  for (const auto& s : g.samples)
    if (s.r < 0.5) EXPECT_NEAR(s.value, std::fabs(std::log(s.r)), 1e-12 * std::fabs(std::log(s.r)));
}

TEST(GrowthFunction, InsufficientShells) {
  GrowthOptions o;
  o.j_min = 2;
  o.j_max = 4;
  EXPECT_THROW(growth_fit_function(fn::cos(fn::coordinate(1, 0)), ClosedSet::point({0.0}), Box({-1}, {1}), 0, o),
               InsufficientDataError);
  // Shells outside K are not usable either.
  EXPECT_THROW(growth_fit_function(fn::cos(fn::coordinate(1, 0)), ClosedSet::point({0.0}), Box({0.5}, {1}), 0),
               InsufficientDataError);
}

TEST(GrowthFunction, CodimensionTwoAndDiagonal) {
  // |x1 - x2|^{-1} in R^2 near the diagonal: d = |x1 - x2| / sqrt 2.
  auto f = fn::pow(fn::affine_norm([] {
                     LinearMap m(1, 2);
                     m(0, 0) = 1;
                     m(0, 1) = -1;
                     return m;
                   }(),
                                   v1(0.0)),
                   -1.0);
  auto g = growth_fit_function(f, ClosedSet::small_diagonal(2, 1), Box({-1, -1}, {1, 1}), 1);
  EXPECT_NEAR(g.s, 2.0, 0.1);
  auto big = growth_fit_function(f, ClosedSet::big_diagonal(2, 1), Box({-1, -1}, {1, 1}), 0);
  EXPECT_NEAR(big.s, 1.0, 0.1);
}

TEST(GrowthDistribution, ExamplesFromProbeIntegrals) {
  GrowthOptions o;
  o.j_min = 1;
  o.j_max = 12;
  auto set = ClosedSet::point({0.0});
  auto one = regular(1, [](std::span<const double>) { return 1.0; });
  EXPECT_LE(growth_fit_distribution(one, set, 0, o).s, 0.1);
  auto inv2 = regular(1, power_density(2.0), at_origin());
  auto g2 = growth_fit_distribution(inv2, set, 0, o);
  EXPECT_NEAR(g2.s, 1.0, 0.15);
  // Oracle for one rung: probe integral against |x|^-2 in closed-form quadrature.
  const double r = g2.samples[3].r;
  const long double probe = orc::tanh_sinh([r](long double x) { return orc::bump(x - 2 * r, r) / (x * x); }, r, 3 * r);
  EXPECT_NEAR(g2.samples[3].value, static_cast<double>(probe) / std::exp(-1.0), 1e-8 * g2.samples[3].value);
  auto inv1 = regular(1, power_density(1.0), at_origin());
  EXPECT_LE(growth_fit_distribution(inv1, set, 0, o).s, 0.2);
}

TEST(GrowthDistribution, SmoothProductKeepsModerateGrowth) {
  GrowthOptions o;
  o.j_min = 1;
  o.j_max = 12;
  auto set = ClosedSet::point({0.0});
  auto t = regular(1, power_density(2.0), at_origin());
  auto psi = fn::exp(fn::coordinate(1, 0)) + fn::constant(1, 1.0);
  const double s_t = growth_fit_distribution(t, set, 0, o).s;
  const double s_pt = growth_fit_distribution(smooth_product(psi, t), set, 0, o).s;
  EXPECT_LE(s_pt, s_t + 0.2);
}

TEST(Dyadic, OneJetVanishingConverges) {
  auto t = regular(1, power_density(1.0), at_origin());
  CutoffFamily fam(ClosedSet::point({0.0}));
  auto x = fn::coordinate(1, 0);
  auto s1 = dyadic_series(t, x * bump1(), fam, 20);
  EXPECT_TRUE(s1.summable);
  EXPECT_LE(s1.tail_ratio, 0.6);
  auto s2 = dyadic_series(t, x * x * bump1(0.1, 1.0), fam, 20);
  EXPECT_TRUE(s2.summable);
  EXPECT_LE(s2.tail_ratio, 0.6);
  // Closed-form term integrals: for x^2 phi against 1/|x| the j-th term is
  // the integral of |x| phi (chi_a - chi_c), which is O(2^-2j).
  EXPECT_LT(std::fabs(s2.partial_sums.back() - s2.partial_sums[s2.partial_sums.size() - 2]), 1e-10);
}

TEST(Dyadic, DivergentSeriesIsFlagged) {
  auto t = regular(1, power_density(2.0), at_origin());
  CutoffFamily fam(ClosedSet::point({0.0}));
  auto s = dyadic_series(t, bump1(), fam, 12);
  EXPECT_FALSE(s.summable);
  EXPECT_NEAR(s.tail_ratio, 2.0, 0.1);
}

TEST(Dyadic, FarSupportHasZeroTerms) {
  auto t = regular(1, power_density(1.0), at_origin());
  CutoffFamily fam(ClosedSet::point({0.0}));
  auto phi = bump1(3.0, 1.0);
  auto s = dyadic_series(t, phi, fam, 10);
  for (double term : s.terms) EXPECT_EQ(term, 0.0);
  EXPECT_EQ(s.base, t.pair(phi));
}

TEST(Dyadic, IntegrableLimitMatchesImproperIntegral) {
  auto t = regular(1, power_density(0.5), at_origin());
  CutoffFamily fam(ClosedSet::point({0.0}));
  auto s = dyadic_series(t, bump1(), fam, 40);
  const double oracle = static_cast<double>(orc::improper_power(ob, 0.5L, 1));
  EXPECT_TRUE(s.summable);
  EXPECT_NEAR(s.limit, oracle, 1e-8);
}
