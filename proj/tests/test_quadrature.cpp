#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "distrenorm/errors.hpp"
#include "distrenorm/kernels.hpp"
#include "distrenorm/oracles.hpp"
#include "distrenorm/quadrature.hpp"

using namespace distrenorm;
namespace orc = distrenorm::oracle;

namespace {

double bump1(double x) { return std::fabs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

QuadratureSpec tight() {
  QuadratureSpec s;
  s.abs_tol = 1e-12;
  s.rel_tol = 1e-12;
  return s;
}

}  // namespace

TEST(Oracle, TanhSinhKnownIntegrals) {
  EXPECT_NEAR(static_cast<double>(orc::tanh_sinh([](long double x) { return std::sin(x); }, 0, std::numbers::pi_v<long double>)), 2.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(orc::tanh_sinh([](long double x) { return 1 / std::sqrt(x); }, 0, 1)), 2.0, 1e-14);
  EXPECT_NEAR(static_cast<double>(orc::tanh_sinh([](long double x) { return std::log(x); }, 0, 1)), -1.0, 1e-14);
}

TEST(Oracle, SmoothstepShape) {
  EXPECT_NEAR(static_cast<double>(orc::smoothstep(0.5L)), 0.5, 1e-16);
  EXPECT_EQ(orc::smoothstep(0.0L), 0.0L);
  EXPECT_EQ(orc::smoothstep(1.0L), 1.0L);
  EXPECT_NEAR(static_cast<double>(orc::smoothstep(0.3L) + orc::smoothstep(0.7L)), 1.0, 1e-16);
  EXPECT_EQ(orc::window(0.1L, 0.25L, 1.0L), 1.0L);
  EXPECT_EQ(orc::window(1.5L, 0.25L, 1.0L), 0.0L);
}

TEST(Quadrature, IntervalSmooth) {
  auto r = integrate_interval([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-13, 1e-13, 1000);
  EXPECT_NEAR(r.value, 2.0, 1e-13);
  EXPECT_TRUE(r.converged);
  const double oracle = static_cast<double>(orc::tanh_sinh([](long double x) { return orc::bump(x); }, -1, 1));
  auto b = integrate_interval(bump1, -1.0, 1.0, 1e-13, 1e-13, 1000);
  EXPECT_NEAR(b.value, oracle, 1e-12);
}

TEST(Quadrature, CubatureSmooth) {
  auto f2 = [](std::span<const double> x) { return std::exp(x[0] + x[1]); };
  auto r = integrate_cubature(f2, Box({0, 0}, {1, 1}), 1e-12, 1e-12, 4000);
  EXPECT_NEAR(r.value, (std::numbers::e - 1) * (std::numbers::e - 1), 1e-11);
  auto f3 = [](std::span<const double> x) { return std::cos(x[0]) * std::cos(x[1]) * std::cos(x[2]); };
  auto r3 = integrate_cubature(f3, Box({0, 0, 0}, {1, 1, 1}), 1e-11, 1e-11, 4000);
  EXPECT_NEAR(r3.value, std::pow(std::sin(1.0), 3), 1e-10);
}

// A ball bump and its Laplacian. The steep shell of the Laplacian just inside the sphere can hide
// between the nodes of coarse regions.
TEST(Quadrature, CubatureBallBumpAndLaplacian) {
  auto profile = [](double s) { return s < 1.0 ? std::exp(-1.0 / (1.0 - s)) : 0.0; };
  auto phi = [&](std::span<const double> x) { return profile(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); };
  auto lap = [&](std::span<const double> x) {
    const double s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if (s >= 1.0) return 0.0;
    const double f = profile(s), u = 1.0 / (1.0 - s);
    const double f1 = -f * u * u, f2 = f * (u * u * u * u - 2 * u * u * u);
    return 4 * s * f2 + 6 * f1;
  };
  const long double mass =
      4 * std::numbers::pi_v<long double> *
      orc::tanh_sinh([](long double r) { return r * r * (r < 1 ? std::exp(-1 / (1 - r * r)) : 0.0L); }, 0, 1);
  const Box cube({-1, -1, -1}, {1, 1, 1});
  EXPECT_NEAR(integrate_cubature(phi, cube, 1e-7, 1e-7, 40000).value, static_cast<double>(mass), 1e-7);
  // One octant: the ball meets the cell [0.5, 1]^3 only near its inner corner, where no node of
  // that cell lands. Without edge refinement the result is off by about 1e-3.
  const Box octant({0, 0, 0}, {1, 1, 1});
  EXPECT_NEAR(integrate_cubature(lap, octant, 1e-9, 1e-9, 20000).value, 0.0, 1e-6);
  EXPECT_GT(std::fabs(integrate_cubature(lap, octant, 1e-9, 1e-9, 20000, 0).value), 1e-4);
  // The whole cube needs finer edge cells.
  EXPECT_NEAR(integrate_cubature(lap, cube, 1e-10, 1e-10, 40000, 16).value, 0.0, 1e-5);
}

TEST(Quadrature, MonteCarloSeededAndUnbiased) {
  auto f = [](std::span<const double> x) { return x[0] + x[1] + x[2] + x[3]; };
  Box b({0, 0, 0, 0}, {1, 1, 1, 1});
  auto a = integrate_monte_carlo(f, b, 200000, 7);
  auto c = integrate_monte_carlo(f, b, 200000, 7);
  EXPECT_EQ(a.value, c.value);
  EXPECT_EQ(a.error, c.error);
  EXPECT_NEAR(a.value, 2.0, 5 * a.error);
  auto d = integrate_monte_carlo(f, b, 200000, 8);
  EXPECT_NE(a.value, d.value);
}

TEST(Quadrature, BoxDispatch) {
  QuadratureSpec s = tight();
  auto f = [](std::span<const double> x) { return x[0] * x[0]; };
  EXPECT_NEAR(integrate_box(f, Box({0}, {1}), s).value, 1.0 / 3.0, 1e-13);
  s.method = QuadratureMethod::MonteCarlo;
  s.mc_samples = 1000;
  auto mc = integrate_box(f, Box({0}, {1}), s);
  EXPECT_GT(mc.error, 0.0);
  EXPECT_THROW(integrate_box(f, Box::unbounded(1), tight()), DomainError);
}

TEST(Quadrature, NonFiniteIntegrandRejected) {
  auto f = [](std::span<const double>) { return std::nan(""); };
  EXPECT_THROW(integrate_box(f, Box({0}, {1}), tight()), DomainError);
}

TEST(Quadrature, SpecValidation) {
  QuadratureSpec s;
  s.max_depth = kMaxShellDepth + 1;
  EXPECT_THROW(s.validate(), ParameterError);
  s = QuadratureSpec{};
  s.abs_tol = -1;
  EXPECT_THROW(s.validate(), ParameterError);
  s = QuadratureSpec{};
  s.edge_refinement = -1;
  EXPECT_THROW(s.validate(), ParameterError);
  EXPECT_EQ(quadrature_method_from_string("monte-carlo"), QuadratureMethod::MonteCarlo);
  EXPECT_THROW(quadrature_method_from_string("simpson"), ParameterError);
}

TEST(NearSet, ImproperPowerInOneDimension) {
  auto f = [](std::span<const double> x) { return bump1(x[0]) / std::sqrt(std::fabs(x[0])); };
  auto r = integrate_near_set(f, ClosedSet::point({0.0}), Box({-1}, {1}), tight());
  const double oracle = static_cast<double>(orc::improper_power([](long double x) { return orc::bump(x); }, 0.5L, 1));
  EXPECT_NEAR(r.value, oracle, 1e-8 * std::fabs(oracle));
  EXPECT_GT(r.shells, 1);
}

TEST(NearSet, RadialSingularityInThePlane) {
  auto f = [](std::span<const double> x) {
    const double r = std::hypot(x[0], x[1]);
    return bump1(r) / r;
  };
  auto r = integrate_near_set(f, ClosedSet::point({0.0, 0.0}), Box({-1, -1}, {1, 1}), tight());
  const double oracle =
      2 * std::numbers::pi * static_cast<double>(orc::tanh_sinh([](long double t) { return orc::bump(t); }, 0, 1));
  EXPECT_NEAR(r.value, oracle, 1e-8 * oracle);
}

TEST(NearSet, LineInThePlane) {
  auto line = ClosedSet::affine_subspace({0.0, 0.0}, {{1.0, 0.0}});
  auto f = [](std::span<const double> x) { return bump1(x[0]) * bump1(x[1]) / std::sqrt(std::fabs(x[1])); };
  auto r = integrate_near_set(f, line, Box({-1, -1}, {1, 1}), tight());
  auto b = [](long double t) { return orc::bump(t); };
  const double oracle = static_cast<double>(orc::tanh_sinh(b, -1, 1) * orc::improper_power(b, 0.5L, 1));
  EXPECT_NEAR(r.value, oracle, 1e-8 * oracle);
}

TEST(NearSet, DivergentIntegrandRaises) {
  auto f = [](std::span<const double> x) { return bump1(x[0]) / std::fabs(x[0]); };
  EXPECT_THROW(integrate_near_set(f, ClosedSet::point({0.0}), Box({-1}, {1}), tight()), DivergenceError);
}

TEST(NearSet, AwayFromSetIsPlainIntegral) {
  auto f = [](std::span<const double> x) { return bump1(x[0] - 3.0); };
  auto r = integrate_near_set(f, ClosedSet::point({0.0}), Box({2}, {4}), tight());
  auto p = integrate_box(f, Box({2}, {4}), tight());
  EXPECT_EQ(r.value, p.value);
}

TEST(NearSet, SerialAndParallelAgreeBitwise) {
  auto f = [](std::span<const double> x) {
    const double r = std::hypot(x[0], x[1]);
    return bump1(r) * (1.0 + x[0]) / std::sqrt(r);
  };
  kernels::set_thread_budget(4);
  double serial, parallel;
  {
    kernels::ScopedPolicy p(kernels::Policy::Serial);
    serial = integrate_near_set(f, ClosedSet::point({0.0, 0.0}), Box({-1, -1}, {1, 1}), tight()).value;
  }
  {
    kernels::ScopedPolicy p(kernels::Policy::Parallel);
    parallel = integrate_near_set(f, ClosedSet::point({0.0, 0.0}), Box({-1, -1}, {1, 1}), tight()).value;
  }
  kernels::set_thread_budget(0);
  EXPECT_EQ(serial, parallel);
}
