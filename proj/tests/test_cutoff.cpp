#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "distrenorm/cutoff.hpp"
#include "distrenorm/errors.hpp"

using namespace distrenorm;

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
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

// Point at distance `dist` from the origin along a fixed unit direction.
std::vector<double> at_distance(int dim, double dist) {
  std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = dist / std::sqrt(static_cast<double>(dim));
  return x;
}

}  // namespace

TEST(Cutoff, ClosedFormExamples) {
  CutoffFamily fam(ClosedSet::point({0.0}));
  for (double lambda : {1.0, 0.5, 0.1, 1e-3}) {
    const double a[1] = {lambda / 16}, b[1] = {2 * lambda};
    EXPECT_EQ(fam.chi(lambda, a), 1.0);
    EXPECT_EQ(fam.chi(lambda, b), 0.0);
  }
  const double x[1] = {0.1};
  EXPECT_THROW(fam.chi(0.0, x), ParameterError);
  EXPECT_THROW(fam.chi(1.5, x), ParameterError);
  EXPECT_THROW(fam.chi(-0.1, x), ParameterError);
}

TEST(Cutoff, Monotone) {
  CutoffFamily fam(ClosedSet::point({0.0}));
  double prev = 1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x[1] = {0.3 * i / 2000.0};
    const double v = fam.chi(0.25, x);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
}

TEST(Cutoff, PlateauAndZeroExactnessAllSetTypes) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ul(1e-4, 1.0), uz(0.0, 1.0), ug(-3.0, 3.0);
  std::vector<ClosedSet> sets{ClosedSet::point({0.1, -0.2, 0.3}),
                              ClosedSet::affine_subspace({0.0, 1.0, 0.0}, {{1.0, 1.0, 0.0}}),
                              ClosedSet::small_diagonal(3, 1), ClosedSet::big_diagonal(3, 1)};
  for (const auto& set : sets) {
    CutoffFamily fam(set);
    int violations = 0;
    for (int t = 0; t < 10000; ++t) {
      const double lambda = ul(rng);
      std::vector<double> x{ug(rng), ug(rng), ug(rng)};
      const double d = set.distance(x);
      const double v = fam.chi(lambda, x);
      if (d <= lambda / 8 && v != 1.0) ++violations;
      if (d >= lambda && v != 0.0) ++violations;
      if (v < 0.0 || v > 1.0) ++violations;
    }
    EXPECT_EQ(violations, 0) << set.describe();
  }
}

TEST(Cutoff, JetsInPlateauAndZeroZone) {
  CutoffFamily fam(ClosedSet::small_diagonal(2, 1));
  const double on[2] = {0.4, 0.4};  // on the set: plateau
  auto j = fam.chi_jet(0.5, on, 4);
  EXPECT_EQ(j.value(), 1.0);
  for (std::size_t r = 1; r < j.size(); ++r) EXPECT_EQ(j.taylor(r), 0.0);
  const double far[2] = {0.0, 3.0};
  EXPECT_TRUE(fam.chi_jet(0.5, far, 4).is_zero());
}

TEST(Cutoff, FirstDerivativeScalesLikeInverseLambda) {
  CutoffFamily fam(ClosedSet::point({0.0}));
  std::vector<double> lx, ly;
  for (int j = 3; j <= 10; ++j) {
    const double lambda = std::ldexp(1.0, -j);
    double sup = 0;
    for (int i = 0; i <= 400; ++i) {
      const double x[1] = {lambda * (0.125 + 0.875 * i / 400.0)};
      sup = std::max(sup, std::fabs(fam.chi_jet(lambda, x, 1).derivative(std::vector<int>{1})));
    }
    lx.push_back(std::log(lambda));
    ly.push_back(std::log(sup));
  }
  EXPECT_NEAR(slope(lx, ly), -1.0, 0.1);
}

TEST(Cutoff, DerivativeBlowUpBound) {
  for (int dim : {1, 2}) {
    std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
    CutoffFamily fam(ClosedSet::point(origin));
    for (int k = 1; k <= 3; ++k) {
      std::vector<double> lx, ly;
      for (int j = 3; j <= 10; ++j) {
        const double lambda = std::ldexp(1.0, -j);
        double sup = 0;
        for (int i = 0; i <= 200; ++i) {
          auto x = at_distance(dim, lambda * (0.125 + 0.875 * i / 200.0));
          auto jet = fam.chi_jet(lambda, x, k);
          const auto& tab = jet.table();
          for (std::size_t r = tab.count_up_to(k - 1); r < tab.count_up_to(k); ++r)
            sup = std::max(sup, std::fabs(jet.derivative_at(r)));
        }
        lx.push_back(std::log(lambda));
        ly.push_back(std::log(sup));
      }
      EXPECT_GE(slope(lx, ly), -k - 0.1) << "dim " << dim << " k " << k;
    }
  }
}

TEST(Cutoff, BetaVanishesNearSetAndTendsToOne) {
  CutoffFamily fam(ClosedSet::point({0.0, 0.0}));
  const double near[2] = {1e-3, 0.0};
  EXPECT_EQ(fam.beta(0.5, near), 0.0);
  const double x[2] = {0.01, 0.02};
  EXPECT_EQ(fam.beta(std::ldexp(1.0, -10), x), 1.0);
  double prev = -1;
  for (int j = 1; j <= 10; ++j) {
    const double b = fam.beta(std::ldexp(1.0, -j), x);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(Cutoff, ChiFunctionMatchesChi) {
  CutoffFamily fam(ClosedSet::small_diagonal(3, 1));
  auto f = fam.chi_function(0.3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 500; ++t) {
    const double x[3] = {u(rng), u(rng), u(rng)};
    EXPECT_EQ(f.value(x), fam.chi(0.3, x));
  }
}

TEST(IdealDecay, Examples) {
  CutoffFamily fam(ClosedSet::point({0.0}));
  const double c[1] = {0.0};
  const int one[1] = {1}, two[1] = {2};
  const Box k({-1.0}, {1.0});
  auto bump = fn::bump(c, 1.0);
  auto x2b = fn::monomial(c, two) * bump;
  auto x1b = fn::monomial(c, one) * bump;
  EXPECT_GE(ideal_decay_check(fam, x2b, 0, 2, k).slope, 1.8);
  EXPECT_GE(ideal_decay_check(fam, x1b, 0, 1, k).slope, 0.8);
  EXPECT_GE(ideal_decay_check(fam, x2b, 1, 1, k).slope, 0.8);

  const double far[1] = {0.6};
  auto away = fn::bump(far, 0.2);
  auto rep = ideal_decay_check(fam, away, 0, 3, k);
  EXPECT_TRUE(std::isinf(rep.slope));
  for (double v : rep.norms) EXPECT_EQ(v, 0.0);

  EXPECT_THROW(ideal_decay_check(fam, x1b, 0, 2, k), PreconditionError);
  EXPECT_THROW(ideal_decay_check(fam, bump, 0, 1, k), PreconditionError);
}
