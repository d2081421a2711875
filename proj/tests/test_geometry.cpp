#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "distrenorm/errors.hpp"
#include "distrenorm/geometry.hpp"

using namespace distrenorm;

namespace {

std::vector<double> random_cfg(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n * d));
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST(ClosedSet, PointDistance) {
  auto s = ClosedSet::point({0.0});
  const double x[1] = {3.0};
  EXPECT_EQ(s.distance(x), 3.0);
  const double bad[2] = {1.0, 2.0};
  EXPECT_THROW(s.distance(bad), DomainError);
}

TEST(ClosedSet, SmallDiagonalPairDistance) {
  auto s = ClosedSet::small_diagonal(2, 1);
  const double x[2] = {0.3, 2.1};
  EXPECT_NEAR(s.distance(x), std::fabs(0.3 - 2.1) / std::sqrt(2.0), 1e-15);
}

TEST(ClosedSet, SmallDiagonalMatchesBruteForce) {
  auto s = ClosedSet::small_diagonal(3, 1);
  const double x[3] = {0.0, 1.0, 2.0};
  // Brute force over points t(1,1,1) of the diagonal line.
  double best = 1e300;
  for (long k = 0; k <= 400000; ++k) {
    const double t = -1.0 + 4.0 * static_cast<double>(k) / 400000.0;
    const double v = std::sqrt((x[0] - t) * (x[0] - t) + (x[1] - t) * (x[1] - t) + (x[2] - t) * (x[2] - t));
    best = std::min(best, v);
  }
  EXPECT_NEAR(s.distance(x), best, 1e-9);
}

TEST(ClosedSet, DistanceIsLipschitzAndZeroOnSet) {
  std::mt19937_64 rng(1);
  for (auto s : {ClosedSet::small_diagonal(3, 2), ClosedSet::big_diagonal(3, 2),
                 ClosedSet::affine_subspace({1.0, 0.0, 0.0, 2.0, 0.0, 0.0}, {{1, 1, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 1}}),
                 ClosedSet::point({0.5, 0.5, 0.5, 0.5, 0.5, 0.5})}) {
    for (int t = 0; t < 200; ++t) {
      auto x = random_cfg(rng, 3, 2), y = random_cfg(rng, 3, 2);
      double dxy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) dxy += (x[i] - y[i]) * (x[i] - y[i]);
      EXPECT_LE(std::fabs(s.distance(x) - s.distance(y)), std::sqrt(dxy) + 1e-12);
      EXPECT_GE(s.distance(x), 0.0);
      if (s.linear()) EXPECT_NEAR(s.distance(s.project(x)), 0.0, 1e-12);
    }
  }
  const double on[6] = {1.0, 2.0, 1.0, 2.0, 1.0, 2.0};
  EXPECT_EQ(ClosedSet::small_diagonal(3, 2).distance(on), 0.0);
}

TEST(ClosedSet, DistanceFunctionAgreesWithDistance) {
  std::mt19937_64 rng(2);
  for (auto s : {ClosedSet::small_diagonal(3, 1), ClosedSet::small_diagonal(2, 3), ClosedSet::big_diagonal(3, 1)}) {
    auto f = s.distance_function();
    for (int t = 0; t < 50; ++t) {
      auto x = random_cfg(rng, s.points(), s.point_dim());
      EXPECT_NEAR(f.value(x), s.distance(x), 1e-13);
      EXPECT_TRUE(f.jet(x, 3).is_finite());
    }
  }
}

TEST(ClosedSet, BoxDistanceBounds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (auto s : {ClosedSet::point({0.2, -0.1, 0.4}), ClosedSet::small_diagonal(3, 1), ClosedSet::big_diagonal(3, 1)}) {
    for (int t = 0; t < 50; ++t) {
      std::vector<double> c{u(rng), u(rng), u(rng)};
      Box b = Box::cube(c, 0.3);
      const double lo = s.distance_lower_bound(b), hi = s.distance_upper_bound(b);
      for (int k = 0; k < 100; ++k) {
        std::uniform_real_distribution<double> w(-0.3, 0.3);
        std::vector<double> x{c[0] + w(rng), c[1] + w(rng), c[2] + w(rng)};
        EXPECT_GE(s.distance(x), lo - 1e-14);
        EXPECT_LE(s.distance(x), hi + 1e-14);
      }
    }
  }
}

TEST(ClosedSet, BigDiagonalJetTieIsSingular) {
  auto f = ClosedSet::big_diagonal(3, 1).distance_function();
  const double tie[3] = {0.0, 1.0, 2.0};
  EXPECT_THROW(f.jet(tie, 1), SingularLocusError);
  EXPECT_NO_THROW(f.jet(tie, 0));
}

TEST(Pieces, ContainsExamples) {
  auto p = make_piece({0, 1}, {2});
  const double a[3] = {0, 0, 1}, b[3] = {0, 1, 0}, c[3] = {0, 1, 1};
  EXPECT_TRUE(piece_contains(p, a, 1));
  EXPECT_FALSE(piece_contains(p, b, 1));
  EXPECT_FALSE(piece_contains(p, c, 1));
}

TEST(Pieces, CoverCountsAndCanonicalForm) {
  EXPECT_THROW(cover_pieces(1), DomainError);
  auto two = cover_pieces(2);
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0].label(), "{1}|{2}");
  auto three = cover_pieces(3);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0].label(), "{1}|{2,3}");
  EXPECT_EQ(three[1].label(), "{1,2}|{3}");
  EXPECT_EQ(three[2].label(), "{1,3}|{2}");
  EXPECT_EQ(cover_pieces(4).size(), 7u);
  EXPECT_EQ(PartitionPiece::from_label("{3}|{1,2}"), make_piece({0, 1}, {2}));
  EXPECT_THROW(make_piece({0, 1}, {1, 2}), DomainError);
  EXPECT_THROW(make_piece({}, {0}), DomainError);
}

TEST(Pieces, CoverProperty) {
  std::mt19937_64 rng(4);
  for (int n = 2; n <= 4; ++n) {
    auto pieces = cover_pieces(n);
    for (int t = 0; t < 10000; ++t) {
      auto x = random_cfg(rng, n, 2);
      if (n >= 3 && t % 3 == 0) {  // force some coincidences off the small diagonal
        x[0] = x[2];
        x[1] = x[3];
      }
      bool any = false;
      for (const auto& p : pieces) any = any || piece_contains(p, x, 2);
      EXPECT_TRUE(any);
    }
  }
}

TEST(TemperedPartition, TwoPointsUnitWeight) {
  TemperedPartition part(2, 3);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto x = random_cfg(rng, 2, 3);
    auto w = part.weights(x);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0], 1.0);
  }
}

TEST(TemperedPartition, ThreePointExample) {
  TemperedPartition part(3, 1);
  const double x[3] = {0.0, 0.0, 1.0};
  auto w = part.weights(x);
  const auto k = part.index_of(make_piece({0, 1}, {2}));
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(w[i], w[k]);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
  // Points 1 and 2 coincide, so only {1,2}|{3} separates them.
  EXPECT_EQ(w[k], 1.0);
}

TEST(TemperedPartition, SumsToOneAndSubordinate) {
  std::mt19937_64 rng(6);
  for (int n = 2; n <= 4; ++n) {
    TemperedPartition part(n, 2);
    for (int t = 0; t < 2000; ++t) {
      auto x = random_cfg(rng, n, 2);
      auto w = part.weights(x);
      double s = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_GE(w[i], 0.0);
        EXPECT_LE(w[i], 1.0);
        s += w[i];
        if (!piece_contains_thresholded(part.pieces()[i], x, 2, part.sigma0())) EXPECT_EQ(w[i], 0.0);
        EXPECT_NEAR(part.weight_function(i).value(x), w[i], 1e-14);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(TemperedPartition, ScaleInvariance) {
  TemperedPartition part(3, 1);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    auto x = random_cfg(rng, 3, 1);
    // Centered configurations keep the dilated differences free of cancellation.
    const double mean = (x[0] + x[1] + x[2]) / 3;
    for (auto& v : x) v -= mean;
    const double bar = (x[0] + x[1] + x[2]) / 3;
    std::vector<double> y(x);
    for (auto& v : y) v = bar + 1e-3 * (v - bar);
    auto a = part.weights(x), b = part.weights(y);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(TemperedPartition, SingularOnSmallDiagonal) {
  TemperedPartition part(3, 1);
  const double x[3] = {0.5, 0.5, 0.5};
  EXPECT_THROW(part.weights(x), SingularLocusError);
  EXPECT_THROW(part.weight_function(0).value(x), SingularLocusError);
}
