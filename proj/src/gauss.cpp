#include "distrenorm/gauss.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "distrenorm/errors.hpp"

namespace distrenorm {

namespace {

GaussRule build_gauss(int n) {
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
    long double dp = 0;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    long double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0L : n * (x * p1 - p0) / (x * x - 1);
    long double w = 2 / ((1 - x * x) * dp * dp);
    auto lo = static_cast<std::size_t>(i);
    auto hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = static_cast<double>(-x);
    r.nodes[hi] = static_cast<double>(x);
    r.weights[lo] = r.weights[hi] = static_cast<double>(w);
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1 || n > 512) throw ParameterError("gauss_legendre: point count out of range");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(build_gauss(n));
  return *slot;
}

const KronrodRule& gauss_kronrod_15() {
  static const KronrodRule rule = [] {
    const double xk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                          0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    const double wk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                          0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    KronrodRule r;
    for (int i = 0; i < 7; ++i) {
      r.nodes.push_back(-xk[i]);
      r.kronrod_weights.push_back(wk[i]);
      r.gauss_weights.push_back(i % 2 == 1 ? wg[i / 2] : 0.0);
    }
    r.nodes.push_back(0.0);
    r.kronrod_weights.push_back(wk[7]);
    r.gauss_weights.push_back(wg[3]);
    for (int i = 6; i >= 0; --i) {
      r.nodes.push_back(xk[i]);
      r.kronrod_weights.push_back(wk[i]);
      r.gauss_weights.push_back(i % 2 == 1 ? wg[i / 2] : 0.0);
    }
    return r;
  }();
  return rule;
}

}  // namespace distrenorm
