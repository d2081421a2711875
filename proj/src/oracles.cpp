#include "distrenorm/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace distrenorm::oracle {

namespace {
constexpr long double kPi = 3.141592653589793238462643383279502884L;
}

long double tanh_sinh(const Fn& f, long double a, long double b, long double tol) {
  if (a == b) return 0.0L;
  if (b < a) return -tanh_sinh(f, b, a, tol);
  const long double len = b - a;
  // Nodes x = a + len * logistic(2 s), s = (pi/2) sinh(t); weights len/2 * (pi/2) cosh t / cosh^2 s.
  auto term = [&](long double t) -> long double {
    const long double s = 0.5L * kPi * std::sinh(t);
    const long double cs = std::cosh(s);
    const long double w = 0.5L * len * 0.5L * kPi * std::cosh(t) / (cs * cs);
    if (w == 0.0L || !std::isfinite(w)) return 0.0L;
    const long double x = a + len / (1.0L + std::exp(-2.0L * s));
    if (!(x > a) || !(x < b)) return 0.0L;
    return w * f(x);
  };
  const long double tmax = 4.0L;
  long double h = 0.5L;
  long double sum = term(0.0L);
  for (long double t = h; t <= tmax; t += h) sum += term(t) + term(-t);
  long double prev = sum * h;
  for (int level = 1; level <= 12; ++level) {
    h *= 0.5L;
    long double add = 0.0L;
    for (long double t = h; t <= tmax; t += 2 * h) add += term(t) + term(-t);
    sum += add;
    const long double cur = sum * h;
    if (level >= 3 && std::fabs(cur - prev) <= tol * std::max(1.0L, std::fabs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

long double bump(long double x, long double r) {
  const long double u = x / r;
  if (std::fabs(u) >= 1.0L) return 0.0L;
  return std::exp(-1.0L / (1.0L - u * u));
}

namespace {

long double unit_bump(long double t) {
  if (t <= 0.0L || t >= 1.0L) return 0.0L;
  return std::exp(-1.0L / (4.0L * t * (1.0L - t)));
}

long double smoothstep_total() {
  static const long double z = tanh_sinh(unit_bump, 0.0L, 1.0L, 1e-18L);
  return z;
}

}  // namespace

long double smoothstep(long double t) {
  if (t <= 0.0L) return 0.0L;
  if (t >= 1.0L) return 1.0L;
  if (t > 0.5L) return 1.0L - smoothstep(1.0L - t);
  return tanh_sinh(unit_bump, 0.0L, t, 1e-18L) / smoothstep_total();
}

long double window(long double d, long double r_in, long double r_out) {
  if (d <= r_in) return 1.0L;
  if (d >= r_out) return 0.0L;
  return smoothstep((r_out - d) / (r_out - r_in));
}

namespace {

// Integral of g over [0, R] split at the given points.
long double split_integral(const Fn& g, std::vector<long double> pts, long double R) {
  pts.push_back(0.0L);
  pts.push_back(R);
  std::sort(pts.begin(), pts.end());
  long double s = 0.0L;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const long double a = std::max(0.0L, pts[i]), b = std::min(R, pts[i + 1]);
    if (b > a) s += tanh_sinh(g, a, b);
  }
  return s;
}

}  // namespace

long double finite_part_inverse_abs(const Fn& phi, long double r_in, long double r_out, long double R,
                                    const std::vector<long double>& breaks) {
  const long double p0 = phi(0.0L);
  auto g = [&](long double x) { return (phi(x) + phi(-x) - 2.0L * p0 * window(x, r_in, r_out)) / x; };
  std::vector<long double> pts(breaks);
  pts.push_back(r_in);
  pts.push_back(r_out);
  return split_integral(g, pts, R);
}

long double improper_power(const Fn& phi, long double p, long double R) {
  auto g = [&](long double x) { return (phi(x) + phi(-x)) / std::pow(x, p); };
  return tanh_sinh(g, 0.0L, R);
}

long double inverse_abs_away(const Fn& phi, long double a, long double b) {
  if (!(a > 0.0L) || !(b > a)) throw std::invalid_argument("inverse_abs_away: need 0 < a < b");
  return tanh_sinh([&](long double x) { return phi(x) / x; }, a, b);
}

long double window_difference(long double r_in1, long double r_out1, long double r_in2, long double r_out2) {
  auto g = [&](long double x) { return (window(x, r_in2, r_out2) - window(x, r_in1, r_out1)) / x; };
  const long double lo = std::min(r_in1, r_in2), hi = std::max(r_out1, r_out2);
  long double pts[4] = {r_in1, r_out1, r_in2, r_out2};
  std::sort(pts, pts + 4);
  long double s = 0.0L;
  for (int i = 0; i < 3; ++i)
    if (pts[i + 1] > pts[i] && pts[i] >= lo && pts[i + 1] <= hi) s += tanh_sinh(g, pts[i], pts[i + 1]);
  return 2.0L * s;
}

long double counterterm_inverse_abs(long double lambda, long double r_in, long double r_out) {
  auto g = [&](long double x) { return (1.0L - window(x, lambda / 8.0L, lambda)) * window(x, r_in, r_out) / x; };
  long double pts[4] = {lambda / 8.0L, lambda, r_in, r_out};
  std::sort(pts, pts + 4);
  long double s = 0.0L;
  for (int i = 0; i < 3; ++i)
    if (pts[i + 1] > pts[i] && pts[i] >= lambda / 8.0L) s += tanh_sinh(g, pts[i], pts[i + 1]);
  return 2.0L * s;
}

long double radial_finite_part_3d(const Fn& kernel, const Fn& g, long double r_in, long double r_out, long double R,
                                  const std::vector<long double>& breaks) {
  const long double g0 = g(0.0L);
  auto h = [&](long double r) { return r * r * kernel(r) * (g(r) - g0 * window(r, r_in, r_out)); };
  std::vector<long double> pts(breaks);
  pts.push_back(r_in);
  pts.push_back(r_out);
  return 4.0L * kPi * split_integral(h, pts, R);
}

long double radial_integral_3d(const Fn& kernel, const Fn& g, long double R) {
  return 4.0L * kPi * tanh_sinh([&](long double r) { return r * r * kernel(r) * g(r); }, 0.0L, R);
}

}  // namespace distrenorm::oracle
