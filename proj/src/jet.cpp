#include "distrenorm/jet.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "distrenorm/errors.hpp"
#include "distrenorm/gauss.hpp"

namespace distrenorm {

LinearMap LinearMap::identity(int n) {
  LinearMap m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> LinearMap::apply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
  for (int i = 0; i < rows; ++i) {
    double s = 0;
    for (int j = 0; j < cols; ++j) s += (*this)(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

LinearMap LinearMap::transpose() const {
  LinearMap t(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Jet::Jet(int dim, int order) : table_(&MultiIndexTable::get(dim, order)), c_(table_->size(), 0.0) {}

Jet Jet::constant(int dim, int order, double c) {
  Jet j(dim, order);
  j.c_[0] = c;
  return j;
}

Jet Jet::variable(int dim, int order, int i, double x0) {
  Jet j(dim, order);
  j.c_[0] = x0;
  if (order >= 1) j.c_[static_cast<std::size_t>(i) + 1] = 1.0;  // degree-1 indices are e_0..e_{dim-1}
  return j;
}

double Jet::derivative(std::span<const int> k) const {
  auto r = table_->rank(k);
  if (r == MultiIndexTable::npos) throw ParameterError("jet: derivative index exceeds jet order");
  return derivative_at(r);
}

double Jet::max_abs_derivative(int up_to_order) const {
  double m = 0;
  const std::size_t n = table_->count_up_to(std::min(up_to_order, order()));
  for (std::size_t r = 0; r < n; ++r) m = std::max(m, std::fabs(derivative_at(r)));
  return m;
}

Jet Jet::truncated(int order) const {
  if (order >= this->order()) return *this;
  Jet j(dim(), order);
  std::copy_n(c_.begin(), j.c_.size(), j.c_.begin());
  return j;
}

bool Jet::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
}

bool Jet::is_finite() const {
  return std::all_of(c_.begin(), c_.end(), [](double v) { return std::isfinite(v); });
}

static void check_same(const Jet& a, const Jet& b) {
  if (&a.table() != &b.table()) throw ParameterError("jet: mismatched dimension or order");
}

Jet& Jet::operator+=(const Jet& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_same(a, b);
  Jet out(a.dim(), a.order());
  if (a.order() == 0) {
    out.c_[0] = a.c_[0] * b.c_[0];
    return out;
  }
  for (const auto& t : a.table_->product_terms()) out.c_[t.result] += a.c_[t.a] * b.c_[t.b];
  return out;
}

Jet Jet::compose(std::span<const double> g) const {
  const int m = order();
  if (static_cast<int>(g.size()) < m + 1) throw ParameterError("jet: too few univariate coefficients");
  if (m == 0) return constant(dim(), 0, g[0]);
  bool higher_zero = true;
  for (int n = 1; n <= m; ++n) higher_zero = higher_zero && g[static_cast<std::size_t>(n)] == 0.0;
  if (higher_zero) return constant(dim(), m, g[0]);
  Jet delta = *this;
  delta.c_[0] = 0.0;
  Jet acc = constant(dim(), m, g[static_cast<std::size_t>(m)]);
  for (int n = m - 1; n >= 0; --n) {
    acc = acc * delta;
    acc.c_[0] += g[static_cast<std::size_t>(n)];
  }
  return acc;
}

Jet Jet::substitute_linear(const LinearMap& m) const {
  if (m.rows != dim()) throw ParameterError("jet: linear map rows must equal jet dimension");
  const int q = m.cols;
  const int ord = order();
  Jet out(q, ord);

  // Selection maps (each row picks at most one new variable with weight 1,
  // each new variable used at most once) only relabel coefficients.
  std::vector<int> pick(static_cast<std::size_t>(m.rows), -1);
  std::vector<int> used(static_cast<std::size_t>(q), 0);
  bool selection = true;
  for (int i = 0; i < m.rows && selection; ++i) {
    for (int j = 0; j < q; ++j) {
      double v = m(i, j);
      if (v == 0.0) continue;
      if (v != 1.0 || pick[static_cast<std::size_t>(i)] >= 0 || used[static_cast<std::size_t>(j)]) {
        selection = false;
        break;
      }
      pick[static_cast<std::size_t>(i)] = j;
      used[static_cast<std::size_t>(j)] = 1;
    }
  }
  if (selection) {
    std::vector<std::uint8_t> e(static_cast<std::size_t>(q));
    for (std::size_t r = 0; r < c_.size(); ++r) {
      if (c_[r] == 0.0) continue;
      auto k = table_->exponents(r);
      std::fill(e.begin(), e.end(), 0);
      bool ok = true;
      for (int i = 0; i < m.rows; ++i) {
        if (k[static_cast<std::size_t>(i)] == 0) continue;
        int j = pick[static_cast<std::size_t>(i)];
        if (j < 0) {
          ok = false;
          break;
        }
        e[static_cast<std::size_t>(j)] = k[static_cast<std::size_t>(i)];
      }
      if (ok) out.c_[out.table_->rank(std::span<const std::uint8_t>(e))] = c_[r];
    }
    return out;
  }

  // General case: expand sum_k c_k prod_i (M_i . dy)^{k_i}.
  std::vector<std::vector<Jet>> powers(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) {
    Jet lin(q, ord);
    if (ord >= 1)
      for (int j = 0; j < q; ++j) lin.c_[static_cast<std::size_t>(j) + 1] = m(i, j);
    auto& p = powers[static_cast<std::size_t>(i)];
    p.push_back(constant(q, ord, 1.0));
    for (int e = 1; e <= ord; ++e) p.push_back(p.back() * lin);
  }
  out.c_[0] = c_[0];
  for (std::size_t r = 1; r < c_.size(); ++r) {
    if (c_[r] == 0.0) continue;
    auto k = table_->exponents(r);
    Jet term;
    bool first = true;
    for (int i = 0; i < m.rows; ++i) {
      int e = k[static_cast<std::size_t>(i)];
      if (e == 0) continue;
      const Jet& p = powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
      if (first) {
        term = p;
        first = false;
      } else {
        term = term * p;
      }
    }
    for (std::size_t s = 0; s < out.c_.size(); ++s) out.c_[s] += c_[r] * term.c_[s];
  }
  return out;
}

Jet Jet::derivative_jet(std::span<const int> alpha, int new_order) const {
  int a = 0;
  for (int v : alpha) a += v;
  if (static_cast<int>(alpha.size()) != dim() || a + new_order > order())
    throw ParameterError("jet: derivative jet exceeds available order");
  Jet out(dim(), new_order);
  std::vector<int> k(static_cast<std::size_t>(dim()));
  for (std::size_t r = 0; r < out.c_.size(); ++r) {
    auto e = out.table_->exponents(r);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = e[i] + alpha[i];
    auto src = table_->rank(std::span<const int>(k));
    out.c_[r] = c_[src] * table_->factorial(src) / out.table_->factorial(r);
  }
  return out;
}

double Jet::evaluate_polynomial(std::span<const double> v) const {
  const int d = dim();
  const int ord = order();
  std::vector<double> pw(static_cast<std::size_t>(d * (ord + 1)));
  for (int i = 0; i < d; ++i) {
    double p = 1.0;
    for (int e = 0; e <= ord; ++e) {
      pw[static_cast<std::size_t>(i * (ord + 1) + e)] = p;
      p *= v[static_cast<std::size_t>(i)];
    }
  }
  double s = 0;
  for (std::size_t r = 0; r < c_.size(); ++r) {
    if (c_[r] == 0.0) continue;
    auto k = table_->exponents(r);
    double t = c_[r];
    for (int i = 0; i < d; ++i) t *= pw[static_cast<std::size_t>(i * (ord + 1) + k[static_cast<std::size_t>(i)])];
    s += t;
  }
  return s;
}

namespace univariate {

namespace {

// Taylor coefficients of exp(g) from those of g.
std::vector<double> exp_of_series(const std::vector<double>& g) {
  const std::size_t n = g.size();
  std::vector<double> e(n, 0.0);
  e[0] = std::exp(g[0]);
  if (e[0] == 0.0) return e;
  for (std::size_t k = 1; k < n; ++k) {
    double s = 0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * g[j] * e[k - j];
    e[k] = s / static_cast<double>(k);
  }
  return e;
}

constexpr double kExpFloor = -745.0;

// Unnormalized bump on (0,1) used for the smoothstep: exp(-1 / (4 t (1 - t))).
std::vector<double> unit_bump(double t, int order) {
  std::vector<double> g(static_cast<std::size_t>(order) + 1, 0.0);
  if (t <= 0.0 || t >= 1.0) return g;
  const double g0 = -0.25 / (t * (1.0 - t));
  if (g0 < kExpFloor) return g;
  // 1/(t(1-t)) = 1/t + 1/(1-t)
  double it = 1.0 / t, iu = 1.0 / (1.0 - t);
  double pt = it, pu = iu, sign = 1.0;
  for (int n = 0; n <= order; ++n) {
    g[static_cast<std::size_t>(n)] = -0.25 * (sign * pt + pu);
    pt *= it;
    pu *= iu;
    sign = -sign;
  }
  return exp_of_series(g);
}

double unit_bump_value(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-0.25 / (t * (1.0 - t)));
}

struct SmoothstepTable {
  static constexpr int kCells = 2048;
  std::vector<double> cumulative;  // integral of the bump over [0, i / kCells]
  double total = 0;

  SmoothstepTable() {
    const auto& gl = gauss_legendre(20);
    cumulative.assign(kCells + 1, 0.0);
    const double h = 1.0 / kCells;
    double sum = 0, comp = 0;
    for (int i = 0; i < kCells; ++i) {
      double a = i * h, cell = 0;
      for (std::size_t q = 0; q < gl.nodes.size(); ++q)
        cell += gl.weights[q] * unit_bump_value(a + 0.5 * h * (gl.nodes[q] + 1.0));
      cell *= 0.5 * h;
      double y = cell - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      cumulative[static_cast<std::size_t>(i) + 1] = sum;
    }
    total = sum;
  }

  // integral of the bump over [0, t] for t in [0, 1/2]
  double partial(double t) const {
    const double h = 1.0 / kCells;
    int i = std::min(static_cast<int>(t / h), kCells - 1);
    double a = i * h;
    double w = t - a;
    if (w <= 0.0) return cumulative[static_cast<std::size_t>(i)];
    const auto& gl = gauss_legendre(12);
    double s = 0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q)
      s += gl.weights[q] * unit_bump_value(a + 0.5 * w * (gl.nodes[q] + 1.0));
    return cumulative[static_cast<std::size_t>(i)] + 0.5 * w * s;
  }
};

const SmoothstepTable& smoothstep_table() {
  static const SmoothstepTable table;
  return table;
}

}  // namespace

std::vector<double> exp(double a, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  double e = std::exp(a), f = 1.0;
  for (int n = 0; n <= order; ++n) {
    if (n > 0) f *= n;
    c[static_cast<std::size_t>(n)] = e / f;
  }
  return c;
}

std::vector<double> log(double a, int order) {
  if (!(a > 0.0)) throw DomainError("log: argument must be positive");
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  c[0] = std::log(a);
  double p = 1.0;
  for (int n = 1; n <= order; ++n) {
    p /= a;
    c[static_cast<std::size_t>(n)] = ((n % 2 == 1) ? 1.0 : -1.0) * p / n;
  }
  return c;
}

std::vector<double> power(double a, double p, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  const bool nonneg_int = p >= 0 && std::floor(p) == p;
  if (a == 0.0) {
    if (!nonneg_int) throw DomainError("power: non-integer exponent at zero");
    if (p <= order) c[static_cast<std::size_t>(p)] = 1.0;
    return c;
  }
  if (a < 0.0 && std::floor(p) != p) throw DomainError("power: negative base with non-integer exponent");
  c[0] = std::pow(a, p);
  for (int n = 1; n <= order; ++n)
    c[static_cast<std::size_t>(n)] = c[static_cast<std::size_t>(n) - 1] * (p - n + 1) / (n * a);
  return c;
}

std::vector<double> sin(double a, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  const double s = std::sin(a), co = std::cos(a);
  const double cyc[4] = {s, co, -s, -co};
  double f = 1.0;
  for (int n = 0; n <= order; ++n) {
    if (n > 0) f *= n;
    c[static_cast<std::size_t>(n)] = cyc[n % 4] / f;
  }
  return c;
}

std::vector<double> cos(double a, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  const double s = std::sin(a), co = std::cos(a);
  const double cyc[4] = {co, -s, -co, s};
  double f = 1.0;
  for (int n = 0; n <= order; ++n) {
    if (n > 0) f *= n;
    c[static_cast<std::size_t>(n)] = cyc[n % 4] / f;
  }
  return c;
}

double bump_profile_value(double s) {
  if (s >= 1.0) return 0.0;
  const double g = -1.0 / (1.0 - s);
  return g < kExpFloor ? 0.0 : std::exp(g);
}

std::vector<double> bump_profile(double s, int order) {
  std::vector<double> g(static_cast<std::size_t>(order) + 1, 0.0);
  if (s >= 1.0) return g;
  const double iu = 1.0 / (1.0 - s);
  if (-iu < kExpFloor) return g;
  double p = iu;
  for (int n = 0; n <= order; ++n) {
    g[static_cast<std::size_t>(n)] = -p;
    p *= iu;
  }
  return exp_of_series(g);
}

double smoothstep_value(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const auto& tab = smoothstep_table();
  if (t <= 0.5) return tab.partial(t) / tab.total;
  return 1.0 - tab.partial(1.0 - t) / tab.total;
}

std::vector<double> smoothstep(double t, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  c[0] = smoothstep_value(t);
  if (order == 0 || t <= 0.0 || t >= 1.0) return c;
  const double z = smoothstep_table().total;
  auto b = unit_bump(t, order - 1);
  for (int n = 1; n <= order; ++n) c[static_cast<std::size_t>(n)] = b[static_cast<std::size_t>(n) - 1] / (n * z);
  return c;
}

}  // namespace univariate

}  // namespace distrenorm
