#include "distrenorm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "distrenorm/errors.hpp"
#include "distrenorm/gauss.hpp"
#include "distrenorm/kernels.hpp"

namespace distrenorm {

std::string to_string(QuadratureMethod m) {
  switch (m) {
    case QuadratureMethod::Auto: return "auto";
    case QuadratureMethod::Deterministic: return "deterministic";
    case QuadratureMethod::MonteCarlo: return "monte-carlo";
  }
  return "auto";
}

QuadratureMethod quadrature_method_from_string(const std::string& s) {
  if (s == "auto") return QuadratureMethod::Auto;
  if (s == "deterministic") return QuadratureMethod::Deterministic;
  if (s == "monte-carlo") return QuadratureMethod::MonteCarlo;
  throw ParameterError("unknown quadrature method '" + s + "' (expected auto, deterministic or monte-carlo)");
}

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0)) throw ParameterError("quadrature: abs_tol must be positive");
  if (!(rel_tol >= 0.0)) throw ParameterError("quadrature: rel_tol must be nonnegative");
  if (max_depth < 1 || max_depth > kMaxShellDepth) throw ParameterError("quadrature: max_depth out of range");
  if (max_subdivisions < 1) throw ParameterError("quadrature: max_subdivisions must be positive");
  if (edge_refinement < 0 || edge_refinement > 1024)
    throw ParameterError("quadrature: edge_refinement must be in [0, 1024]");
  if (method == QuadratureMethod::MonteCarlo && mc_samples < 2)
    throw ParameterError("quadrature: Monte Carlo needs at least 2 samples");
}

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw DomainError("quadrature: integrand is not finite at a quadrature node");
  return v;
}

struct Segment {
  double a, b, value, error;
  std::size_t id;
};

struct ByError {
  bool operator()(const Segment& x, const Segment& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.id > y.id;
  }
};

Segment gk15(const std::function<double(double)>& f, double a, double b, std::size_t id) {
  const auto& r = gauss_kronrod_15();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0, g = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double v = checked(f(c + h * r.nodes[i]));
    k += r.kronrod_weights[i] * v;
    g += r.gauss_weights[i] * v;
  }
  return {a, b, k * h, std::fabs((k - g) * h), id};
}

}  // namespace

QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                    double rel_tol, int max_intervals) {
  QuadratureResult res;
  if (a == b) return res;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Segment, std::vector<Segment>, ByError> heap;
  std::vector<Segment> done;
  std::size_t next_id = 0;
  Segment s0 = gk15(f, a, b, next_id++);
  res.evaluations = 15;
  double total = s0.value, err = s0.error;
  heap.push(s0);
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::fabs(total))) {
    if (count >= max_intervals) {
      res.converged = false;
      break;
    }
    Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) {  // cannot split further
      done.push_back(s);
      err -= s.error;
      if (heap.empty()) break;
      continue;
    }
    Segment l = gk15(f, s.a, mid, next_id++), r = gk15(f, mid, s.b, next_id++);
    res.evaluations += 30;
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  std::sort(done.begin(), done.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
  kernels::OrderedAccumulator v, e;
  for (const auto& s : done) {
    v.add(s.value);
    e.add(s.error);
  }
  res.value = sign * v.value();
  res.error = e.value();
  return res;
}

namespace {

struct Region {
  std::vector<double> center, half;
  double value = 0, error = 0;
  int split_axis = 0;
  std::size_t id = 0;
  bool straddles = false;  // nodes include exact zeros and nonzeros
  bool forced = false;     // near an edge and still coarse
};

struct RegionByError {
  bool operator()(const Region& x, const Region& y) const {
    if (x.forced != y.forced) return y.forced;
    if (x.error != y.error) return x.error < y.error;
    return x.id > y.id;
  }
};

// Regions whose nodes see both exact zeros and nonzero values contain the edge of a compactly
// supported integrand, where the error estimate is unreliable: the steep part can sit between
// nodes, or inside a child whose nodes are all zero.
void mark(Region& r, const std::vector<double>& root_half, bool parent_straddles, int edge_refinement) {
  r.forced = false;
  if (edge_refinement <= 0 || (!r.straddles && !parent_straddles)) return;
  double worst = 1.0 / edge_refinement;
  for (std::size_t i = 0; i < r.half.size(); ++i) {
    const double rel = r.half[i] / root_half[i];
    if (rel > worst) {
      worst = rel;
      r.forced = true;
      r.split_axis = static_cast<int>(i);
    }
  }
}

// Genz-Malik degree-7 rule with embedded degree-5 rule.
class GenzMalik {
 public:
  explicit GenzMalik(int n) : n_(n) {
    const double dn = n;
    w1_ = (12824.0 - 9120.0 * dn + 400.0 * dn * dn) / 19683.0;
    w2_ = 980.0 / 6561.0;
    w3_ = (1820.0 - 400.0 * dn) / 19683.0;
    w4_ = 200.0 / 19683.0;
    w5_ = 6859.0 / 19683.0 / std::ldexp(1.0, n);
    e1_ = (729.0 - 950.0 * dn + 50.0 * dn * dn) / 729.0;
    e2_ = 245.0 / 486.0;
    e3_ = (265.0 - 100.0 * dn) / 1458.0;
    e4_ = 25.0 / 729.0;
  }

  std::uint64_t points() const {
    return 1 + 4 * static_cast<std::uint64_t>(n_) + 2 * static_cast<std::uint64_t>(n_) * (n_ - 1) +
           (std::uint64_t{1} << n_);
  }

  void apply(const Integrand& f, Region& r) const {
    const auto n = static_cast<std::size_t>(n_);
    std::vector<double> x(r.center);
    int zeros = 0, nonzeros = 0;
    auto eval = [&] {
      const double v = checked(f(x));
      ++(v == 0.0 ? zeros : nonzeros);
      return v;
    };
    double vol = 1.0;
    for (double h : r.half) vol *= 2.0 * h;
    const double f0 = eval();
    double s2 = 0, s3 = 0, s4 = 0, s5 = 0;
    const double ratio = (l2_ * l2_) / (l4_ * l4_);
    double best_diff = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = r.center[i] - l2_ * r.half[i];
      const double a = eval();
      x[i] = r.center[i] + l2_ * r.half[i];
      const double b = eval();
      x[i] = r.center[i] - l4_ * r.half[i];
      const double c = eval();
      x[i] = r.center[i] + l4_ * r.half[i];
      const double d = eval();
      x[i] = r.center[i];
      s2 += a + b;
      s3 += c + d;
      const double diff = std::fabs(a + b - 2 * f0 - ratio * (c + d - 2 * f0));
      // Near-ties (including all-zero differences) go to the widest axis; otherwise a region whose
      // features only reach the corner nodes is split along the same axis forever.
      const double tie = 1e-10 * std::max(diff, best_diff);
      if (diff > best_diff + tie) {
        best_diff = diff;
        r.split_axis = static_cast<int>(i);
      } else if (std::fabs(diff - best_diff) <= tie && r.half[i] > r.half[static_cast<std::size_t>(r.split_axis)]) {
        r.split_axis = static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (int si = -1; si <= 1; si += 2)
          for (int sj = -1; sj <= 1; sj += 2) {
            x[i] = r.center[i] + si * l4_ * r.half[i];
            x[j] = r.center[j] + sj * l4_ * r.half[j];
            s4 += eval();
            x[i] = r.center[i];
            x[j] = r.center[j];
          }
    const std::size_t corners = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      for (std::size_t i = 0; i < n; ++i) x[i] = r.center[i] + ((mask >> i) & 1u ? l5_ : -l5_) * r.half[i];
      s5 += eval();
    }
    const double i7 = vol * (w1_ * f0 + w2_ * s2 + w3_ * s3 + w4_ * s4 + w5_ * s5);
    const double i5 = vol * (e1_ * f0 + e2_ * s2 + e3_ * s3 + e4_ * s4);
    r.value = i7;
    r.error = std::fabs(i7 - i5);
    r.straddles = zeros > 0 && nonzeros > 0;
  }

 private:
  int n_;
  double w1_, w2_, w3_, w4_, w5_, e1_, e2_, e3_, e4_;
  const double l2_ = std::sqrt(9.0 / 70.0);
  const double l4_ = std::sqrt(9.0 / 10.0);
  const double l5_ = std::sqrt(9.0 / 19.0);
};

}  // namespace

QuadratureResult integrate_cubature(const Integrand& f, const Box& box, double abs_tol, double rel_tol,
                                    int max_regions, int edge_refinement) {
  const int n = box.dim();
  if (n < 2) throw DomainError("cubature needs dimension >= 2");
  if (n > 12) throw CapabilityError("cubature: dimension too large");
  if (!box.bounded()) throw DomainError("cubature: box must be bounded");
  QuadratureResult res;
  if (box.empty()) return res;
  GenzMalik rule(n);
  std::priority_queue<Region, std::vector<Region>, RegionByError> heap;
  std::size_t next_id = 0;
  Region r0;
  r0.center = box.center();
  for (int i = 0; i < n; ++i)
    r0.half.push_back(0.5 * (box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)]));
  r0.id = next_id++;
  rule.apply(f, r0);
  const std::vector<double> root_half = r0.half;
  mark(r0, root_half, false, edge_refinement);
  res.evaluations = rule.points();
  double total = r0.value, err = r0.error;
  heap.push(std::move(r0));
  int count = 1;
  std::vector<Region> done;
  while (err > std::max(abs_tol, rel_tol * std::fabs(total)) || heap.top().forced) {
    if (count >= max_regions) {
      res.converged = false;
      break;
    }
    Region r = heap.top();
    heap.pop();
    const auto ax = static_cast<std::size_t>(r.split_axis);
    Region a = r, b = r;
    a.half[ax] = b.half[ax] = 0.5 * r.half[ax];
    a.center[ax] = r.center[ax] - a.half[ax];
    b.center[ax] = r.center[ax] + b.half[ax];
    if (!(a.half[ax] > 0.0) || a.center[ax] == r.center[ax]) {
      done.push_back(r);
      err -= r.error;
      if (heap.empty()) break;
      continue;
    }
    a.id = next_id++;
    b.id = next_id++;
    rule.apply(f, a);
    rule.apply(f, b);
    mark(a, root_half, r.straddles, edge_refinement);
    mark(b, root_half, r.straddles, edge_refinement);
    res.evaluations += 2 * rule.points();
    total += a.value + b.value - r.value;
    err += a.error + b.error - r.error;
    heap.push(std::move(a));
    heap.push(std::move(b));
    ++count;
  }
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  std::sort(done.begin(), done.end(), [](const Region& x, const Region& y) { return x.id < y.id; });
  kernels::OrderedAccumulator v, e;
  for (const auto& r : done) {
    v.add(r.value);
    e.add(r.error);
  }
  res.value = v.value();
  res.error = e.value();
  return res;
}

QuadratureResult integrate_monte_carlo(const Integrand& f, const Box& box, std::uint64_t samples,
                                       std::uint64_t seed) {
  if (!box.bounded()) throw DomainError("Monte Carlo: box must be bounded");
  if (samples < 2) throw ParameterError("Monte Carlo: need at least 2 samples");
  QuadratureResult res;
  if (box.empty()) return res;
  const auto n = static_cast<std::size_t>(box.dim());
  double vol = 1.0;
  for (std::size_t i = 0; i < n; ++i) vol *= box.hi[i] - box.lo[i];
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);
  kernels::OrderedAccumulator sum, sum2;
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      // 53 random bits mapped to [0, 1); independent of the library's distribution classes.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x[i] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
    }
    const double v = checked(f(x));
    sum.add(v);
    sum2.add(v * v);
  }
  const double ns = static_cast<double>(samples);
  const double mean = sum.value() / ns;
  const double var = std::max(0.0, sum2.value() / ns - mean * mean) * ns / (ns - 1.0);
  res.value = vol * mean;
  res.error = vol * std::sqrt(var / ns);
  res.evaluations = samples;
  return res;
}

QuadratureResult integrate_box(const Integrand& f, const Box& box, const QuadratureSpec& spec) {
  spec.validate();
  if (!box.bounded()) throw DomainError("integration region must be bounded");
  if (box.empty()) return {};
  const int n = box.dim();
  const bool mc = spec.method == QuadratureMethod::MonteCarlo || (spec.method == QuadratureMethod::Auto && n > 3);
  if (mc) return integrate_monte_carlo(f, box, spec.mc_samples, spec.seed);
  if (n == 1) {
    return integrate_interval([&](double t) { return f(std::span<const double>(&t, 1)); }, box.lo[0], box.hi[0],
                              spec.abs_tol, spec.rel_tol, spec.max_subdivisions);
  }
  return integrate_cubature(f, box, spec.abs_tol, spec.rel_tol, spec.max_subdivisions, spec.edge_refinement);
}

namespace {

// Chart around a linear set: q = (rho, angles..., u...).
class Chart {
 public:
  Chart(const ClosedSet& set, const Box& support) : set_(set) {
    c_ = set.codimension();
    k_ = set.along().rows;
    if (c_ > 3) throw CapabilityError("deterministic shell quadrature supports codimension <= 3");
    const auto& e = set.along();
    const auto& o = set.origin();
    auto bc = support.center();
    for (int i = 0; i < k_; ++i) {
      double mid = 0, half = 0;
      for (int j = 0; j < set.ambient_dim(); ++j) {
        const auto jj = static_cast<std::size_t>(j);
        mid += e(i, j) * (bc[jj] - o[jj]);
        half += std::fabs(e(i, j)) * 0.5 * (support.hi[jj] - support.lo[jj]);
      }
      ulo_.push_back(mid - half);
      uhi_.push_back(mid + half);
    }
  }

  int dims() const { return c_ + k_; }

  Box box(double ra, double rb) const {
    Box b;
    b.lo.push_back(ra);
    b.hi.push_back(rb);
    if (c_ == 2) {
      b.lo.push_back(0.0);
      b.hi.push_back(2 * std::numbers::pi);
    } else if (c_ == 3) {
      b.lo.push_back(-1.0);
      b.hi.push_back(1.0);
      b.lo.push_back(0.0);
      b.hi.push_back(2 * std::numbers::pi);
    }
    for (int i = 0; i < k_; ++i) {
      b.lo.push_back(ulo_[static_cast<std::size_t>(i)]);
      b.hi.push_back(uhi_[static_cast<std::size_t>(i)]);
    }
    return b;
  }

  // Jacobian-weighted integrand in chart coordinates.
  double eval(const Integrand& f, std::span<const double> q, std::vector<double>& x) const {
    const double rho = q[0];
    const auto& o = set_.origin();
    const auto& e = set_.along();
    const auto& nrm = set_.normal();
    const int dim = set_.ambient_dim();
    double w[3] = {0, 0, 0};
    double jac = 1.0;
    std::size_t p = 1;
    if (c_ == 2) {
      w[0] = std::cos(q[1]);
      w[1] = std::sin(q[1]);
      jac = rho;
      p = 2;
    } else if (c_ == 3) {
      const double t = q[1], s = std::sqrt(std::max(0.0, 1.0 - t * t));
      w[0] = s * std::cos(q[2]);
      w[1] = s * std::sin(q[2]);
      w[2] = t;
      jac = rho * rho;
      p = 3;
    }
    auto place = [&](double sign) {
      for (int j = 0; j < dim; ++j) {
        double v = o[static_cast<std::size_t>(j)];
        for (int i = 0; i < k_; ++i) v += e(i, j) * q[p + static_cast<std::size_t>(i)];
        for (int i = 0; i < c_; ++i) v += sign * rho * nrm(i, j) * w[i];
        x[static_cast<std::size_t>(j)] = v;
      }
    };
    if (c_ == 1) {
      w[0] = 1.0;
      place(1.0);
      double v = f(x);
      place(-1.0);
      return v + f(x);
    }
    place(1.0);
    return jac * f(x);
  }

 private:
  const ClosedSet& set_;
  int c_ = 0, k_ = 0;
  std::vector<double> ulo_, uhi_;
};

}  // namespace

QuadratureResult integrate_near_set(const Integrand& f, const ClosedSet& set, const Box& support,
                                    const QuadratureSpec& spec, double min_distance) {
  spec.validate();
  if (!support.bounded()) throw DomainError("integration region must be bounded");
  if (support.dim() != set.ambient_dim()) throw DomainError("integration region has wrong dimension");
  if (support.empty()) return {};
  const double lower = set.distance_lower_bound(support);
  if (lower > 0.0 || !spec.shell_refinement || spec.method == QuadratureMethod::MonteCarlo)
    return integrate_box(f, support, spec);
  if (!set.linear()) throw CapabilityError("shell quadrature needs a linear singular set");
  Chart chart(set, support);
  if (spec.method == QuadratureMethod::Auto && chart.dims() > 3) return integrate_box(f, support, spec);

  // Restrict the integrand to the support box so that chart regions outside it cost nothing.
  const Integrand masked = [&](std::span<const double> x) { return support.contains(x) ? f(x) : 0.0; };
  const double rho_hi = set.distance_upper_bound(support);
  // Below this radius chart points are no longer distinguishable from the set
  // in ambient coordinates.
  double scale = 1.0;
  for (int j = 0; j < support.dim(); ++j)
    scale = std::max({scale, std::fabs(support.lo[static_cast<std::size_t>(j)]),
                      std::fabs(support.hi[static_cast<std::size_t>(j)])});
  const double rho_floor = 1e-13 * scale;
  const double shell_abs = spec.abs_tol / 8.0;
  auto shell = [&](int k) -> QuadratureResult {
    const double rb = std::ldexp(rho_hi, -k), ra = std::ldexp(rho_hi, -k - 1);
    if (rb <= min_distance) return {};
    std::vector<double> x(static_cast<std::size_t>(set.ambient_dim()));
    Integrand g = [&](std::span<const double> q) { return chart.eval(masked, q, x); };
    Box b = chart.box(std::max(ra, min_distance), rb);
    if (chart.dims() == 1)
      return integrate_interval([&](double r) { return g(std::span<const double>(&r, 1)); }, b.lo[0], b.hi[0],
                                shell_abs, spec.rel_tol, spec.max_subdivisions);
    return integrate_cubature(g, b, shell_abs, spec.rel_tol, spec.max_subdivisions, spec.edge_refinement);
  };

  QuadratureResult res;
  std::vector<double> c;
  kernels::OrderedAccumulator sum, err;
  constexpr int kBatch = 8;
  int zero_run = 0;
  bool seen_nonzero = false;  // zero shells only end the scan once the integrand has been met
  bool finished = false;
  for (int start = 0; start < spec.max_depth && !finished; start += kBatch) {
    const int count = std::min(kBatch, spec.max_depth - start);
    auto batch = kernels::map_indexed(static_cast<std::size_t>(count),
                                      [&](std::size_t i) { return shell(start + static_cast<int>(i)); });
    for (int i = 0; i < count && !finished; ++i) {
      const int k = start + i;
      const auto& s = batch[static_cast<std::size_t>(i)];
      c.push_back(s.value);
      sum.add(s.value);
      err.add(s.error);
      res.evaluations += s.evaluations;
      res.converged = res.converged && s.converged;
      res.shells = k + 1;
      if (std::ldexp(rho_hi, -k - 1) <= min_distance) {
        finished = true;
        break;
      }
      if (std::ldexp(rho_hi, -k - 1) <= rho_floor && k >= 3) {
        // Close with the geometric tail of the last shells.
        const double a0 = c.back(), a1 = c[c.size() - 2];
        double tail = 0.0;
        if (a1 != 0.0 && std::fabs(a0 / a1) < 0.95) tail = a0 * (a0 / a1) / (1.0 - a0 / a1);
        else if (a0 != 0.0) res.converged = false;
        sum.add(tail);
        err.add(std::fabs(tail));
        if (std::fabs(tail) > std::max(spec.abs_tol, spec.rel_tol * std::fabs(sum.value()))) res.converged = false;
        finished = true;
        break;
      }
      if (s.value != 0.0) seen_nonzero = true;
      zero_run = s.value == 0.0 ? zero_run + 1 : 0;
      if (seen_nonzero && zero_run >= 6) {
        finished = true;
        break;
      }
      if (k < 3) continue;
      const double a2 = std::fabs(c[c.size() - 3]), a1 = std::fabs(c[c.size() - 2]), a0 = std::fabs(c.back());
      const double tol = std::max(spec.abs_tol, spec.rel_tol * std::fabs(sum.value()));
      if (a1 > 0.0 && a2 > 0.0) {
        const double r0 = a0 / a1, r1 = a1 / a2;
        const double rmax = std::max(r0, r1);
        if (rmax < 0.95) {
          const double tail_bound = a0 * rmax / (1.0 - rmax);
          if (tail_bound <= tol) {
            const double rho = c.back() / c[c.size() - 2];
            if (std::fabs(r0 - r1) < 0.02 && a0 > 0.0) sum.add(c.back() * rho / (1.0 - rho));
            err.add(tail_bound);
            finished = true;
            break;
          }
        }
      } else if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && std::fabs(sum.value()) > 0.0) {
        finished = true;
        break;
      }
      if (k >= 18) {
        const double back0 = std::fabs(c[c.size() - 9]), back1 = std::fabs(c[c.size() - 10]);
        if (a0 > 0.0 && back0 > 0.0 && a0 >= 0.97 * back0 && a1 > 0.0 && back1 > 0.0 && a1 >= 0.97 * back1) {
          std::ostringstream os;
          os << "shell contributions do not decay toward the singular set (shell " << k << ", contribution "
             << c.back() << "); the density is not integrable against this test function";
          throw DivergenceError(os.str());
        }
      }
    }
  }
  if (!finished && seen_nonzero) {
    std::ostringstream os;
    os << "shell quadrature did not converge within " << spec.max_depth << " shells (last contribution "
       << (c.empty() ? 0.0 : c.back()) << ")";
    throw DivergenceError(os.str());
  }
  res.value = sum.value();
  res.error = err.value();
  return res;
}

}  // namespace distrenorm
