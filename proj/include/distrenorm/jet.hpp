#pragma once

#include <span>
#include <vector>

#include "distrenorm/multi_index.hpp"

namespace distrenorm {

// Dense row-major matrix, only used for the small linear maps that show up in
// charts and coordinate embeddings.
struct LinearMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  LinearMap() = default;
  LinearMap(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r * c), 0.0) {}
  static LinearMap identity(int n);

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * cols + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * cols + j)]; }

  std::vector<double> apply(std::span<const double> x) const;
  LinearMap transpose() const;
};

// A jet of order m: all partial derivatives of order <= m at a point.
//
// Stored as normalized Taylor coefficients f^k / k! over the graded
// multi-index table, so that products are plain truncated convolutions.
class Jet {
 public:
  Jet() = default;
  Jet(int dim, int order);

  static Jet constant(int dim, int order, double c);
  // The coordinate function x_i expanded around x0_i.
  static Jet variable(int dim, int order, int i, double x0);

  int dim() const { return table_ ? table_->dim() : 0; }
  int order() const { return table_ ? table_->order() : 0; }
  std::size_t size() const { return c_.size(); }
  const MultiIndexTable& table() const { return *table_; }

  double value() const { return c_[0]; }
  std::span<const double> taylor() const { return c_; }
  std::span<double> taylor() { return c_; }
  double taylor(std::size_t rank) const { return c_[rank]; }

  // Partial derivative d^k f at the expansion point.
  double derivative(std::span<const int> k) const;
  double derivative_at(std::size_t rank) const { return c_[rank] * table_->factorial(rank); }
  double max_abs_derivative(int up_to_order) const;

  Jet truncated(int order) const;
  bool is_zero() const;
  bool is_finite() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& add_constant(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);

  // g o f for a univariate g with Taylor coefficients g^(n)(f(x0)) / n!,
  // n = 0..order.
  Jet compose(std::span<const double> univariate_taylor) const;

  // Jet of y -> f(z0 + M (y - y0)) at y0, where *this is the jet of f at z0.
  // M has rows == dim().
  Jet substitute_linear(const LinearMap& m) const;

  // Jet of d^alpha f truncated to `new_order`; requires |alpha| + new_order <= order().
  Jet derivative_jet(std::span<const int> alpha, int new_order) const;

  // Taylor polynomial sum_k c_k v^k evaluated at the displacement v.
  double evaluate_polynomial(std::span<const double> v) const;

 private:
  const MultiIndexTable* table_ = nullptr;
  std::vector<double> c_;
};

// Univariate Taylor coefficient generators g^(n)(a) / n!, n = 0..order.
namespace univariate {
std::vector<double> exp(double a, int order);
std::vector<double> log(double a, int order);
std::vector<double> power(double a, double p, int order);
std::vector<double> sin(double a, int order);
std::vector<double> cos(double a, int order);
// exp(-1 / (1 - s)) for s < 1, identically zero for s >= 1.
std::vector<double> bump_profile(double s, int order);
// Monotone smoothstep S on [0,1]: normalized integral of the [0,1] bump;
// S = 0 for t <= 0 and S = 1 for t >= 1.
std::vector<double> smoothstep(double t, int order);
double smoothstep_value(double t);
double bump_profile_value(double s);
}  // namespace univariate

}  // namespace distrenorm
