#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "distrenorm/jet.hpp"

namespace distrenorm {

// Axis-aligned box; bounds may be infinite along some axes.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> l, std::vector<double> h);
  static Box cube(std::span<const double> center, double half_width);
  static Box unbounded(int dim);

  int dim() const { return static_cast<int>(lo.size()); }
  bool empty() const;
  bool bounded() const;
  bool contains(std::span<const double> x) const;
  std::vector<double> center() const;
  double half_diagonal() const;
  Box intersect(const Box& o) const;
  Box hull(const Box& o) const;
  Box expanded(double r) const;
};

class FunctionNode {
 public:
  virtual ~FunctionNode() = default;
  virtual int dim() const = 0;
  // Both are only called with points inside support() (when declared).
  virtual double value(std::span<const double> x) const = 0;
  virtual Jet jet(std::span<const double> x, int order) const = 0;
  // A box containing the support; nullopt when not compactly supported
  // (or not known to be).
  virtual std::optional<Box> support() const { return std::nullopt; }
  virtual bool is_zero() const { return false; }
};

// Immutable handle to an expression tree of smooth functions. Every node
// evaluates exact Taylor-mode jets, so derivatives never involve differencing.
class SmoothFunction {
 public:
  SmoothFunction() = default;
  explicit SmoothFunction(std::shared_ptr<const FunctionNode> node);

  int dim() const { return dim_; }
  double value(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return value(x); }
  // Jet of order m at x; the all-zero jet outside the declared support.
  Jet jet(std::span<const double> x, int order) const;
  std::optional<Box> support() const { return support_ ? std::optional<Box>(*support_) : std::nullopt; }
  bool compact() const;
  bool is_zero() const { return zero_; }
  const FunctionNode& node() const { return *node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  // Wrap callables as a function (jet_fn may be empty when only values are needed).
  static SmoothFunction from_callable(int dim, std::function<double(std::span<const double>)> value_fn,
                                      std::function<Jet(std::span<const double>, int)> jet_fn,
                                      std::optional<Box> support = std::nullopt);

 private:
  std::shared_ptr<const FunctionNode> node_;
  // Cached from the immutable node: evaluation checks them on every call.
  std::shared_ptr<const Box> support_;
  int dim_ = 0;
  bool zero_ = false;
};

SmoothFunction operator+(const SmoothFunction& a, const SmoothFunction& b);
SmoothFunction operator-(const SmoothFunction& a, const SmoothFunction& b);
SmoothFunction operator*(const SmoothFunction& a, const SmoothFunction& b);
SmoothFunction operator*(double s, const SmoothFunction& f);
SmoothFunction operator-(const SmoothFunction& f);

namespace fn {

SmoothFunction zero(int dim);
SmoothFunction constant(int dim, double c);
SmoothFunction coordinate(int dim, int i);
// prod_i (x_i - a_i)^{k_i}
SmoothFunction monomial(std::span<const double> a, std::span<const int> k);
// exp(-1 / (1 - |x-c|^2 / r^2)) inside the ball, 0 outside; value e^-1 at c.
SmoothFunction bump(std::span<const double> center, double radius);
// Product of 1-D bumps, one per coordinate, with per-axis radii.
SmoothFunction bump_product(std::span<const double> center, std::span<const double> radii);

SmoothFunction exp(const SmoothFunction& f);
SmoothFunction log(const SmoothFunction& f);
SmoothFunction pow(const SmoothFunction& f, double p);
SmoothFunction sin(const SmoothFunction& f);
SmoothFunction cos(const SmoothFunction& f);
SmoothFunction smoothstep(const SmoothFunction& f);
SmoothFunction bump_profile(const SmoothFunction& f);

// y -> f(M y + b); `support` optionally declares a box (in y) containing the support.
SmoothFunction compose_affine(const SmoothFunction& f, const LinearMap& m, std::span<const double> b,
                              std::optional<Box> support = std::nullopt);
// f evaluated on the listed coordinates of an ambient space of dimension `dim`.
SmoothFunction embed(const SmoothFunction& f, int dim, std::span<const int> coords);
// |M y + b|; jets at the zero set raise SingularLocusError.
SmoothFunction affine_norm(const LinearMap& m, std::span<const double> b);
// d^alpha f
SmoothFunction derivative(const SmoothFunction& f, std::span<const int> alpha);
// -Laplacian f + mass^2 f
SmoothFunction helmholtz(const SmoothFunction& f, double mass);
// Restrict a declared support box (the function must already vanish outside it).
SmoothFunction with_support(const SmoothFunction& f, const Box& box);

}  // namespace fn

// x -> sum_{|k|<=m} (x-a)^k / k! f^k(a)
SmoothFunction taylor_field(const Jet& j, std::span<const double> a, int m);

struct SeminormSpec {
  int order = 0;
  Box region;
  int resolution = 101;  // grid points per axis, >= 2
};

// max over a uniform grid of K (restricted to the declared support) of
// max_{|nu|<=k} |d^nu f|. A lower bound of the true sup that converges as
// the grid is refined.
double seminorm(const SmoothFunction& f, const SeminormSpec& spec);

}  // namespace distrenorm
