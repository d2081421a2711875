#pragma once

#include <functional>
#include <vector>

// Reference computations used to check the library. Everything here is
// deliberately self-contained: long double tanh-sinh quadrature and closed
// forms for the bump, smoothstep and window, sharing no code with the
// jet/quadrature engine.
namespace distrenorm::oracle {

using Fn = std::function<long double(long double)>;

// Double-exponential quadrature on [a, b]; integrable endpoint singularities allowed.
long double tanh_sinh(const Fn& f, long double a, long double b, long double tol = 1e-15L);

// exp(-1 / (1 - (x/r)^2)) on |x| < r.
long double bump(long double x, long double r = 1.0L);
// Smoothstep S on [0, 1] built from exp(-1 / (4 t (1 - t))).
long double smoothstep(long double t);
// 1 for d <= r_in, 0 for d >= r_out, S((r_out - d) / (r_out - r_in)) between.
long double window(long double d, long double r_in, long double r_out);

// Finite part of 1/|x| against phi on R with one subtraction:
// integral of (phi(x) - phi(0) w(|x|)) / |x| over [-R, R].
// `breaks` lists extra points in (0, R) where phi+phi(-.) is not analytic
// (support edges); the integral is split there.
long double finite_part_inverse_abs(const Fn& phi, long double r_in, long double r_out, long double R,
                                    const std::vector<long double>& breaks = {});
// integral of phi(x) / |x|^p over [-R, R] for p < 1.
long double improper_power(const Fn& phi, long double p, long double R);
// integral of phi(x) / |x| over [a, b] with 0 < a < b.
long double inverse_abs_away(const Fn& phi, long double a, long double b);
// integral over R of (w2(|x|) - w1(|x|)) / |x|.
long double window_difference(long double r_in1, long double r_out1, long double r_in2, long double r_out2);
// integral over R of beta_lambda(|x|) w(|x|) / |x| with beta = 1 - window(., lambda/8, lambda).
long double counterterm_inverse_abs(long double lambda, long double r_in, long double r_out);

// Radial finite part in R^3 with one subtraction at the origin:
// 4 pi * integral over rho in (0, R) of rho^2 k(rho) (g(rho) - g(0) w(rho)),
// for a radial test profile g and kernel k.
long double radial_finite_part_3d(const Fn& kernel, const Fn& g, long double r_in, long double r_out, long double R,
                                  const std::vector<long double>& breaks = {});
// 4 pi * integral over (0, R) of rho^2 k(rho) g(rho) (no subtraction).
long double radial_integral_3d(const Fn& kernel, const Fn& g, long double R);

}  // namespace distrenorm::oracle
