#pragma once

#include <functional>
#include <vector>

#include "levyk/common.hpp"

namespace levyk::quad {

/// Scalar integrand. All routines below accept any callable double -> double.
using Fn = std::function<double(double)>;

/// Default tolerances for every adaptive rule in the project.
struct Tol {
    double abs = 1e-10;
    double rel = 1e-8;
};

/// Adaptive Gauss-Kronrod on a finite interval [a, b].
double integrate(const Fn& f, double a, double b, Tol tol = {});

/// Adaptive rule with endpoint-singularity extrapolation on [a, b]
/// (integrable algebraic/log singularities at either endpoint).
double integrate_singular(const Fn& f, double a, double b, Tol tol = {});

/// Adaptive rule on [a, +inf).
double integrate_upper(const Fn& f, double a, Tol tol = {});

/// Adaptive rule on (-inf, b].
double integrate_lower(const Fn& f, double b, Tol tol = {});

enum class Trig { cos, sin };

/// Oscillatory integral over a finite interval:
///   integral_a^b f(s) * cos(omega s) ds   (or sin).
/// Uses Chebyshev-moment (Filon-type) rules so the cost is independent of the
/// number of oscillation periods; falls back to the plain adaptive rule when
/// omega * (b - a) is small.
double oscillatory(const Fn& f, double a, double b, double omega, Trig trig, Tol tol = {});

/// Oscillatory integral over [a, +inf):
///   integral_a^inf f(s) * cos(omega s) ds   (or sin)
/// summed one half-period at a time with series acceleration, so slowly
/// decaying envelopes converge. `scale` sets the absolute tolerance
/// (abs = tol.rel * scale when scale > 0, else tol.abs).
double oscillatory_tail(const Fn& f, double a, double omega, Trig trig,
                        double scale = 0.0, Tol tol = {});

/// integral_0^{s_hi} s^{-1} log(1 + 1/s)^{a2} w(s) ds for a2 < -1 and smooth
/// w with a finite limit at 0. This is the marginal small-radius moment (the
/// k-th profile moment whose power exactly cancels the singularity): the
/// substitution v = log(1 + 1/s) makes the heavy tail exactly integrable,
///   = w(0) * v_hi^{a2+1} / (-a2 - 1) + exponentially convergent remainder.
double integrate_log_marginal(const Fn& w, double a2, double s_hi, Tol tol = {});

} // namespace levyk::quad
