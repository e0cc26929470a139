#pragma once

#include <optional>
#include <string>
#include <vector>

#include "levyk/exponent.hpp"
#include "levyk/grid.hpp"
#include "levyk/profiles.hpp"
#include "levyk/report.hpp"

namespace levyk::convolution {

// ---------------------------------------------------------------------------
// Closed-form classifier of the tail self-convolution property
// ---------------------------------------------------------------------------

/// Why the tail self-convolution bound holds for the profile family
///   f(s) = c e^{-m s^beta} s^{-delta}  (s > 1).
enum class TailCase {
    untempered_power, ///< m = 0 and delta > d: plain power tail
    subexponential,   ///< m > 0 and beta in (0,1): stretched-exponential tail
    exponential_steep ///< m > 0, beta = 1 and delta > (d+1)/2
};

/// Why it fails.
enum class TailFailure {
    divergent_tail,    ///< m = 0 and delta <= d: not even a finite tail mass
    critical_exponent, ///< beta = 1 with delta <= (d+1)/2: exactly-exponential
                       ///< tail whose prefactor is too flat
    superexponential   ///< beta > 1: tails lighter than exponential
};

/// Verdict of the closed-form parameter test for
///   (f 1_{(1,inf)} * f 1_{(1,inf)})(x) <= L f(x)  for large x,
/// the property that makes iterated convolutions of the truncated jump
/// measure decay at the same rate as a single jump.
struct SelfConvolutionClass {
    bool holds = false;
    TailCase holds_case = TailCase::untempered_power; // valid when holds
    TailFailure failure = TailFailure::divergent_tail; // valid when !holds
    report::Verdict verdict() const {
        return holds ? report::Verdict::pass : report::Verdict::fail;
    }
    std::string describe() const;
};

/// Decide the self-convolution property from (d, m, beta, delta) alone:
/// holds iff (m = 0, delta > d) or (m > 0, beta < 1) or
/// (m > 0, beta = 1, delta > (d+1)/2). Parameters outside the profile family
/// (d not in {1,2,3}, m < 0, beta outside (0,2], delta < 0) are errors, not
/// verdicts.
SelfConvolutionClass classify_self_convolution(int d, double m, double beta,
                                               double delta);

// ---------------------------------------------------------------------------
// Grid measures (one-dimensional)
// ---------------------------------------------------------------------------

/// Thrown when a grid window cannot hold the mass it is asked to represent.
class box_too_small : public numeric_error {
public:
    box_too_small(const std::string& what, double required)
        : numeric_error(what), required_half_width(required) {}
    /// Suggested |x| extent that would satisfy the failed mass tolerance.
    double required_half_width = 0.0;
};

/// The jump measure restricted to |y| > r, discretized on a uniform grid.
/// Each cell carries the exact radial integral of the jump density over the
/// part of the cell lying outside B(0, r) (not a midpoint-density estimate),
/// so total mass is preserved to quadrature accuracy — mass errors would
/// otherwise compound geometrically under convolution powers.
class TruncatedMeasure {
public:
    /// Discretizes the model's jump measure outside radius r. The grid must
    /// cover the tail: if mass beyond the box exceeds coverage_tol relative
    /// to the full truncated mass, construction throws box_too_small.
    TruncatedMeasure(const profiles::Model& model, double r,
                     const grid::Grid1D& g, double coverage_tol = 1e-6);

    /// Measure with hand-set cell masses (sanity constructions in tests).
    static TruncatedMeasure from_weights(const grid::Grid1D& g,
                                         std::vector<double> weights);

    const grid::Grid1D& grid() const { return grid_; }
    const std::vector<double>& weights() const { return weights_; }
    double total_mass() const { return total_; }
    double r() const { return r_; }
    const std::optional<profiles::Model>& model() const { return model_; }

private:
    TruncatedMeasure() = default;

    grid::Grid1D grid_;
    std::vector<double> weights_;
    double total_ = 0.0;
    double r_ = 0.0;
    std::optional<profiles::Model> model_;
};

/// n-fold convolution power of a truncated measure, windowed back onto the
/// base grid.
struct ConvPower {
    int n = 1;
    std::vector<double> values; ///< cell masses on base.grid()
    double spill = 0.0;         ///< exact mass that fell outside the window
    double expected_mass = 0.0; ///< |nu|^n
};

/// Computes the n-fold convolution power by iterated exact linear
/// convolution on the expanded support, then windows onto the base grid.
/// Throws box_too_small when the windowed-off mass exceeds 1e-4 of |nu|^n.
ConvPower conv_power(const TruncatedMeasure& nu, int n);

/// exp(t (nu - |nu| delta_0)): the large-jump part of the transition law.
/// The atom at the origin is kept exact and separate from the grid part.
struct CompoundPoisson {
    double t = 0.0;
    double lambda = 0.0;         ///< |nu|, total mass of the truncated measure
    double atom = 0.0;           ///< e^{-t lambda}
    std::vector<double> weights; ///< absolutely continuous part, cell masses
    double spill = 0.0;          ///< series mass windowed off the grid
    double leftover = 0.0;       ///< truncated series tail (n > n_used)
    int n_used = 0;
};

/// Sums e^{-t|nu|} sum_n t^n nu^{n*} / n! with enough terms that the
/// truncated tail is below leftover_tol; a requested n_max is extended
/// automatically up to an internal cap before failing.
CompoundPoisson compound_poisson(const TruncatedMeasure& nu, double t,
                                 int n_max = 0, double leftover_tol = 1e-8);

// ---------------------------------------------------------------------------
// Condition integrals and checkers
// ---------------------------------------------------------------------------

/// I(x, r) = integral over { |y| > r, |x - y| > r0 } of f(|x-y|) f(|y|) dy
/// for the model's radial jump density, reduced to one radial integral in
/// d = 1 and to radius-angle integrals in d = 2, 3. With r = r0 this is the
/// self-convolution of the jump density truncated to |y| > r0.
double pair_convolution(const profiles::Model& model, double x, double r,
                        double r0);

/// integral over |y| > r of f(max(s, |y|) - |y|/2) f(|y|) dy — the shifted-
/// argument comparison integral behind the weaker domination condition.
double max_shift_integral(const profiles::Model& model, double s, double r);

/// Domination of the pair convolution by the exponent scale:
///   I(x, r) <= L Psi(1/r) f(|x|) for |x| >= 2 r0, r in (0, r0],
/// plus the technical small-radius bound f(r) r^d <= L' Psi(1/r).
/// Probes default to |x| log-spaced on [2 r0, 40 r0] (capped where f
/// underflows) and r log-spaced on [r0/100, r0]. The verdict looks at the
/// fitted growth of the ratio in |x|: bounded curves pass, robust power-like
/// growth fails; exactly-exponential tails within 0.1 of the critical decay
/// delta = (d+1)/2 are INCONCLUSIVE by policy (the divergence is
/// logarithmic and invisible on finite probe ranges).
report::ConditionReport check_jump_convolution(
    const profiles::Model& model, const exponent::ExponentTable& table,
    double r0 = 1.0, std::vector<double> xs = {}, std::vector<double> rs = {});

/// Shifted-argument domination: max_shift_integral(s, r) <= M f(s) Psi(1/r)
/// for s >= 8 r0, r in (0, r0]. Same probe and verdict mechanics as
/// check_jump_convolution.
report::ConditionReport check_max_shift_bound(
    const profiles::Model& model, const exponent::ExponentTable& table,
    double r0 = 1.0, std::vector<double> ss = {}, std::vector<double> rs = {});

/// Self-convolution domination of the truncated jump density:
///   (g 1_{B(0,r0)^c} * g 1_{B(0,r0)^c})(x) <= L g(x), |x| >= 2 r0.
/// Shares the growth-based verdict rule and the near-critical
/// INCONCLUSIVE policy with check_jump_convolution.
report::ConditionReport check_tail_self_convolution(const profiles::Model& model,
                                                    double r0 = 1.0,
                                                    std::vector<double> xs = {});

/// Geometric domination of iterated convolutions: for n = 1..n_max evaluates
///   T_n(x) = integral over |x - y| > r0 of f(|x-y|) nu^{n*}(dy)
/// on the grid measure and reports rate_n = (sup_x T_n(x)/f(|x|))^{1/n}.
/// A stable rate across n passes; rates spreading by orders of magnitude
/// (no uniform geometric bound) fail.
report::ConditionReport verify_convolution_powers(const TruncatedMeasure& nu,
                                                  int n_max = 3, double r0 = 1.0,
                                                  std::vector<double> xs = {});

} // namespace levyk::convolution
