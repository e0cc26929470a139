#pragma once

#include <cstdint>
#include <vector>

#include "levyk/convolution.hpp"
#include "levyk/exponent.hpp"
#include "levyk/grid.hpp"
#include "levyk/profiles.hpp"
#include "levyk/report.hpp"

namespace levyk::density {

enum class Method { fourier, split };

const char* to_string(Method m);

/// Per-point trouble flags (bitmask in DensityGrid::flags).
enum PointFlag : std::uint8_t {
    point_ok = 0,
    point_quadrature = 1, ///< inversion integral did not settle cleanly
    point_budget = 2,     ///< value below the far-field error budget
    point_clipped = 4     ///< negative value clipped to zero
};

/// Transition density sampled on a uniform grid.
///
/// d = 1: symmetric grid over [-X_max, X_max]; values are the density on R.
/// d = 2, 3: radial grid over [0, X_max]; values are the radial section
/// p_t(|x|) and mass() weighs them with the sphere factor.
///
/// Values are reported in the frame centered at the drift:
/// values[i] = p_t(x_i + t b), so a drifted model reads identically to its
/// driftless twin and bound checks can probe p_t(x + tb) directly.
struct DensityGrid {
    double t = 0.0;
    int d = 1;
    grid::Grid1D g;
    std::vector<double> values;
    std::vector<std::uint8_t> flags; ///< PointFlag bitmask, same length
    Method method = Method::fourier;
    double drift_shift = 0.0; ///< t * b (0 for driftless models)
    double r = 0.0;           ///< splitting radius (split method; else 0)

    // Negative-value policy: raw values below zero are clipped to zero and
    // logged here; construction aborts when the clipped mass is material.
    int clipped_count = 0;
    double worst_negative = 0.0; ///< most negative raw value seen (<= 0)
    double clipped_mass = 0.0;   ///< total mass removed by clipping

    // Split-method error budget (masses; all zero for the Fourier method).
    double series_leftover = 0.0; ///< compound-series truncation tail
    double series_spill = 0.0;    ///< measure mass windowed off the work grid
    double conv_spill = 0.0;      ///< final convolution mass off the work grid

    double error_budget() const {
        return series_leftover + series_spill + conv_spill;
    }

    /// dx * sum(values) for d = 1; the radial mass
    /// omega_{d-1} * dx * sum(values * x^{d-1}) for d = 2, 3.
    double mass() const;

    /// Linear interpolation at grid coordinate x (centered frame).
    /// Off-grid coordinates return 0.
    double value_at(double x) const;
};

struct FourierOptions {
    /// Proceed when the exp(-t re_phi) integrability gate fails. The
    /// inversion then exists only as a conditionally convergent oscillatory
    /// integral for x != 0; x = 0 is flagged.
    bool override_integrability = false;
    /// t * b recorded on the output (the inversion itself is symmetric).
    double drift_shift = 0.0;
};

/// Direct Fourier inversion of exp(-t re_phi) on the table's exponent.
///
///   d = 1: p_t(x) = (1/pi) int_0^inf cos(rho x) e^{-t re_phi(rho)} d rho
///   d = 2: radial inversion with Bessel J0 weight, evaluated as the
///          colatitude average of 1-D cosine transforms
///   d = 3: p_t(x) = (2 pi^2 |x|)^{-1} int_0^inf rho sin(rho |x|)
///          e^{-t re_phi(rho)} d rho
///
/// Accuracy degrades for |x| much larger than h(t), where the integrand
/// cancels to below quadrature resolution; use the split method there.
/// Requires the integrability gate to pass (or an explicit override); the
/// table must cover the integrand's support unless it has a log-type tail.
DensityGrid density_fourier(const exponent::ExponentTable& table, double t,
                            const grid::Grid1D& x_grid, FourierOptions opts = {});

/// Model-aware wrapper: folds the model's drift into the reported frame.
DensityGrid density_fourier(const profiles::Model& model,
                            const exponent::ExponentTable& table, double t,
                            const grid::Grid1D& x_grid,
                            bool override_integrability = false);

/// Small-jump density with tail-decay diagnostics.
struct SmallJumpDensity {
    DensityGrid grid;  ///< p_t for the measure truncated to jumps <= r
    double r = 0.0;    ///< truncation radius
    double h = 0.0;    ///< intrinsic scale of the truncated exponent at t
    /// Fitted slope of log p vs (x/h) log(x/h) over |x| in [5h, 20h]; a
    /// clearly negative slope certifies faster-than-any-power decay.
    double decay_slope = 0.0;
    int decay_points = 0;       ///< samples entering the fit
    bool superpolynomial = false; ///< decay_slope <= -0.05 with >= 4 samples
};

/// Density of the small-jump part: Fourier inversion of the exponent of the
/// measure truncated to |y| <= r.
///
/// The sharp truncation makes the exponent oscillate with period 2 pi / r in
/// rho all the way out to the integrand's decay cutoff, far beyond what any
/// log-spaced table can resolve. In d = 1 this is handled exactly: a dense
/// truncated table carries the low frequencies, and past the table's
/// resolution limit the evaluator switches to
///   full exponent - discarded mass + oscillatory boundary correction,
/// where the correction is the integration-by-parts series of
/// int_r^inf cos(rho s) f(s) ds (boundary terms at r and at the profile's
/// interior kinks). `full_table` lets the caller share an existing full-model
/// exponent table; pass nullptr to have one sized and built internally.
/// For d >= 2 the plain truncated table is used; its resolution limit caps
/// the reliable frequency range (adequate at the default r = h(t)).
SmallJumpDensity small_jump_density(const profiles::Model& model, double t,
                                    double r, const grid::Grid1D& x_grid,
                                    const exponent::ExponentTable* full_table = nullptr);

/// Intermediate products of the splitting construction.
struct SplitParts {
    double r = 0.0;                      ///< splitting radius
    grid::Grid1D work;                   ///< internal work grid
    SmallJumpDensity small;              ///< p ring, on its own sub-grid
    convolution::CompoundPoisson large;  ///< large-jump law on the work grid
    double lambda = 0.0;                 ///< truncated-measure mass
};

/// Splitting construction of the full density (d = 1):
///   p_t = (small-jump density) convolved with (large-jump compound law),
/// with the atom handled exactly and the drift folded in as a shift. The
/// result is cancellation-free, so deep-tail values stay positive. The
/// caller's grid fixes dx and the output window; the internal work grid is
/// extended so the large-jump measure is covered and convolution spill is
/// accounted. r = 0 selects the default splitting radius h(t).
DensityGrid density_split(const profiles::Model& model,
                          const exponent::ExponentTable& table, double t,
                          const grid::Grid1D& x_grid, double r = 0.0,
                          SplitParts* parts_out = nullptr);

/// Chapman-Kolmogorov self-consistency: compare p_{2t} with the grid
/// self-convolution of p_t on the inner half of the grid.
struct SemigroupReport {
    double t = 0.0;
    double max_rel_dev = 0.0; ///< max |p_2t - p_t * p_t| / p_2t, inner half
    double leakage = 0.0;     ///< self-convolution mass lost off the grid
    bool inconclusive = false; ///< leakage > 1e-4: deviation not meaningful
    int points = 0;           ///< grid points compared
};

SemigroupReport semigroup_check(const profiles::Model& model,
                                const exponent::ExponentTable& table, double t,
                                const grid::Grid1D& x_grid,
                                Method method = Method::split);

// ---------------------------------------------------------------------------
// Grid sizing helpers
// ---------------------------------------------------------------------------

/// Largest |x| where t * f(|x|) stays representable above `floor`.
double representable_x_max(const profiles::Model& model, double t,
                           double floor = 1e-280);

/// Smallest X with t * tail_mass(X) <= mass_tol: beyond it the density
/// carries negligible probability, so a grid to X captures the full mass.
double coverage_x_max(const profiles::Model& model, double t,
                      double mass_tol = 1e-7);

/// Default density grid: symmetric, dx = h(t)/16, extent from coverage_x_max
/// unless x_max > 0 overrides it. Throws box_too_small when the extent and
/// resolution together exceed the cell budget.
grid::Grid1D default_grid(const profiles::Model& model,
                          const exponent::ExponentTable& table, double t,
                          double x_max = 0.0);

} // namespace levyk::density
