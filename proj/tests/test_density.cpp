#include <doctest.h>

#include <cmath>
#include <vector>

#include "levyk/common.hpp"
#include "levyk/convolution.hpp"
#include "levyk/density.hpp"
#include "levyk/exponent.hpp"
#include "levyk/grid.hpp"
#include "levyk/profiles.hpp"

using namespace levyk;
using namespace levyk::density;
using exponent::ExponentTable;
using profiles::KappaClass;
using profiles::Model;
using profiles::ProfileSpec;

namespace {

/// Tempered 1-D model with a stable-like rho^{1/2} exponent and an
/// exponential tail: f(s) = s^{-1.5} on (0,1], c e^{-s} s^{-1.25} beyond.
Model tempered_model(std::vector<double> drift = {}) {
    ProfileSpec s;
    s.d = 1;
    s.kappa = KappaClass::poly_log(0.5, 0.0);
    s.m = 1.0;
    s.beta = 1.0;
    s.delta = 1.25;
    return Model(s, std::move(drift));
}

/// Same small-jump class, stretched-exponential tail with flat prefactor.
Model stretched_model() {
    ProfileSpec s;
    s.d = 1;
    s.kappa = KappaClass::poly_log(0.5, 0.0);
    s.m = 1.0;
    s.beta = 0.5;
    s.delta = 0.0;
    return Model(s);
}

grid::Grid1D centered(double dx, int half) {
    return grid::Grid1D{dx, 2 * half + 1, half};
}

grid::Grid1D radial(double dx, int n) { return grid::Grid1D{dx, n, 0}; }

} // namespace

// ---------------------------------------------------------------------------
// Closed-form inversions: quadratic exponent (Gaussian law)
// ---------------------------------------------------------------------------
// With re_phi(rho) = rho^2 the density is the heat kernel
// (4 pi t)^{-d/2} exp(-|x|^2 / 4t); reference values below are frozen from an
// independent high-precision evaluation of that formula.

TEST_CASE("quadratic exponent, d = 1: heat kernel values") {
    ExponentTable tab([](double r) { return r * r; }, 1);
    const double t = 0.3;
    auto g = centered(0.1, 14); // [-1.4, 1.4]
    DensityGrid dg = density_fourier(tab, t, g);

    CHECK(dg.values[14] == doctest::Approx(0.51503226936425277).epsilon(1e-8));
    CHECK(dg.values[14 + 7] == doctest::Approx(0.34237143820371449).epsilon(1e-8));
    // symmetric by construction: mirrored nodes are bitwise equal
    for (int k = 1; k <= 14; ++k)
        CHECK(dg.values[size_t(14 + k)] == dg.values[size_t(14 - k)]);
    CHECK(dg.clipped_count == 0);
    CHECK(dg.error_budget() == 0.0);
}

TEST_CASE("quadratic exponent, d = 1: small-t deep-tail point") {
    // t = 0.01 puts x = 0.5 five intrinsic lengths out (h = sqrt(t) = 0.1),
    // where the inversion already cancels by ~1e-2; the value must survive.
    ExponentTable tab([](double r) { return r * r; }, 1);
    auto g = centered(0.05, 10); // [-0.5, 0.5]
    DensityGrid dg = density_fourier(tab, 0.01, g);
    CHECK(dg.values[20] == doctest::Approx(0.0054457105758817743).epsilon(1e-7));
}

TEST_CASE("quadratic exponent, d = 2: heat kernel values") {
    ExponentTable tab([](double r) { return r * r; }, 2);
    auto g = radial(0.1, 10); // [0, 0.9]
    DensityGrid dg = density_fourier(tab, 0.25, g);
    CHECK(dg.values[0] == doctest::Approx(0.31830988618379067).epsilon(1e-6));
    CHECK(dg.values[9] == doctest::Approx(0.14160272042736561).epsilon(1e-6));
}

TEST_CASE("quadratic exponent, d = 3: heat kernel values") {
    ExponentTable tab([](double r) { return r * r; }, 3);
    auto g = radial(0.11, 11); // [0, 1.1]
    DensityGrid dg = density_fourier(tab, 0.2, g);
    CHECK(dg.values[0] == doctest::Approx(0.25098063309714308).epsilon(1e-8));
    CHECK(dg.values[10] == doctest::Approx(0.055305688929004955).epsilon(1e-8));
}

// ---------------------------------------------------------------------------
// Closed-form inversions: linear exponent (Cauchy law)
// ---------------------------------------------------------------------------
// With re_phi(rho) = rho the density is
// Gamma((d+1)/2) / pi^{(d+1)/2} * t / (t^2 + |x|^2)^{(d+1)/2}.

TEST_CASE("linear exponent, d = 1: Cauchy values and mass") {
    ExponentTable tab([](double r) { return r; }, 1);
    const double t = 0.4;
    auto g = centered(0.25, 8); // [-2, 2]
    DensityGrid dg = density_fourier(tab, t, g);
    CHECK(dg.values[8] == doctest::Approx(0.79577471545947668).epsilon(1e-8));
    CHECK(dg.values[16] == doctest::Approx(0.030606719825364488).epsilon(1e-8));
}

TEST_CASE("linear exponent, d = 2: Cauchy value through the angular average") {
    ExponentTable tab([](double r) { return r; }, 2);
    auto g = radial(0.15, 11); // [0, 1.5]
    DensityGrid dg = density_fourier(tab, 0.3, g);
    CHECK(dg.values[10] == doctest::Approx(0.013338825780906041).epsilon(1e-6));
}

TEST_CASE("linear exponent, d = 3: Cauchy values at and off the origin") {
    ExponentTable tab([](double r) { return r; }, 3);
    const double t = 0.25;
    auto g = radial(0.1, 9); // [0, 0.8]
    DensityGrid dg = density_fourier(tab, t, g);
    // p_t(0) = 1 / (pi^2 t^3), exact for this law
    CHECK(dg.values[0] == doctest::Approx(1.0 / (pi * pi * t * t * t)).epsilon(1e-8));
    CHECK(dg.values[8] == doctest::Approx(0.051327203881580918).epsilon(1e-8));
}

TEST_CASE("quadratic exponent: grid mass approximates 1") {
    ExponentTable tab([](double r) { return r * r; }, 1);
    auto g = centered(0.1, 40); // [-4, 4]: > 5 sigma for t = 0.3
    DensityGrid dg = density_fourier(tab, 0.3, g);
    CHECK(dg.mass() == doctest::Approx(1.0).epsilon(2e-4));
}

// ---------------------------------------------------------------------------
// Slowly decaying exponent: conditionally convergent inversion
// ---------------------------------------------------------------------------
// re_phi(rho) = log(1 + rho) at t = 0.2: exp(-t re_phi) = (1+rho)^{-0.2} is
// not integrable, so the gate refuses; with the override the oscillatory
// path evaluates the conditionally convergent integral. Frozen references
// from an independent high-precision evaluation; the near-origin growth
// exponent of this law is -(1 - t) = -0.8.

TEST_CASE("log exponent: gate refusal and override values") {
    ExponentTable tab([](double r) { return std::log1p(r); }, 1, 1e-6, 1e7, 3072);
    const double t = 0.2;
    auto g = centered(0.001, 10); // [-0.01, 0.01]

    CHECK_THROWS_AS(density_fourier(tab, t, g), precondition_error);

    FourierOptions opts;
    opts.override_integrability = true;
    DensityGrid dg = density_fourier(tab, t, g, opts);

    // x = 0 is not evaluable on this path: flagged, value 0
    CHECK((dg.flags[10] & point_quadrature) != 0);
    CHECK(dg.values[10] == 0.0);

    const double ref[] = {28.4560790552, 16.2251876859, 7.66187255121, 4.30121892146};
    const double xs[] = {0.001, 0.002, 0.005, 0.01};
    CHECK(dg.values[11] == doctest::Approx(ref[0]).epsilon(1e-6));
    CHECK(dg.values[12] == doctest::Approx(ref[1]).epsilon(1e-6));
    CHECK(dg.values[15] == doctest::Approx(ref[2]).epsilon(1e-6));
    CHECK(dg.values[20] == doctest::Approx(ref[3]).epsilon(1e-6));

    // near-origin power fit: slope -0.8203 frozen, inside -0.8 +/- 0.05
    std::vector<double> lx, lp;
    for (int i = 0; i < 4; ++i) {
        lx.push_back(std::log(xs[i]));
        lp.push_back(std::log(dg.values[size_t(10 + std::lround(xs[i] / 0.001))]));
    }
    const double slope = fit_line(lx, lp).slope;
    CHECK(slope == doctest::Approx(-0.8203470865).epsilon(2e-4));
    CHECK(std::fabs(slope - (-0.8)) < 0.05);
}

// ---------------------------------------------------------------------------
// Model-level Fourier densities
// ---------------------------------------------------------------------------

TEST_CASE("tempered model: fourier mass, symmetry, drift bookkeeping") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    grid::Grid1D g = default_grid(mdl, tab, t);
    DensityGrid dg = density_fourier(mdl, tab, t, g);

    CHECK(dg.mass() == doctest::Approx(1.0).epsilon(5e-4));
    CHECK(dg.drift_shift == 0.0);
    CHECK(dg.values[size_t(g.origin + 5)] == dg.values[size_t(g.origin - 5)]);
    // material clipping would mean the inversion is broken
    CHECK(dg.clipped_mass < 1e-8);

    Model drifted = tempered_model({0.3});
    DensityGrid dd = density_fourier(drifted, tab, t, g);
    CHECK(dd.drift_shift == doctest::Approx(0.03));
    // the centered-frame values are those of the driftless twin
    CHECK(dd.values[size_t(g.origin)] ==
          doctest::Approx(dg.values[size_t(g.origin)]).epsilon(1e-12));
}

TEST_CASE("fourier: grid validation") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    // d = 1 needs a symmetric grid with 0 on the center node
    CHECK_THROWS_AS(density_fourier(mdl, tab, 0.1, radial(0.01, 32)),
                    validation_error);
    CHECK_THROWS_AS(density_fourier(mdl, tab, 0.0, centered(0.01, 16)),
                    validation_error);
    // d >= 2 needs a radial grid
    ExponentTable tab2([](double r) { return r; }, 2);
    CHECK_THROWS_AS(density_fourier(tab2, 0.3, centered(0.1, 8)), validation_error);
}

// ---------------------------------------------------------------------------
// Small-jump density
// ---------------------------------------------------------------------------

TEST_CASE("small-jump density: scale, mass, and superpolynomial tail") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    const double h = tab.h(t);
    grid::Grid1D g = grid::Grid1D::symmetric(40.0 * h, h / 16.0);

    SmallJumpDensity sj = small_jump_density(mdl, t, h, g);
    CHECK(sj.r == h);
    // truncation removes jump activity, so the truncated exponent sits below
    // the full one and its law is more concentrated: h_trunc <= h, same order
    CHECK(sj.h <= h * 1.000001);
    CHECK(sj.h > h / 20.0);
    CHECK(sj.grid.mass() == doctest::Approx(1.0).epsilon(1e-3));

    // near-origin two-sided scaling: p(0) h^d within a fixed window
    const double p0h = sj.grid.values[size_t(g.origin)] * sj.h;
    CHECK(p0h > 1.0 / 20.0);
    CHECK(p0h < 20.0);

    // the tail beyond 5h decays faster than any power
    CHECK(sj.decay_points >= 6);
    CHECK(sj.decay_slope < -0.05);
    CHECK(sj.superpolynomial);
}

TEST_CASE("small-jump density: scaling window holds across a t-decade") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    for (double t : {0.05, 0.1, 0.5}) {
        const double h = tab.h(t);
        grid::Grid1D g = grid::Grid1D::symmetric(40.0 * h, h / 16.0);
        SmallJumpDensity sj = small_jump_density(mdl, t, h, g);
        const double p0h = sj.grid.values[size_t(g.origin)] * sj.h;
        CHECK(p0h > 1.0 / 20.0);
        CHECK(p0h < 20.0);
    }
}

TEST_CASE("small-jump density: both truncation radii give unit mass") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    const double h = tab.h(t);
    grid::Grid1D g = grid::Grid1D::symmetric(60.0 * h, h / 16.0);
    SmallJumpDensity a = small_jump_density(mdl, t, h, g);
    SmallJumpDensity b = small_jump_density(mdl, t, 3.0 * h, g);
    CHECK(a.grid.mass() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(b.grid.mass() == doctest::Approx(1.0).epsilon(1e-3));
    // more retained jump activity spreads the law: the peak must drop
    CHECK(b.grid.values[size_t(g.origin)] < a.grid.values[size_t(g.origin)]);
}

// ---------------------------------------------------------------------------
// Splitting construction
// ---------------------------------------------------------------------------

TEST_CASE("split: matches fourier near the center") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    const double h = tab.h(t);
    grid::Grid1D g = grid::Grid1D::symmetric(5.0 * h, h / 16.0);

    DensityGrid pf = density_fourier(mdl, tab, t, g);
    SplitParts parts;
    DensityGrid ps = density_split(mdl, tab, t, g, 0.0, &parts);

    CHECK(ps.r == doctest::Approx(h));
    CHECK(parts.large.atom == doctest::Approx(std::exp(-t * parts.large.lambda)));
    // quadrature mass of the truncated measure matches the analytic tail mass
    CHECK(parts.large.lambda == doctest::Approx(parts.lambda).epsilon(1e-6));
    // series closure: atom + grid weights + spill + leftover = 1
    double wsum = 0.0;
    for (double w : parts.large.weights) wsum += w;
    CHECK(parts.large.atom + wsum + parts.large.spill + parts.large.leftover ==
          doctest::Approx(1.0).epsilon(1e-12));

    for (int i = 0; i < g.n; ++i) {
        if (pf.flags[size_t(i)] != 0) continue;
        const double ref = pf.values[size_t(i)];
        if (ref <= 0.0) continue;
        CHECK(std::fabs(ps.values[size_t(i)] - ref) / ref < 1e-2);
    }
}

TEST_CASE("split: full-mass capture and stability in the splitting radius") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    const double h = tab.h(t);
    grid::Grid1D g = default_grid(mdl, tab, t);

    DensityGrid p1 = density_split(mdl, tab, t, g);
    CHECK(p1.mass() == doctest::Approx(1.0).epsilon(5e-4));
    CHECK(p1.error_budget() < 1e-4);
    CHECK(p1.clipped_mass < 1e-8);

    // doubling the splitting radius must not move the density materially
    DensityGrid p2 = density_split(mdl, tab, t, g, 2.0 * h);
    for (int k = -80; k <= 80; ++k) {
        const std::size_t i = size_t(g.origin + k);
        CHECK(std::fabs(p2.values[i] - p1.values[i]) / p1.values[i] < 1e-2);
    }
}

TEST_CASE("split: far tail tracks t times the jump density") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.05;
    grid::Grid1D g = default_grid(mdl, tab, t);
    DensityGrid ps = density_split(mdl, tab, t, g);
    for (double x : {8.0, 10.0, 12.0}) {
        const double ratio =
            ps.value_at(x) / (t * mdl.profile().eval(x));
        CHECK(ratio > 1.0 / 3.0);
        CHECK(ratio < 3.0);
    }
}

TEST_CASE("split: input validation") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    const double h = tab.h(t);
    // too-coarse grid cannot carry the small-jump density
    CHECK_THROWS_AS(density_split(mdl, tab, t, grid::Grid1D::symmetric(1.0, h)),
                    validation_error);

    ProfileSpec s2;
    s2.d = 2;
    s2.kappa = KappaClass::poly_log(0.5, 0.0);
    s2.m = 1.0;
    s2.beta = 1.0;
    s2.delta = 1.25;
    Model mdl2{s2};
    ExponentTable tab2(mdl2);
    CHECK_THROWS_AS(
        density_split(mdl2, tab2, t, grid::Grid1D::symmetric(1.0, 1e-3)),
        validation_error);
}

// ---------------------------------------------------------------------------
// Semigroup self-consistency
// ---------------------------------------------------------------------------

TEST_CASE("semigroup: p_t * p_t reproduces p_2t") {
    const double t = 0.1;
    for (const Model& mdl : {tempered_model(), stretched_model()}) {
        ExponentTable tab(mdl);
        // extent sized for the wider p_2t, resolution sized for p_t
        grid::Grid1D g2 = default_grid(mdl, tab, 2.0 * t);
        grid::Grid1D g = grid::Grid1D::symmetric(g2.x_max(), tab.h(t) / 16.0);
        SemigroupReport rep = semigroup_check(mdl, tab, t, g);
        CHECK_FALSE(rep.inconclusive);
        CHECK(rep.points > 100);
        CHECK(rep.max_rel_dev < 1e-3);
    }
}

TEST_CASE("semigroup: leakage off a short grid is flagged inconclusive") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    grid::Grid1D g = grid::Grid1D::symmetric(3.0, tab.h(t) / 16.0);
    SemigroupReport rep = semigroup_check(mdl, tab, t, g);
    CHECK(rep.leakage > 1e-4);
    CHECK(rep.inconclusive);
}

// ---------------------------------------------------------------------------
// Sizing helpers and interpolation
// ---------------------------------------------------------------------------

TEST_CASE("coverage and representability radii bracket their targets") {
    Model mdl = tempered_model();
    const double t = 0.1;

    const double xc = coverage_x_max(mdl, t);
    CHECK(t * profiles::tail_mass(mdl, xc) <= 1e-7);
    CHECK(t * profiles::tail_mass(mdl, xc / 1.1) > 1e-7);

    const double xr = representable_x_max(mdl, t);
    CHECK(xr > xc); // representability reaches far beyond the mass radius
    const double lt = std::log(t);
    CHECK(lt + mdl.profile().log_eval(xr) >= std::log(1e-280) - 1e-6);
    CHECK(lt + mdl.profile().log_eval(1.05 * xr) < std::log(1e-280));
}

TEST_CASE("default grid: resolution h/16 and budget guard") {
    Model mdl = tempered_model();
    ExponentTable tab(mdl);
    const double t = 0.1;
    grid::Grid1D g = default_grid(mdl, tab, t);
    // symmetric() shrinks dx to land the end node exactly on the extent
    CHECK(g.dx <= tab.h(t) / 16.0 * (1.0 + 1e-12));
    CHECK(g.dx > tab.h(t) / 16.0 * 0.9);
    CHECK(g.x(g.origin) == 0.0);
    CHECK(g.x_max() >= coverage_x_max(mdl, t) * 0.99);
    // the intrinsic scale collapses ~ t^2 here, so a tiny t blows the budget
    CHECK_THROWS_AS(default_grid(mdl, tab, 1e-4), convolution::box_too_small);
}

TEST_CASE("value_at: nodes, midpoints, off-grid") {
    DensityGrid dg;
    dg.d = 1;
    dg.g = centered(0.5, 2); // nodes -1, -0.5, 0, 0.5, 1
    dg.values = {1.0, 2.0, 4.0, 2.0, 1.0};
    dg.flags.assign(5, 0);
    CHECK(dg.value_at(0.0) == 4.0);
    CHECK(dg.value_at(-0.5) == 2.0);
    CHECK(dg.value_at(0.25) == doctest::Approx(3.0));
    CHECK(dg.value_at(7.0) == 0.0);
    CHECK(dg.value_at(-7.0) == 0.0);
}
