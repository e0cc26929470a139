#include "levyk/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>
#include <utility>

#include "levyk/quadrature.hpp"

namespace levyk::density {

using exponent::ExponentTable;
using profiles::Model;

namespace {

// ---------------------------------------------------------------------------
// Radial exponent evaluator
// ---------------------------------------------------------------------------

/// Evaluates the radial exponent driving an inversion. Two modes:
///
///  - plain: a single table (`full` set, `trunc` null) — the exponent of the
///    full measure, smooth in log rho, safe to spline everywhere.
///  - hybrid (d = 1 truncated measures): the sharply truncated exponent
///    carries a boundary oscillation ~ 2 f(r) sin(rho r) / rho with period
///    2 pi / r, which a log-spaced spline aliases once the knot spacing
///    outgrows the period. Below `rho_switch` (the table's resolution limit)
///    the dense truncated table is exact enough; above it the identity
///       phi_trunc(rho) = phi_full(rho) - lambda + 2 int_r^inf cos(rho s) f(s) ds
///    is used with the cosine integral expanded by parts into boundary terms
///    at r and at the profile's interior kinks (error O(rho^-3) relative to
///    nothing, far below the weight's size once the table runs out).
struct PhiEval {
    const ExponentTable* full = nullptr;   // full-measure table (hybrid + plain)
    const ExponentTable* trunc = nullptr;  // truncated table (hybrid only)
    double rho_switch = std::numeric_limits<double>::infinity();
    double lambda = 0.0; // mass removed by the truncation
    /// One integrated-by-parts boundary at abscissa s:
    ///   c1 sin(rho s)/rho + c2 cos(rho s)/rho^2 + c3 sin(rho s)/rho^3.
    struct Edge {
        double s = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
    };
    std::vector<Edge> edges;

    const ExponentTable& base() const { return trunc ? *trunc : *full; }
    int d() const { return base().d(); }

    double at(double rho) const {
        if (rho < rho_switch) return base().re_phi_at(rho);
        double corr = 0.0;
        for (const auto& e : edges) {
            const double sn = std::sin(rho * e.s);
            const double cs = std::cos(rho * e.s);
            corr += (e.c1 * sn + (e.c2 * cs + e.c3 * sn / rho) / rho) / rho;
        }
        // d = 1 surface factor: the radial cosine integral counts both signs.
        const double v = full->re_phi_at(rho) - lambda + 2.0 * corr;
        return v > 0.0 ? v : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Inversion core: I(u) = int_0^inf rho^pw e^{-t phi(rho)} trig(rho u) drho
// ---------------------------------------------------------------------------

/// rho^pw * exp(-t * phi(rho)); pw in {0, 1, 2} covers d = 1, 2, 3.
struct Weight {
    const PhiEval* phi = nullptr;
    double t = 0.0;
    int pw = 0;

    // Endpoint-inclusive quadrature rules evaluate at rho = 0 exactly, where
    // the exponent vanishes: the weight's continuous limit is 1 (pw = 0) or 0.
    double operator()(double rho) const {
        if (rho <= 0.0) return pw == 0 ? 1.0 : 0.0;
        const double v = std::exp(-t * phi->at(rho));
        switch (pw) {
            case 0: return v;
            case 1: return rho * v;
            default: return rho * rho * v;
        }
    }
    double log_at(double rho) const {
        if (rho <= 0.0)
            return pw == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
        return pw * std::log(rho) - t * phi->at(rho);
    }
};

/// Smallest rho where the weight has dropped 45 e-folds below its peak (a
/// factor ~3e-20, far below every tolerance anchored at >= 1e-12 relative),
/// so the integrand is numerically dead beyond it. Keeping the cutoff this
/// tight matters: sharply truncated weights carry a boundary ring that the
/// oscillatory rule must resolve with finite subintervals, and a cutoff
/// orders of magnitude past the live region starves the live region of
/// subdivisions. Returns 0 when no such point exists below 1e18 (slowly
/// decaying weights: the conditional path applies).
double decay_cutoff(const Weight& w) {
    constexpr double drop = 45.0;
    double peak = -std::numeric_limits<double>::infinity();
    double prev = 1e-8;
    double lw_prev = w.log_at(prev);
    peak = std::max(peak, lw_prev);
    const int steps = 260; // 26 decades, 10 points per decade
    for (int i = 1; i <= steps; ++i) {
        const double rho = 1e-8 * std::pow(10.0, i / 10.0);
        const double lw = w.log_at(rho);
        if (lw > peak) peak = lw;
        if (lw < peak - drop) {
            // bisect between prev and rho for a crisp cutoff
            double a = prev, b = rho;
            for (int k = 0; k < 60; ++k) {
                const double mid = std::sqrt(a * b);
                if (w.log_at(mid) < peak - drop)
                    b = mid;
                else
                    a = mid;
            }
            return b;
        }
        prev = rho;
        lw_prev = lw;
    }
    return 0.0;
}

/// int_0^cutoff w, split at the weight's own scale so the adaptive rule does
/// not have to discover the peak inside a huge interval. Tolerances stay
/// above the error-estimate floor of adaptive rules on spline-interpolated
/// integrands (the estimate stalls at the knots' smoothness defects long
/// before the value itself degrades).
/// Run an adaptive integral at oracle-grade tolerance first; if the rule
/// reports a roundoff stall, rerun with the error target relaxed by three
/// decades and accept that result. Sharply truncated weights ring at the cut
/// radius frequency, and adaptive error estimates stall near 1e-6 absolute on
/// such integrands even though the returned values match high-resolution
/// references to ~1e-7 relative; smooth weights settle on the strict pass, so
/// closed-form accuracy is unaffected.
double integrate_relaxed(const quad::Fn& f, double a, double b, quad::Tol tol) {
    try {
        return quad::integrate(f, a, b, tol);
    } catch (const numeric_error&) {
        return quad::integrate(f, a, b, {1e3 * tol.abs, 1e3 * tol.rel});
    }
}

double weight_total(const Weight& w, double cutoff, double scale_rho) {
    const double split = std::min(cutoff, 8.0 * scale_rho);
    double total = integrate_relaxed([&w](double r) { return w(r); }, 0.0, split,
                                     {1e-300, 1e-9});
    if (split < cutoff) {
        // log substitution keeps the remaining decades well-conditioned; the
        // head's magnitude anchors the absolute target.
        total += integrate_relaxed(
            [&w](double v) {
                const double rho = std::exp(v);
                return w(rho) * rho;
            },
            std::log(split), std::log(cutoff),
            {1e-9 * std::fabs(total) + 1e-300, 1e-9});
    }
    return total;
}

struct PointResult {
    double value = 0.0;
    bool trouble = false;
};

/// One inversion integral. `cutoff` = 0 selects the conditionally convergent
/// path (slowly decaying weight, Fourier-cycle acceleration). `scale` is an
/// absolute magnitude reference for tolerance anchoring.
PointResult invert_point(const Weight& w, double u, quad::Trig trig,
                         double cutoff, double scale) {
    PointResult out;
    try {
        const auto fn = [&w](double rho) { return w(rho); };
        if (u == 0.0) {
            if (trig == quad::Trig::sin) return out; // sin(0) = 0 identically
            if (cutoff > 0.0) {
                out.value = scale; // scale was computed as int_0^cutoff w
                return out;
            }
            // No decay cutoff: the absolute integral may diverge.
            try {
                out.value = quad::integrate_upper(fn, 0.0, {1e-12 * scale, 1e-9});
            } catch (const numeric_error&) {
                out.value = quad::integrate_upper(fn, 0.0, {1e-9 * scale, 1e-6});
            }
            return out;
        }
        // Absolute tolerance anchors the far field: the oscillatory integral
        // of an O(scale)-sized weight cancels down to small values. Strict
        // first (smooth weights settle there with tiny true error); on a
        // reported roundoff stall retry relaxed: sharply truncated weights
        // ring at the cut radius frequency, where the rule's error estimate
        // stalls near 1e-6 absolute while its value matches high-resolution
        // references to ~1e-7 relative. Discarding those values would punch
        // holes in the density instead of returning a usable number.
        const quad::Tol strict{1e-10 * scale, 1e-8};
        const quad::Tol relaxed{3e-8 * scale, 1e-6};
        if (cutoff > 0.0) {
            try {
                out.value = quad::oscillatory(fn, 0.0, cutoff, u, trig, strict);
            } catch (const numeric_error&) {
                out.value = quad::oscillatory(fn, 0.0, cutoff, u, trig, relaxed);
            }
            return out;
        }
        // Slow decay: a few explicit cycles, then accelerated tail cycles.
        const double a = 8.0 * pi / u;
        double head;
        try {
            head = quad::oscillatory(fn, 0.0, a, u, trig, strict);
        } catch (const numeric_error&) {
            head = quad::oscillatory(fn, 0.0, a, u, trig, relaxed);
        }
        double tail = quad::oscillatory_tail(fn, a, u, trig, scale, {0.0, 1e-11});
        out.value = head + tail;
        return out;
    } catch (const numeric_error&) {
        out.trouble = true;
        out.value = 0.0;
        return out;
    }
    // not reached
}

/// Shared per-table inversion context.
///
/// Radial inversion formulas (u = |x|):
///   d = 1: p = (1/pi)      int e^{-t re_phi} cos(rho u) drho        (pw 0)
///   d = 2: p = (1/pi^2) int_0^{pi/2} CT(u sin phi) dphi,
///          CT(v) = int rho e^{-t re_phi} cos(rho v) drho            (pw 1)
///   d = 3: p = (2 pi^2 u)^{-1} int rho e^{-t re_phi} sin(rho u) drho (pw 1)
/// and at u = 0 the closed moments
///   (1/pi) int w0, (1/2pi) int w1, (1/2pi^2) int w2 with wk = rho^k e^{-t re_phi}.
struct Inverter {
    const PhiEval* phi = nullptr;
    double t = 0.0;
    int d = 1;
    Weight w;          // oscillatory weight of this dimension (pw 0 or 1)
    double cutoff = 0; // 0: conditional path
    double scale = 0;  // int_0^cutoff w (or a finite-window surrogate)
    Weight w0;         // d = 3 only: rho^2 weight for the u = 0 moment
    double cutoff0 = 0;
    double scale0 = 0;
    double scale_rho = 1.0;

    Inverter(const PhiEval& pe, double time) : phi(&pe), t(time), d(pe.d()) {
        // The density plateau width: where t * Psi reaches 1.
        scale_rho = std::max(1e-300, 1.0 / pe.base().h(t));
        w = Weight{phi, t, d == 1 ? 0 : 1};
        std::tie(cutoff, scale) = classify(w);
        if (d == 3) {
            w0 = Weight{phi, t, 2};
            std::tie(cutoff0, scale0) = classify(w0);
        }
    }

    std::pair<double, double> classify(const Weight& wt) const {
        // Log-type exponents accumulate their e-folds over so many decades
        // that a nominal cutoff would hand the oscillatory rule an interval
        // with astronomically many cycles; the conditional path's cycle
        // acceleration is built for exactly that shape.
        const double cut =
            phi->base().log_type_tail() ? 0.0 : decay_cutoff(wt);
        if (cut > 0.0) return {cut, weight_total(wt, cut, scale_rho)};
        // finite-window surrogate magnitude for tolerance anchoring
        const double s = quad::integrate([&wt](double r) { return wt(r); }, 0.0,
                                         8.0 * scale_rho, {1e-300, 1e-8});
        return {0.0, s};
    }

    /// p_t at radius x >= 0 (d-dimensional radial inversion).
    PointResult density_at(double x) const {
        switch (d) {
            case 1: {
                auto r = invert_point(w, x, quad::Trig::cos, cutoff, scale);
                r.value /= pi;
                return r;
            }
            case 3: {
                if (x == 0.0) {
                    auto r = invert_point(w0, 0.0, quad::Trig::cos, cutoff0, scale0);
                    r.value /= (2.0 * pi * pi);
                    return r;
                }
                auto r = invert_point(w, x, quad::Trig::sin, cutoff, scale);
                r.value /= (2.0 * pi * pi * x);
                return r;
            }
            default: { // d = 2: colatitude average of cosine transforms
                if (x == 0.0) {
                    auto r = invert_point(w, 0.0, quad::Trig::cos, cutoff, scale);
                    r.value /= (2.0 * pi);
                    return r;
                }
                PointResult out;
                bool trouble = false;
                const auto section = [&](double phi) {
                    auto r = invert_point(w, x * std::sin(phi), quad::Trig::cos,
                                          cutoff, scale);
                    if (r.trouble) trouble = true;
                    return r.value;
                };
                try {
                    out.value = quad::integrate(section, 0.0, 0.5 * pi,
                                                {1e-11 * scale, 1e-7}) /
                                (pi * pi);
                } catch (const numeric_error&) {
                    trouble = true;
                    out.value = 0.0;
                }
                out.trouble = trouble;
                return out;
            }
        }
    }
};

/// Window an origin-aligned full convolution onto a target grid; returns the
/// length-n values plus the sum that fell outside.
std::pair<std::vector<double>, double> window_full(const grid::Grid1D& g,
                                                   const std::vector<double>& full,
                                                   long full_origin) {
    std::vector<double> vals(static_cast<std::size_t>(g.n), 0.0);
    double outside = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        const long i = static_cast<long>(k) - full_origin + g.origin;
        if (i >= 0 && i < g.n)
            vals[static_cast<std::size_t>(i)] += full[k];
        else
            outside += full[k];
    }
    return {std::move(vals), outside};
}

/// Apply the negative-value policy in place: clip, log, abort when material.
void clip_negatives(DensityGrid& dg) {
    double neg_mass = 0.0;
    for (std::size_t i = 0; i < dg.values.size(); ++i) {
        double& v = dg.values[i];
        if (v < 0.0) {
            dg.worst_negative = std::min(dg.worst_negative, v);
            neg_mass += -v;
            ++dg.clipped_count;
            dg.flags[i] |= point_clipped;
            v = 0.0;
        }
    }
    dg.clipped_mass = neg_mass * dg.g.dx;
    if (dg.clipped_mass > 1e-6)
        throw numeric_error(
            "density: clipped negative mass exceeds 1e-6; the computation is "
            "not trustworthy at this resolution");
}

void require_symmetric_grid(const grid::Grid1D& g, const char* who) {
    if (g.n < 3 || g.origin <= 0 || g.origin >= g.n - 1 ||
        g.n - 1 - g.origin != g.origin)
        throw validation_error(std::string(who) +
                               ": need a symmetric grid with 0 on the center node");
}

/// Shared Fourier-inversion driver. `gate_tab` carries the integrability
/// gate (the exponent whose density this is); `high_tab` is the table whose
/// high end must cover the integrand (for hybrid evaluators, the full-model
/// table that takes over past the truncated table's resolution limit).
DensityGrid invert_core(const PhiEval& phi, const ExponentTable& gate_tab,
                        const ExponentTable& high_tab, double t,
                        const grid::Grid1D& x_grid, FourierOptions opts) {
    if (!(t > 0.0)) throw validation_error("density_fourier: t must be positive");
    if (x_grid.n < 2 || !(x_grid.dx > 0.0))
        throw validation_error("density_fourier: empty grid");
    const int d = phi.d();
    if (d == 1)
        require_symmetric_grid(x_grid, "density_fourier");
    else if (x_grid.origin != 0)
        throw validation_error("density_fourier: d >= 2 uses a radial grid "
                               "starting at 0 (origin index 0)");

    auto gate = exponent::check_fourier_integrability(gate_tab, t);
    if (gate.verdict == report::Verdict::fail && !opts.override_integrability)
        throw precondition_error(
            gate.name,
            "density_fourier: the exponent's inversion integrand is not "
            "integrable at this t; pass override_integrability to evaluate "
            "the conditionally convergent inversion anyway");

    Inverter inv(phi, t);
    if (inv.cutoff > 10.0 * high_tab.rho_hi() && !high_tab.log_type_tail())
        throw validation_error(
            "density_fourier: table too narrow: the inversion integrand "
            "survives far beyond the tabulated range; rebuild the exponent "
            "table with a larger rho_hi");

    DensityGrid dg;
    dg.t = t;
    dg.d = d;
    dg.g = x_grid;
    dg.method = Method::fourier;
    dg.drift_shift = opts.drift_shift;
    dg.values.assign(static_cast<std::size_t>(x_grid.n), 0.0);
    dg.flags.assign(static_cast<std::size_t>(x_grid.n), 0);

    if (d == 1) {
        // symmetric: evaluate the non-negative half and mirror
        const int o = x_grid.origin;
        const int n_half = x_grid.n - o;
        std::vector<PointResult> half(static_cast<std::size_t>(n_half));
        parallel_for(static_cast<std::size_t>(n_half), [&](std::size_t k) {
            half[k] = inv.density_at(x_grid.x(o + static_cast<int>(k)));
        });
        for (int k = 0; k < n_half; ++k) {
            const auto& r = half[static_cast<std::size_t>(k)];
            dg.values[static_cast<std::size_t>(o + k)] = r.value;
            dg.values[static_cast<std::size_t>(o - k)] = r.value;
            if (r.trouble) {
                dg.flags[static_cast<std::size_t>(o + k)] |= point_quadrature;
                dg.flags[static_cast<std::size_t>(o - k)] |= point_quadrature;
            }
        }
    } else {
        std::vector<PointResult> pts(static_cast<std::size_t>(x_grid.n));
        parallel_for(static_cast<std::size_t>(x_grid.n), [&](std::size_t k) {
            pts[k] = inv.density_at(x_grid.x(static_cast<int>(k)));
        });
        for (int k = 0; k < x_grid.n; ++k) {
            dg.values[static_cast<std::size_t>(k)] = pts[static_cast<std::size_t>(k)].value;
            if (pts[static_cast<std::size_t>(k)].trouble)
                dg.flags[static_cast<std::size_t>(k)] |= point_quadrature;
        }
    }
    clip_negatives(dg);
    return dg;
}

// ---------------------------------------------------------------------------
// Derivative jets of the profile (for the boundary-correction series)
// ---------------------------------------------------------------------------

struct LocalJet {
    double f = 0.0, fp = 0.0, fpp = 0.0;
};

/// f, f', f'' at s from central differences of log f (well-scaled even where
/// f itself is extreme). `step` must keep s +- step inside one smooth piece.
LocalJet profile_jet(const profiles::Profile& f, double s, double step) {
    const double l0 = f.log_eval(s);
    const double lp = f.log_eval(s + step);
    const double lm = f.log_eval(s - step);
    const double d1 = (lp - lm) / (2.0 * step);
    const double d2 = (lp - 2.0 * l0 + lm) / (step * step);
    const double v = std::exp(l0);
    return {v, v * d1, v * (d1 * d1 + d2)};
}

/// One-sided jet at a piece boundary: differentiate a little inside the piece
/// (side +1: to the right of s; -1: to the left) and Taylor-shift back to s.
LocalJet sided_jet(const profiles::Profile& f, double s, int side, double rel) {
    const double off = 5.0 * rel * s * side;
    const double s0 = s + off;
    LocalJet j = profile_jet(f, s0, rel * s);
    const double dd = s0 - s;
    return {j.f - dd * j.fp + 0.5 * dd * dd * j.fpp, j.fp - dd * j.fpp, j.fpp};
}

/// Largest safe relative step at s given the other smoothness breakpoints:
/// the 6-step differencing window must not straddle any of them.
double safe_rel_step(double s, const std::vector<double>& pts) {
    double rel = 1e-3;
    for (double p : pts) {
        const double gap = std::fabs(p - s);
        if (gap > 0.0) rel = std::min(rel, gap / (8.0 * s));
    }
    return std::max(rel, 1e-6);
}

} // namespace

// ---------------------------------------------------------------------------
// DensityGrid
// ---------------------------------------------------------------------------

const char* to_string(Method m) { return m == Method::fourier ? "fourier" : "split"; }

double DensityGrid::mass() const {
    double s = 0.0;
    if (d == 1) {
        for (double v : values) s += v;
        return s * g.dx;
    }
    const double omega = sphere_surface(d);
    for (int i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        s += values[static_cast<std::size_t>(i)] * std::pow(x, d - 1);
    }
    return omega * s * g.dx;
}

double DensityGrid::value_at(double x) const {
    const double pos = x / g.dx + g.origin;
    if (pos < 0.0 || pos > g.n - 1.0) return 0.0;
    const int i0 = std::min(static_cast<int>(pos), g.n - 2);
    const double frac = pos - i0;
    return (1.0 - frac) * values[static_cast<std::size_t>(i0)] +
           frac * values[static_cast<std::size_t>(i0) + 1];
}

// ---------------------------------------------------------------------------
// density_fourier
// ---------------------------------------------------------------------------

DensityGrid density_fourier(const ExponentTable& table, double t,
                            const grid::Grid1D& x_grid, FourierOptions opts) {
    PhiEval phi;
    phi.full = &table;
    return invert_core(phi, table, table, t, x_grid, opts);
}

DensityGrid density_fourier(const Model& model, const ExponentTable& table,
                            double t, const grid::Grid1D& x_grid,
                            bool override_integrability) {
    if (model.d() != table.d())
        throw validation_error("density_fourier: model and table dimensions differ");
    FourierOptions opts;
    opts.override_integrability = override_integrability;
    if (!model.drift().empty() && model.d() == 1)
        opts.drift_shift = t * model.drift()[0];
    else if (!model.drift().empty())
        for (double b : model.drift())
            if (b != 0.0)
                throw validation_error(
                    "density_fourier: nonzero drift is supported in d = 1 only "
                    "(radial grids cannot represent an off-center density)");
    return density_fourier(table, t, x_grid, opts);
}

// ---------------------------------------------------------------------------
// small_jump_density
// ---------------------------------------------------------------------------

namespace {

/// Dense, resolution-aware truncated table: knots packed so the boundary
/// oscillation (period 2 pi / r) stays resolved up to the table's high end.
/// Returns the table plus the rho beyond which its knots can no longer track
/// the ring (>= 8 knots per period up to that point).
std::pair<ExponentTable, double> truncated_table(const Model& model, double r,
                                                 double hi_cap_switch) {
    const auto phi_r = [&model, r](double rho) {
        return exponent::re_phi_truncated(model, r, rho);
    };
    const double dlog_target = std::log(10.0) / 150.0; // 150 knots per decade
    const double lo = std::min(1e-3, 0.01 / r);
    double rho_sw = pi / (4.0 * r * dlog_target);
    if (hi_cap_switch > 0.0) rho_sw = std::min(rho_sw, hi_cap_switch);
    const double hi = std::max(1.25 * rho_sw, 100.0 * lo);
    int n_tab = static_cast<int>(std::ceil(std::log(hi / lo) / dlog_target)) + 1;
    n_tab = std::clamp(n_tab, 256, 2304);
    const double dlog = std::log(hi / lo) / (n_tab - 1);
    rho_sw = std::min(pi / (4.0 * r * dlog), hi / 1.1);

    // Precompute the samples in parallel (the fn-based constructor evaluates
    // its nodes sequentially, in index order, at exactly these abscissae).
    const auto rhos = log_space(lo, hi, n_tab);
    std::vector<double> phis(rhos.size());
    parallel_for(rhos.size(), [&](std::size_t i) { phis[i] = phi_r(rhos[i]); });
    std::size_t feed = 0;
    ExponentTable trunc([&phis, &feed](double) { return phis[feed++]; },
                        model.d(), lo, hi, n_tab);
    return {std::move(trunc), rho_sw};
}

/// Boundary terms of int_r^inf cos(rho s) f(s) ds integrated by parts three
/// times: one edge at r, one at each interior kink of the profile beyond r
/// (jump sizes of f, f', f'' there).
std::vector<PhiEval::Edge> correction_edges(const profiles::Profile& f, double r) {
    std::vector<PhiEval::Edge> edges;
    auto kinks = f.breakpoints(r, std::numeric_limits<double>::infinity());
    std::vector<double> guard = kinks;
    guard.push_back(r);

    const double rel_r = safe_rel_step(r, kinks);
    const LocalJet jr = sided_jet(f, r, +1, rel_r);
    edges.push_back({r, -jr.f, -jr.fp, jr.fpp});

    for (double b : kinks) {
        std::vector<double> others;
        for (double p : guard)
            if (p != b) others.push_back(p);
        const double rel = safe_rel_step(b, others);
        const LocalJet left = sided_jet(f, b, -1, rel);
        const LocalJet right = sided_jet(f, b, +1, rel);
        edges.push_back({b, -(right.f - left.f), -(right.fp - left.fp),
                         right.fpp - left.fpp});
    }
    return edges;
}

} // namespace

SmallJumpDensity small_jump_density(const Model& model, double t, double r,
                                    const grid::Grid1D& x_grid,
                                    const ExponentTable* full_table) {
    if (!(r > 0.0)) throw validation_error("small_jump_density: r must be positive");
    if (!(t > 0.0)) throw validation_error("small_jump_density: t must be positive");

    SmallJumpDensity out;
    out.r = r;

    if (model.d() != 1) {
        // d >= 2: plain truncated table sized for integrand coverage. Its
        // knots resolve the truncation ring only over the first decades;
        // beyond that the tabulated values alias the ring, which is adequate
        // at the default radius (the weight has decayed) but not certified.
        // The hybrid continuation is d = 1 only.
        const auto phi_r = [&model, r](double rho) {
            return exponent::re_phi_truncated(model, r, rho);
        };
        const double lo = std::min(1e-3, 0.01 / r);
        double hi = std::max(1e7, 100.0 / r);
        while (t * phi_r(hi) < 40.0 && hi < 1e15) hi *= 10.0;
        const int n_tab = 2048;
        const auto rhos = log_space(lo, hi, n_tab);
        std::vector<double> phis(rhos.size());
        parallel_for(rhos.size(), [&](std::size_t i) { phis[i] = phi_r(rhos[i]); });
        std::size_t feed = 0;
        ExponentTable trunc([&phis, &feed](double) { return phis[feed++]; },
                            model.d(), lo, hi, n_tab);
        PhiEval phi;
        phi.trunc = &trunc;
        out.h = trunc.h(t);
        out.grid = invert_core(phi, trunc, trunc, t, x_grid, {});
    } else {
        auto [trunc, rho_sw] = truncated_table(model, r, 0.0);
        const double lambda = profiles::tail_mass(model, r);

        PhiEval phi;
        phi.trunc = &trunc;
        phi.rho_switch = rho_sw;
        phi.lambda = lambda;
        phi.edges = correction_edges(model.profile(), r);

        // Full-measure table for the high-frequency side. Reuse the caller's
        // when it reaches past the seam; otherwise build one wide enough that
        // the weight is numerically dead inside it at this t.
        std::optional<ExponentTable> upper;
        bool have_full = false;
        if (full_table && full_table->d() == 1 &&
            full_table->rho_lo() <= rho_sw / 2.0 &&
            full_table->rho_hi() >= 3.0 * rho_sw) {
            phi.full = full_table;
            // Accept only if the caller's table also covers the integrand's
            // decay (same 10x slack the inversion driver itself allows).
            Weight probe{&phi, t, 0};
            const double cut = decay_cutoff(probe);
            have_full = cut == 0.0 || cut <= 10.0 * full_table->rho_hi();
        }
        if (!have_full) {
            const double lo_u = rho_sw / 30.0;
            double hi_u = 30.0 * rho_sw;
            while (t * (exponent::re_phi(model, hi_u) - lambda) < 800.0 &&
                   hi_u < 1e18)
                hi_u *= 10.0;
            const int n_u = std::clamp(
                static_cast<int>(120.0 * std::log10(hi_u / lo_u)), 256, 1536);
            const auto rhos = log_space(lo_u, hi_u, n_u);
            std::vector<double> phis(rhos.size());
            parallel_for(rhos.size(), [&](std::size_t i) {
                phis[i] = exponent::re_phi(model, rhos[i]);
            });
            std::size_t feed = 0;
            upper.emplace([&phis, &feed](double) { return phis[feed++]; }, 1,
                          lo_u, hi_u, n_u);
            phi.full = &*upper;
        }

        out.h = trunc.h(t);
        out.grid = invert_core(phi, trunc, *phi.full, t, x_grid, {});

        // The superexponential tail dives below the inversion's absolute
        // accuracy floor; past that point the values are quadrature noise.
        // Zero everything outside the outermost above-threshold samples: the
        // keep-window is bounded by the last real values on each side, so
        // neither a noise spike beyond them nor an isolated failed node
        // inside can move it.
        auto& vals = out.grid.values;
        const auto it_max = std::max_element(vals.begin(), vals.end());
        const double junk = 1e-8 * *it_max;
        int hi_keep = static_cast<int>(it_max - vals.begin());
        for (int i = out.grid.g.n - 1; i > hi_keep; --i)
            if (vals[static_cast<std::size_t>(i)] >= junk) {
                hi_keep = i;
                break;
            }
        for (int i = hi_keep + 1; i < out.grid.g.n; ++i)
            vals[static_cast<std::size_t>(i)] = 0.0;
        int lo_keep = static_cast<int>(it_max - vals.begin());
        for (int i = 0; i < lo_keep; ++i)
            if (vals[static_cast<std::size_t>(i)] >= junk) {
                lo_keep = i;
                break;
            }
        for (int i = 0; i < lo_keep; ++i) vals[static_cast<std::size_t>(i)] = 0.0;
    }

    // Tail-decay diagnostic on [5h, 20h]: log p vs (x/h) log(x/h) should be
    // linear with a clearly negative slope, and the plain log-log slope
    // should steepen outward — together these separate faster-than-any-power
    // decay from a plain power law. The floor keeps quadrature-noise-level
    // values (absolute-accuracy limited) out of the fit.
    const double h = out.h;
    const double floor = 1e-8 * *std::max_element(out.grid.values.begin(),
                                                  out.grid.values.end());
    std::vector<double> zs, ys, lx, ly;
    for (int i = 0; i < x_grid.n; ++i) {
        const double x = x_grid.x(i);
        if (x < 5.0 * h || x > 20.0 * h) continue;
        const double p = out.grid.values[static_cast<std::size_t>(i)];
        if (!(p > floor) || out.grid.flags[static_cast<std::size_t>(i)]) continue;
        const double s = x / h;
        zs.push_back(s * std::log(s));
        ys.push_back(std::log(p));
        lx.push_back(std::log(x));
        ly.push_back(std::log(p));
    }
    out.decay_points = static_cast<int>(zs.size());
    if (out.decay_points >= 6) {
        out.decay_slope = fit_line(zs, ys).slope;
        const std::size_t mid = zs.size() / 2;
        const auto inner = fit_line({lx.begin(), lx.begin() + mid},
                                    {ly.begin(), ly.begin() + mid});
        const auto outer = fit_line({lx.begin() + mid, lx.end()},
                                    {ly.begin() + mid, ly.end()});
        out.superpolynomial =
            out.decay_slope <= -0.05 && outer.slope < inner.slope - 0.5;
    } else if (out.decay_points >= 2) {
        out.decay_slope = fit_line(zs, ys).slope;
    }
    return out;
}

// ---------------------------------------------------------------------------
// density_split
// ---------------------------------------------------------------------------

DensityGrid density_split(const Model& model, const ExponentTable& table,
                          double t, const grid::Grid1D& x_grid, double r,
                          SplitParts* parts_out) {
    if (model.d() != 1)
        throw validation_error("density_split: grid convolutions support d = 1 only");
    if (!(t > 0.0)) throw validation_error("density_split: t must be positive");
    require_symmetric_grid(x_grid, "density_split");
    const double h = table.h(t);
    if (r <= 0.0) r = h;
    const double dx = x_grid.dx;
    if (dx > h / 4.0 + 1e-15)
        throw validation_error(
            "density_split: grid spacing must resolve the small-jump scale "
            "(dx <= h(t)/4; default sizing uses h(t)/16)");

    // Small-jump density on its own symmetric sub-grid. Its tail decays like
    // exp(-c (x/h) log(x/h)) in units of its own (smaller) scale, so by 30 h
    // of the full scale it is far below the inversion's accuracy floor; the
    // halo also covers the splitting radius when the caller moved it outward.
    const double halo = std::max(30.0 * h, 4.0 * r);
    grid::Grid1D g_small = grid::Grid1D::symmetric(halo, dx);
    SmallJumpDensity sj = small_jump_density(model, t, r, g_small, &table);

    // Work grid for the large-jump law: covers the caller's window plus the
    // halo, and enough of the jump tail that the truncated measure is
    // represented to 1e-8 relative.
    const double lambda = profiles::tail_mass(model, r);
    double x_cov = std::max(2.0 * r, x_grid.x_max());
    {
        const double target = 1e-8 * lambda;
        double lo_b = x_cov, hi_b = std::max(4.0, 2.0 * x_cov);
        while (profiles::tail_mass(model, hi_b) > target && hi_b < 1e9) hi_b *= 2.0;
        if (profiles::tail_mass(model, x_cov) > target) {
            for (int k = 0; k < 80; ++k) {
                const double mid = 0.5 * (lo_b + hi_b);
                if (profiles::tail_mass(model, mid) > target)
                    lo_b = mid;
                else
                    hi_b = mid;
            }
            x_cov = hi_b;
        }
    }
    const double x_work = x_cov + halo + 2.0 * dx;
    if (2.0 * x_work / dx + 2.0 > grid::max_cells) {
        std::ostringstream msg;
        msg << "density_split: work grid would need " << 2.0 * x_work / dx
            << " cells at dx = " << dx
            << "; shrink the window or use a larger t (cell budget "
            << grid::max_cells << ")";
        throw convolution::box_too_small(msg.str(), x_work);
    }
    grid::Grid1D gw = grid::Grid1D::symmetric(x_work, dx);

    convolution::TruncatedMeasure nu(model, r, gw, 1e-8);
    convolution::CompoundPoisson cp = convolution::compound_poisson(nu, t);

    // Assemble atom * p_small + p_small (*) large-jump weights on the full
    // support, then window once onto the caller's grid.
    std::vector<double> full = grid::linear_convolve(sj.grid.values, cp.weights);
    const long full_origin = static_cast<long>(g_small.origin) + gw.origin;
    for (int i = 0; i < g_small.n; ++i) {
        const long k = static_cast<long>(i) - g_small.origin + full_origin;
        full[static_cast<std::size_t>(k)] +=
            cp.atom * sj.grid.values[static_cast<std::size_t>(i)];
    }
    auto [vals, outside] = window_full(x_grid, full, full_origin);

    DensityGrid dg;
    dg.t = t;
    dg.d = 1;
    dg.g = x_grid;
    dg.method = Method::split;
    dg.r = r;
    if (!model.drift().empty()) dg.drift_shift = t * model.drift()[0];
    dg.values = std::move(vals);
    dg.flags.assign(static_cast<std::size_t>(x_grid.n), 0);
    dg.series_leftover = cp.leftover;
    dg.series_spill = cp.spill;
    dg.conv_spill = outside * dx; // mass legitimately beyond the output window
    clip_negatives(dg);

    // Far-field warning flags: where the uniform-spread density of the error
    // budget is material against the value itself.
    const double budget_density =
        (dg.series_leftover + dg.series_spill) / (2.0 * x_work);
    for (int i = 0; i < x_grid.n; ++i) {
        const double x = std::fabs(x_grid.x(i));
        if (x > 5.0 * h && budget_density > 1e-3 * dg.values[static_cast<std::size_t>(i)])
            dg.flags[static_cast<std::size_t>(i)] |= point_budget;
    }

    if (parts_out) {
        parts_out->r = r;
        parts_out->work = gw;
        parts_out->small = std::move(sj);
        parts_out->large = std::move(cp);
        parts_out->lambda = lambda;
    }
    return dg;
}

// ---------------------------------------------------------------------------
// semigroup_check
// ---------------------------------------------------------------------------

SemigroupReport semigroup_check(const Model& model, const ExponentTable& table,
                                double t, const grid::Grid1D& x_grid,
                                Method method) {
    if (model.d() != 1)
        throw validation_error("semigroup_check: d = 1 only");
    require_symmetric_grid(x_grid, "semigroup_check");

    const auto compute = [&](double time) {
        return method == Method::split
                   ? density_split(model, table, time, x_grid)
                   : density_fourier(model, table, time, x_grid);
    };
    DensityGrid pt = compute(t);
    DensityGrid p2t = compute(2.0 * t);

    const double dx = x_grid.dx;
    std::vector<double> w(pt.values);
    for (double& v : w) v *= dx; // cell masses of p_t
    auto res = grid::convolve(x_grid, w, w);

    SemigroupReport rep;
    rep.t = t;
    rep.leakage = res.spill;
    rep.inconclusive = res.spill > 1e-4;

    const double x_half = 0.5 * x_grid.x_max();
    for (int i = 0; i < x_grid.n; ++i) {
        if (std::fabs(x_grid.x(i)) > x_half) continue;
        const double ref = p2t.values[static_cast<std::size_t>(i)];
        if (!(ref > 0.0)) continue;
        const double conv = res.values[static_cast<std::size_t>(i)] / dx;
        rep.max_rel_dev = std::max(rep.max_rel_dev, std::fabs(conv - ref) / ref);
        ++rep.points;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// grid sizing helpers
// ---------------------------------------------------------------------------

double representable_x_max(const Model& model, double t, double floor) {
    if (!(t > 0.0) || !(floor > 0.0))
        throw validation_error("representable_x_max: need t > 0 and floor > 0");
    const auto& f = model.profile();
    const double lf = std::log(floor) - std::log(t);
    if (f.log_eval(1.0) <= lf) return 1.0;
    double lo = 1.0, hi = 2.0;
    while (f.log_eval(hi) > lf && hi < 1e12) hi *= 2.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = std::sqrt(lo * hi);
        if (f.log_eval(mid) > lf)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double coverage_x_max(const Model& model, double t, double mass_tol) {
    if (!(t > 0.0) || !(mass_tol > 0.0))
        throw validation_error("coverage_x_max: need t > 0 and mass_tol > 0");
    const double target = mass_tol / t;
    double lo = 1.0, hi = 2.0;
    if (profiles::tail_mass(model, lo) <= target) return lo;
    while (profiles::tail_mass(model, hi) > target && hi < 1e9) hi *= 2.0;
    if (profiles::tail_mass(model, hi) > target)
        throw numeric_error("coverage_x_max: tail mass does not reach the "
                            "target below 1e9; heavier tail than expected");
    for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (profiles::tail_mass(model, mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

grid::Grid1D default_grid(const Model& model, const ExponentTable& table,
                          double t, double x_max) {
    const double h = table.h(t);
    const double dx = h / 16.0;
    double X = x_max > 0.0 ? x_max : coverage_x_max(model, t);
    X = std::max(X, 10.0 * h);
    if (2.0 * X / dx + 2.0 > grid::max_cells) {
        std::ostringstream msg;
        msg << "default_grid: " << 2.0 * X / dx << " cells at dx = h(t)/16 = "
            << dx << " exceeds the cell budget " << grid::max_cells
            << "; reduce x_max or use a larger t";
        throw convolution::box_too_small(msg.str(), X);
    }
    return grid::Grid1D::symmetric(X, dx);
}

} // namespace levyk::density
