#include "levyk/exponent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <gsl/gsl_interp.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_spline.h>

#include "levyk/common.hpp"
#include "levyk/quadrature.hpp"

namespace levyk::exponent {

using profiles::Model;
using profiles::Profile;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Angular kernel A_d(u) = integral over the unit sphere of (1 - cos(u e_1 . w)):
//   A_1(u) = 2 (1 - cos u), A_2(u) = 2 pi (1 - J0(u)), A_3 = 4 pi (1 - sin(u)/u).
// Its power series is A_d(u) = sum_{k>=1} (-1)^{k+1} c_{d,k} u^{2k} with
//   c_{d,k} = omega_{d-1} / (2^k k! prod_{j=0}^{k-1} (d + 2j)).
// Stored as the leading coefficient c_{d,1} plus the ratio series
//   A_d(u) / (c_{d,1} u^2) = sum_{k>=1} (-1)^{k+1} (c_{d,k}/c_{d,1}) u^{2(k-1)},
// which stays within ~2% of 1 for u <= 1/2 (the only place it is used).
constexpr int taylor_terms = 12;
constexpr double taylor_cut = 0.5;

struct AngularSeries {
    double c1;
    double ratio[taylor_terms]; // signed, ratio[0] = 1
};

const AngularSeries& angular_series(int d) {
    static const auto tables = [] {
        std::array<AngularSeries, 4> t{};
        for (int dim = 1; dim <= 3; ++dim) {
            double ck = sphere_surface(dim) / (2.0 * dim); // c_{d,1}
            t[dim].c1 = ck;
            double coef = ck;
            for (int k = 1; k <= taylor_terms; ++k) {
                t[dim].ratio[k - 1] = (k % 2 == 1 ? 1.0 : -1.0) * coef / ck;
                // c_{d,k+1} = c_{d,k} / (2 (k+1) (d + 2k))
                coef /= 2.0 * (k + 1) * (dim + 2.0 * k);
            }
        }
        return t;
    }();
    return tables[d];
}

// A_d(u) / (c_{d,1} u^2) evaluated from u^2 (valid for u <= taylor_cut).
double a_ratio(int d, double u2) {
    const auto& s = angular_series(d);
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < taylor_terms; ++k) {
        sum += s.ratio[k] * term;
        term *= u2;
        if (term < 1e-22) break;
    }
    return sum;
}

// log A_d at u = exp(log_u), assembled so that u^2 never underflows the whole
// expression: log c1 + 2 log u + log(ratio).
double log_a_taylor(int d, double log_u) {
    const double u2 = log_u > -350.0 ? std::exp(2.0 * log_u) : 0.0;
    return std::log(angular_series(d).c1) + 2.0 * log_u + std::log(a_ratio(d, u2));
}

// integral_0^{s_hi} f(s) s^{d-1} A_d(rho s) ds with A_d in its series form
// (requires rho * s_hi <= taylor_cut). Integrated in u = log s, split at the
// profile kinks; fully log-space so steep power factors never overflow.
double taylor_part(const Profile& f, int d, double rho, double s_hi) {
    const double log_rho = std::log(rho);
    quad::Fn g = [&f, d, log_rho](double u) {
        return std::exp(f.log_eval_log(u) + d * u + log_a_taylor(d, log_rho + u));
    };
    const quad::Tol tol{1e-280, 1e-10};
    const double u_hi = std::log(s_hi);
    std::vector<double> cuts; // interior kinks of f in log-radius
    for (double b : f.breakpoints(0.0, s_hi)) cuts.push_back(std::log(b));
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0, lo = -inf;
    cuts.push_back(u_hi);
    for (double b : cuts) {
        if (b > lo) {
            total += std::isinf(lo) ? quad::integrate_lower(g, b, tol)
                                    : quad::integrate(g, lo, b, tol);
            lo = b;
        }
    }
    return total;
}

// Slowly varying Bessel modulus functions: exactly
//   J0(z) = sqrt(2/(pi z)) [ P(z) cos(z - pi/4) - Q(z) sin(z - pi/4) ],
// with P -> 1 and Q -> -1/(8z); both are smooth and non-oscillatory, so the
// oscillation can be handed to cos/sin quadrature with these in the envelope.
void bessel_modulus(double z, double& p, double& q) {
    const double j0 = gsl_sf_bessel_J0(z), y0 = gsl_sf_bessel_Y0(z);
    const double c = std::cos(z - 0.25 * pi), s = std::sin(z - 0.25 * pi);
    const double amp = std::sqrt(0.5 * pi * z);
    p = amp * (j0 * c + y0 * s);
    q = amp * (y0 * c - j0 * s);
}

// integral_{s_lo}^{s_hi} E(s) * trig(rho s) ds over kink-split pieces, with an
// infinite tail when s_hi is infinite. `scale` converts the caller's overall
// magnitude into an absolute tolerance for near-cancelling oscillatory pieces.
double trig_pieces(const quad::Fn& envelope, const std::vector<double>& kinks,
                   double s_lo, double s_hi, double rho, quad::Trig trig,
                   double scale) {
    const quad::Tol tol{1e-9 * scale, 1e-9};
    std::vector<double> bounds{s_lo};
    for (double k : kinks)
        if (k > s_lo * (1.0 + 1e-12) && k < s_hi) bounds.push_back(k);
    std::sort(bounds.begin(), bounds.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
        total += quad::oscillatory(envelope, bounds[i], bounds[i + 1], rho, trig, tol);
    if (std::isinf(s_hi))
        total += quad::oscillatory_tail(envelope, bounds.back(), rho, trig, scale, tol);
    else if (s_hi > bounds.back())
        total += quad::oscillatory(envelope, bounds.back(), s_hi, rho, trig, tol);
    return total;
}

// Oscillatory remainder integral_{s_lo}^{s_hi} f(s) s^{d-1} osc_d(rho s) ds,
// where osc_d = omega_{d-1} - A_d:
//   d=1: 2 cos(rho s);  d=2: 2 pi J0(rho s);  d=3: 4 pi sin(rho s)/(rho s).
double osc_part(const Profile& f, int d, double rho, double s_lo, double s_hi,
                double scale) {
    const std::vector<double> kinks = f.breakpoints(s_lo, std::isinf(s_hi) ? 1e300 : s_hi);
    if (d == 1) {
        quad::Fn env = [&f](double s) { return 2.0 * f.eval(s); };
        return trig_pieces(env, kinks, s_lo, s_hi, rho, quad::Trig::cos, scale);
    }
    if (d == 3) {
        quad::Fn env = [&f](double s) { return 4.0 * pi * f.eval(s) * s; };
        return trig_pieces(env, kinks, s_lo, s_hi, rho, quad::Trig::sin, scale) / rho;
    }
    // d == 2: split at s0 = z0/rho. Below it J0 has at most a few zeros -- sum
    // panel integrals delimited by those zeros exactly. Above it use the
    // modulus decomposition and standard cos/sin machinery.
    constexpr double z0 = 30.0;
    const double s0 = std::min(std::max(s_lo, z0 / rho), s_hi);
    double total = 0.0;
    quad::Fn direct = [&f, rho](double s) {
        return 2.0 * pi * f.eval(s) * s * gsl_sf_bessel_J0(rho * s);
    };
    if (s0 > s_lo) {
        std::vector<double> bounds{s_lo};
        for (unsigned k = 1;; ++k) {
            const double z = gsl_sf_bessel_zero_J0(k);
            if (z >= rho * s0) break;
            if (z > rho * s_lo) bounds.push_back(z / rho);
        }
        for (double kk : kinks)
            if (kk > s_lo && kk < s0) bounds.push_back(kk);
        bounds.push_back(s0);
        std::sort(bounds.begin(), bounds.end());
        const quad::Tol tol{1e-10 * scale, 1e-10};
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
            if (bounds[i + 1] > bounds[i])
                total += quad::integrate(direct, bounds[i], bounds[i + 1], tol);
    }
    if (s0 < s_hi) {
        quad::Fn env_cos = [&f, rho](double s) {
            double p, q;
            bessel_modulus(rho * s, p, q);
            return 2.0 * pi * f.eval(s) * s * std::sqrt(1.0 / (pi * rho * s)) * (p + q);
        };
        quad::Fn env_sin = [&f, rho](double s) {
            double p, q;
            bessel_modulus(rho * s, p, q);
            return 2.0 * pi * f.eval(s) * s * std::sqrt(1.0 / (pi * rho * s)) * (p - q);
        };
        total += trig_pieces(env_cos, kinks, s0, s_hi, rho, quad::Trig::cos, scale);
        total += trig_pieces(env_sin, kinks, s0, s_hi, rho, quad::Trig::sin, scale);
    }
    return total;
}

double re_phi_impl(const Profile& f, int d, double rho, double radius) {
    if (rho == 0.0) return 0.0;
    const double s_c = taylor_cut / rho;
    if (s_c >= radius) return taylor_part(f, d, rho, radius);
    const double p1 = taylor_part(f, d, rho, s_c);
    const double mt = sphere_surface(d) * f.moment(d - 1, s_c, radius);
    if (!(mt > 1e-14 * p1)) return p1 + mt; // |osc| <= mt: negligible either way
    const double scale = p1 + mt;
    const double osc = osc_part(f, d, rho, s_c, radius, scale);
    double v = p1 + (mt - osc);
    if (mt - osc < 0.0) {
        if (mt - osc < -1e-6 * scale)
            throw numeric_error("re_phi: oscillatory part exceeded its bound");
        v = p1;
    }
    return v;
}

} // namespace

double re_phi(const Model& model, double rho) {
    if (!(rho >= 0.0)) throw validation_error("re_phi: rho must be >= 0");
    return re_phi_impl(model.profile(), model.profile().d(), rho, inf);
}

double re_phi_truncated(const Model& model, double radius, double rho) {
    if (!(rho >= 0.0)) throw validation_error("re_phi_truncated: rho must be >= 0");
    if (!(radius > 0.0)) throw validation_error("re_phi_truncated: radius must be > 0");
    return re_phi_impl(model.profile(), model.profile().d(), rho, radius);
}

// ---------------------------------------------------------------------------
// Exponent table
// ---------------------------------------------------------------------------

struct ExponentTable::Interp {
    // No gsl_interp_accel: the accel cache is mutated on every lookup, and
    // tables are evaluated from parallel probe loops. A null accel makes GSL
    // fall back to plain binary search, which is stateless and thread-safe.
    gsl_spline* psi = nullptr;
    gsl_spline* phi = nullptr;
    std::vector<double> log_phis;

    ~Interp() {
        if (psi) gsl_spline_free(psi);
        if (phi) gsl_spline_free(phi);
    }
};

ExponentTable::~ExponentTable() = default;
ExponentTable::ExponentTable(ExponentTable&&) noexcept = default;
ExponentTable& ExponentTable::operator=(ExponentTable&&) noexcept = default;

ExponentTable::ExponentTable(const Model& model, double rho_lo, double rho_hi, int n)
    : d_(model.profile().d()) {
    if (!(rho_lo > 0.0) || !(rho_hi > rho_lo) || n < 16)
        throw validation_error("ExponentTable: need 0 < rho_lo < rho_hi and n >= 16");
    rhos_ = log_space(rho_lo, rho_hi, n);
    phis_.resize(rhos_.size());
    parallel_for(rhos_.size(), [&](std::size_t i) { phis_[i] = re_phi(model, rhos_[i]); });
    finish_build();
}

ExponentTable::ExponentTable(const RadialExponent& fn, int d, double rho_lo,
                             double rho_hi, int n)
    : d_(d) {
    if (d < 1 || d > 3) throw validation_error("ExponentTable: d must be 1, 2 or 3");
    if (!(rho_lo > 0.0) || !(rho_hi > rho_lo) || n < 16)
        throw validation_error("ExponentTable: need 0 < rho_lo < rho_hi and n >= 16");
    rhos_ = log_space(rho_lo, rho_hi, n);
    phis_.resize(rhos_.size());
    for (std::size_t i = 0; i < rhos_.size(); ++i) phis_[i] = fn(rhos_[i]);
    finish_build();
}

void ExponentTable::finish_build() {
    const std::size_t n = rhos_.size();
    psis_.resize(n);
    double run = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(phis_[i]) || phis_[i] <= 0.0)
            throw numeric_error("ExponentTable: exponent must be finite and positive");
        run = std::max(run, phis_[i]);
        psis_[i] = run;
    }
    log_rhos_.resize(n);
    log_psis_.resize(n);
    interp_ = std::make_unique<Interp>();
    interp_->log_phis.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        log_rhos_[i] = std::log(rhos_[i]);
        log_psis_[i] = std::log(psis_[i]);
        interp_->log_phis[i] = std::log(phis_[i]);
    }
    interp_->psi = gsl_spline_alloc(gsl_interp_steffen, n);
    interp_->phi = gsl_spline_alloc(gsl_interp_steffen, n);
    gsl_spline_init(interp_->psi, log_rhos_.data(), log_psis_.data(), n);
    gsl_spline_init(interp_->phi, log_rhos_.data(), interp_->log_phis.data(), n);

    // Endpoint behavior fits, one decade wide.
    auto decade_fit = [&](double lo, double hi, const std::vector<double>& ys) {
        std::vector<double> xs, vs;
        for (std::size_t i = 0; i < n; ++i) {
            if (log_rhos_[i] >= lo - 1e-12 && log_rhos_[i] <= hi + 1e-12) {
                xs.push_back(log_rhos_[i]);
                vs.push_back(ys[i]);
            }
        }
        return fit_line(xs, vs);
    };
    const double l10 = std::log(10.0);
    const double front = log_rhos_.front(), back = log_rhos_.back();
    slope_lo_ = decade_fit(front, front + l10, log_psis_).slope;
    slope_hi_ = decade_fit(back - l10, back, log_psis_).slope;
    prev_slope_hi_ = decade_fit(back - 2 * l10, back - l10, log_psis_).slope;
    auto lf = decade_fit(back - l10, back, psis_);
    log_coeff_hi_ = lf.slope;
    log_offset_hi_ = lf.intercept;
}

double ExponentTable::re_phi_at(double rho) const {
    if (!(rho > 0.0)) throw validation_error("re_phi_at: rho must be > 0");
    const double lr = std::log(rho);
    if (lr <= log_rhos_.front())
        return std::exp(interp_->log_phis.front() + slope_lo_ * (lr - log_rhos_.front()));
    if (lr >= log_rhos_.back())
        return std::exp(interp_->log_phis.back() + slope_hi_ * (lr - log_rhos_.back()));
    return std::exp(gsl_spline_eval(interp_->phi, lr, nullptr));
}

double ExponentTable::psi(double rho) const {
    if (!(rho > 0.0)) throw validation_error("psi: rho must be > 0");
    const double lr = std::log(rho);
    if (lr <= log_rhos_.front())
        return std::exp(log_psis_.front() + slope_lo_ * (lr - log_rhos_.front()));
    if (lr >= log_rhos_.back())
        return std::exp(log_psis_.back() + slope_hi_ * (lr - log_rhos_.back()));
    return std::exp(gsl_spline_eval(interp_->psi, lr, nullptr));
}

double ExponentTable::psi_inverse(double value) const {
    if (!(value > 0.0)) throw validation_error("psi_inverse: value must be > 0");
    const double lv = std::log(value);
    if (lv <= log_psis_.front()) {
        if (slope_lo_ < 1e-3) return rhos_.front();
        return std::exp(log_rhos_.front() + (lv - log_psis_.front()) / slope_lo_);
    }
    if (lv >= log_psis_.back()) {
        if (!log_type_tail())
            return std::exp(log_rhos_.back() + (lv - log_psis_.back()) / slope_hi_);
        // logarithmic growth: invert Psi ~ coeff * log rho + offset
        if (log_coeff_hi_ <= 0.0) return rhos_.back();
        return std::exp((value - log_offset_hi_) / log_coeff_hi_);
    }
    // rightmost tabulated index with log_psi <= lv
    auto it = std::upper_bound(log_psis_.begin(), log_psis_.end(), lv);
    std::size_t i = static_cast<std::size_t>(it - log_psis_.begin());
    // bracket [i-1, i]; bisect the monotone spline for the crossing
    double a = log_rhos_[i - 1], b = log_rhos_[i];
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (a + b);
        if (gsl_spline_eval(interp_->psi, mid, nullptr) <= lv)
            a = mid;
        else
            b = mid;
    }
    return std::exp(0.5 * (a + b));
}

double ExponentTable::h(double t) const {
    if (!(t > 0.0)) throw validation_error("h: t must be > 0");
    return 1.0 / psi_inverse(1.0 / t);
}

double ExponentTable::tail_power_slope() const { return slope_hi_; }
double ExponentTable::prev_power_slope() const { return prev_slope_hi_; }
double ExponentTable::tail_log_coeff() const { return log_coeff_hi_; }

bool ExponentTable::log_type_tail() const {
    // A genuine power tail keeps its local log-log slope constant from decade
    // to decade; growth like B log rho has slope B / Psi decaying in lockstep
    // with 1/log rho. Classify by the decay of the slope, not its size alone.
    const double decay = prev_slope_hi_ > 0.0 ? slope_hi_ / prev_slope_hi_ : 0.0;
    return slope_hi_ < 0.02 || (slope_hi_ < 0.15 && decay < 0.90);
}

// ---------------------------------------------------------------------------
// Condition checks
// ---------------------------------------------------------------------------

namespace {

// integral_0^{up} rho^d e^{-t re_phi(rho)} d rho, via the table.
double radial_transform_integral(const ExponentTable& tab, double t, double up) {
    const int d = tab.d();
    const double lo = tab.rho_lo();
    // (0, lo]: re_phi vanishes quadratically, e^{-t phi} ~ 1
    double head = std::pow(lo, d + 1.0) / (d + 1.0);
    quad::Fn g = [&tab, t, d](double u) {
        const double rho = std::exp(u);
        return std::pow(rho, d + 1.0) * std::exp(-t * tab.re_phi_at(rho));
    };
    // diagnostic-grade tolerance: the integrand can be nearly flat across
    // many decades, which limits adaptive refinement to roundoff
    return head + quad::integrate(g, std::log(lo), std::log(up), {1e-10, 1e-6});
}

} // namespace

report::ConditionReport check_fourier_integrability(const ExponentTable& table, double t) {
    if (!(t > 0.0)) throw validation_error("check_fourier_integrability: t must be > 0");
    report::ConditionReport rep;
    rep.name = "fourier-integrability";
    const int d = table.d();
    const double slope = table.tail_power_slope();
    rep.stat("t", t);
    rep.stat("tail_power_slope", slope);

    const double hi = table.rho_hi();
    rep.stat("prev_power_slope", table.prev_power_slope());
    const double i1 = radial_transform_integral(table, t, hi / 100.0);
    const double i2 = radial_transform_integral(table, t, hi / 10.0);
    const double i3 = radial_transform_integral(table, t, hi);
    rep.stat("integral_to_rho_max", i3);
    const double increment = (i3 - i2) / std::max(i2 - i1, 1e-300);
    rep.stat("decade_increment_ratio", increment);

    if (!table.log_type_tail()) {
        rep.verdict = report::Verdict::pass;
        rep.notes.push_back("exponent grows like a power; integrand decays "
                            "faster than any power of frequency");
        return rep;
    }
    const double b = table.tail_log_coeff();
    rep.stat("log_growth_coeff", b);
    const double margin = t * b / (d + 1.0);
    rep.stat("margin", margin);
    if (b > 0.0) rep.stat("t_critical", (d + 1.0) / b);
    if (margin > 1.05) {
        rep.verdict = report::Verdict::pass;
        rep.notes.push_back("logarithmic exponent growth, but t lies above the "
                            "integrability threshold");
    } else if (margin <= 1.0) {
        rep.verdict = report::Verdict::fail;
        rep.notes.push_back("integrand decays like rho^(d - t*coeff) with "
                            "t*coeff <= d+1: the transform integral diverges");
    } else {
        rep.verdict = report::Verdict::inconclusive;
        rep.notes.push_back("t sits within 5% of the integrability threshold");
    }
    return rep;
}

report::ConditionReport check_profile_psi_bound(const Model& model,
                                                const ExponentTable& table, double r0) {
    if (!(r0 > 0.0)) throw validation_error("check_profile_psi_bound: r0 must be > 0");
    report::ConditionReport rep;
    rep.name = "profile-vs-psi-bound";
    const Profile& f = model.profile();
    const int d = f.d();
    const auto rs = log_space(1e-8 * r0, 2.0 * r0, 200);
    double qmax = 0.0, qmin = inf;
    for (double r : rs) {
        // log-space assembly: f(r) r^d can overflow in factors at small r
        const double q = std::exp(f.log_eval_log(std::log(r)) + d * std::log(r) -
                                  std::log(table.psi(1.0 / r)));
        rep.curve.push_back({1.0 / r, q});
        qmax = std::max(qmax, q);
        qmin = std::min(qmin, q);
    }
    std::sort(rep.curve.begin(), rep.curve.end(),
              [](auto a, auto b) { return a.x < b.x; });
    const auto trend = report::growth_trend(rep.curve);
    rep.stat("r0", r0);
    rep.stat("ratio_max", qmax);
    rep.stat("ratio_min", qmin);
    rep.stat("decade_median_spread", trend.overall_ratio);
    rep.stat("last_over_first_median", trend.last_median / trend.first_median);
    if (trend.overall_ratio < 10.0 || trend.monotone_down ||
        trend.last_median <= trend.first_median) {
        rep.verdict = report::Verdict::pass;
        rep.notes.push_back("f(r) r^d / Psi(1/r) stays bounded toward r -> 0");
    } else if (trend.monotone_up && trend.overall_ratio >= 10.0) {
        rep.verdict = report::Verdict::fail;
        rep.notes.push_back("f(r) r^d / Psi(1/r) grows monotonically by more "
                            "than 10x toward r -> 0");
    } else {
        rep.verdict = report::Verdict::inconclusive;
        rep.notes.push_back("large non-monotone spread in f(r) r^d / Psi(1/r)");
    }
    return rep;
}

report::ConditionReport check_weak_scaling(const ExponentTable& table, double alpha_min) {
    report::ConditionReport rep;
    rep.name = "weak-lower-scaling";
    const double s_hi = table.tail_power_slope();
    const double s_prev = table.prev_power_slope();
    const double decay = s_prev > 0.0 ? s_hi / s_prev : 0.0;
    rep.stat("alpha_min", alpha_min);
    rep.stat("top_decade_slope", s_hi);
    rep.stat("previous_decade_slope", s_prev);
    rep.stat("slope_decay_ratio", decay);
    if (s_hi >= alpha_min && decay >= 0.95) {
        rep.verdict = report::Verdict::pass;
        rep.notes.push_back("local power slope of Psi stays bounded away from zero");
    } else if (s_hi < alpha_min || (decay < 0.90 && s_hi < 0.15)) {
        rep.verdict = report::Verdict::fail;
        rep.notes.push_back("local power slope of Psi decays toward zero "
                            "(logarithmic-type growth)");
    } else {
        rep.verdict = report::Verdict::inconclusive;
        rep.notes.push_back("slope trend too close to the threshold to classify");
    }
    return rep;
}

} // namespace levyk::exponent
