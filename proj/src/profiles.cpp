#include "levyk/profiles.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace levyk::profiles {
namespace {

constexpr double two_log_two = 1.3862943611198906; // (1+r) log(1+1/r) at r = 1

// (1+r) log(1+1/r), strictly decreasing from +inf to 2 log 2 on (0, 1].
double junction_slope_fn(double r) { return (1.0 + r) * std::log1p(1.0 / r); }

// log of L(s) = log(1 + 1/s) at s = exp(u), overflow-free for any u.
double log_L_from_log(double u) {
    if (u <= 0.0) return std::log(-u + std::log1p(std::exp(u)));
    if (u >= 700.0) return -u; // L(s) ~ 1/s
    return std::log(std::log1p(std::exp(-u)));
}

} // namespace

double Profile::kappa_raw(double s) const {
    const double a1 = spec_.kappa.a1_eff();
    const double a2 = spec_.kappa.a2_eff();
    double v = std::pow(s, -(spec_.d + a1));
    if (a2 != 0.0) v *= std::pow(std::log1p(1.0 / s), a2);
    return v;
}

Profile::Profile(const ProfileSpec& spec) : spec_(spec) {
    const auto& k = spec_.kappa;
    if (spec_.d < 1 || spec_.d > 3)
        throw validation_error("Profile: d must be 1, 2 or 3");
    if (k.variant == KappaVariant::poly_log) {
        if (!(k.alpha1 > 0.0) || !(k.alpha1 <= 2.0))
            throw validation_error("Profile: poly_log needs alpha1 in (0, 2]");
        if (k.alpha1 == 2.0 && !(k.alpha2 < -1.0))
            throw validation_error(
                "Profile: poly_log with alpha1 = 2 needs alpha2 < -1 "
                "(small-jump second moment diverges otherwise)");
    }
    if (!(spec_.m >= 0.0)) throw validation_error("Profile: m must be >= 0");
    if (!(spec_.beta > 0.0) || !(spec_.beta <= 2.0))
        throw validation_error("Profile: beta must lie in (0, 2]");
    if (spec_.m == 0.0) {
        if (!(spec_.delta > spec_.d))
            throw validation_error("Profile: m = 0 requires delta > d (integrable tail)");
    } else if (!(spec_.delta >= 0.0)) {
        throw validation_error("Profile: m > 0 requires delta >= 0");
    }

    // Monotonization: the raw kappa increases at radius r iff
    // (1+r) log(1+1/r) < |alpha2| / (d + alpha1); clip from the first such
    // radius r* on, i.e. store min_{u <= s} kappa(u).
    r_star_ = 1.0;
    const double a2 = k.a2_eff();
    if (a2 < 0.0) {
        const double target = -a2 / (spec_.d + k.a1_eff());
        if (target > two_log_two) {
            double lo = 1e-12, hi = 1.0;
            for (int i = 0; i < 200; ++i) {
                double mid = 0.5 * (lo + hi);
                (junction_slope_fn(mid) > target ? lo : hi) = mid;
            }
            r_star_ = 0.5 * (lo + hi);
        }
    }
    kappa1_ = kappa_raw(r_star_);

    const double c_max = kappa1_ * std::exp(spec_.m);
    if (spec_.c.has_value()) {
        c_ = *spec_.c;
        if (!(c_ > 0.0) || c_ > c_max * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "Profile: c must lie in (0, kappa(1) e^m] = (0, " << c_max << "]";
            throw validation_error(os.str());
        }
    } else {
        c_ = c_max;
    }

    // Lévy-measure admissibility: finite small-jump second moment, evaluated
    // numerically (divergent parameter corners throw numeric_error inside).
    sigma2_small_ = sphere_surface(spec_.d) * moment(spec_.d + 1, 0.0, 1.0);
    if (!std::isfinite(sigma2_small_) || !(sigma2_small_ > 0.0))
        throw numeric_error("Profile: small-jump second moment did not evaluate finite");
}

double Profile::kappa(double s) const {
    if (!(s > 0.0) || s > 1.0)
        throw validation_error("Profile::kappa: s must lie in (0, 1]");
    return s <= r_star_ ? kappa_raw(s) : kappa1_;
}

double Profile::eval(double s) const {
    if (!(s > 0.0)) throw validation_error("Profile::eval: s must be positive");
    if (s <= 1.0) return kappa(s);
    // m = 0 must skip the tempering factor: 0 * pow(inf, beta) is NaN
    if (spec_.m == 0.0) return c_ * std::pow(s, -spec_.delta);
    return c_ * std::exp(-spec_.m * std::pow(s, spec_.beta)) * std::pow(s, -spec_.delta);
}

double Profile::log_eval(double s) const {
    if (!(s > 0.0)) throw validation_error("Profile::log_eval: s must be positive");
    return log_eval_log(std::log(s));
}

double Profile::log_eval_log(double u) const {
    if (std::isnan(u) || u == std::numeric_limits<double>::infinity())
        throw validation_error("Profile::log_eval_log: invalid log-radius");
    if (u <= 0.0) {
        if (u <= std::log(r_star_)) {
            const double a1 = spec_.kappa.a1_eff();
            const double a2 = spec_.kappa.a2_eff();
            double v = -(spec_.d + a1) * u;
            if (a2 != 0.0) v += a2 * log_L_from_log(u);
            return v;
        }
        return std::log(kappa1_);
    }
    if (spec_.m == 0.0) return std::log(c_) - spec_.delta * u;
    return std::log(c_) - spec_.m * std::exp(spec_.beta * u) - spec_.delta * u;
}

std::vector<double> Profile::breakpoints(double lo, double hi) const {
    std::vector<double> out;
    if (r_star_ < 1.0 && lo < r_star_ && r_star_ < hi) out.push_back(r_star_);
    if (lo < 1.0 && 1.0 < hi) out.push_back(1.0);
    return out;
}

// integral over a subinterval of (0, r_star]: s^{p - d - a1} log(1+1/s)^{a2}.
double Profile::moment_kappa_piece(double p, double lo, double hi, quad::Tol tol) const {
    const double a1 = spec_.kappa.a1_eff();
    const double a2 = spec_.kappa.a2_eff();
    const double e = p - spec_.d - a1; // integrand ~ s^e near 0 (up to logs)
    // s^{p+1} kappa(s) at s = e^u, assembled in log space so that the
    // steep power factors never overflow individually.
    const double da1 = spec_.d + a1;
    quad::Fn g = [da1, a2, p](double u) {
        const double exponent =
            (p + 1.0 - da1) * u + (a2 == 0.0 ? 0.0 : a2 * log_L_from_log(u));
        return std::exp(exponent);
    };
    if (lo > 0.0) {
        // No singularity inside: integrate in u = log s (handles steepness).
        return quad::integrate(g, std::log(lo), std::log(hi), tol);
    }
    if (e > -1.0 + 1e-12) {
        return quad::integrate_lower(g, std::log(hi), tol);
    }
    if (std::fabs(e + 1.0) <= 1e-12) {
        // Power exactly cancels the singularity; only the log factor decides.
        if (!(a2 < -1.0))
            throw numeric_error("Profile::moment: divergent at 0 (marginal power, a2 >= -1)");
        return quad::integrate_log_marginal([](double) { return 1.0; }, a2, hi, tol);
    }
    throw numeric_error("Profile::moment: divergent at 0");
}

// integral over a subinterval of (1, inf): s^{p - delta} c e^{-m s^beta}.
double Profile::moment_tail_piece(double p, double lo, double hi, quad::Tol tol) const {
    const double q = p - spec_.delta;
    if (spec_.m == 0.0 && !std::isfinite(hi)) {
        if (!(q < -1.0))
            throw numeric_error("Profile::moment: divergent tail (m = 0, p - delta >= -1)");
        return c_ * std::pow(lo, q + 1.0) / (-q - 1.0);
    }
    // assembled in log space: (q+1) u can be large positive while the
    // tempering term dominates, and the sum never produces inf * 0
    quad::Fn g = [this, q](double u) {
        const double s = std::exp(u);
        return c_ * std::exp((q + 1.0) * u - spec_.m * std::pow(s, spec_.beta));
    };
    if (!std::isfinite(hi)) return quad::integrate_upper(g, std::log(lo), tol);
    return quad::integrate(g, std::log(lo), std::log(hi), tol);
}

double Profile::moment(double p, double lo, double hi, quad::Tol tol) const {
    if (!(lo >= 0.0) || !(hi > lo))
        throw validation_error("Profile::moment: need 0 <= lo < hi");
    double total = 0.0;
    // (0, r_star] piece
    if (lo < r_star_) {
        const double a = lo, b = std::min(hi, r_star_);
        if (b > a) total += moment_kappa_piece(p, a, b, tol);
    }
    // flat piece (r_star, 1] — exact
    if (r_star_ < 1.0 && hi > r_star_ && lo < 1.0) {
        const double a = std::max(lo, r_star_), b = std::min(hi, 1.0);
        if (b > a) {
            if (std::fabs(p + 1.0) <= 1e-14)
                total += kappa1_ * std::log(b / a);
            else
                total += kappa1_ * (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
        }
    }
    // (1, hi] tail piece
    if (hi > 1.0) {
        const double a = std::max(lo, 1.0);
        if (hi > a) total += moment_tail_piece(p, a, hi, tol);
    }
    return total;
}

Model::Model(const ProfileSpec& spec, std::vector<double> drift)
    : profile_(spec), drift_(std::move(drift)) {
    if (drift_.empty()) drift_.assign(static_cast<std::size_t>(profile_.d()), 0.0);
    if (drift_.size() != static_cast<std::size_t>(profile_.d()))
        throw validation_error("Model: drift vector must have length d");
    for (double v : drift_)
        if (!std::isfinite(v)) throw validation_error("Model: drift entries must be finite");
}

double profile_eval(const Profile& p, double s) { return p.eval(s); }

double levy_density(const Model& model, const std::vector<double>& x) {
    if (x.size() != static_cast<std::size_t>(model.d()))
        throw validation_error("levy_density: point dimension mismatch");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    if (!(r2 > 0.0)) throw validation_error("levy_density: undefined at the origin");
    return model.profile().eval(std::sqrt(r2));
}

double tail_mass(const Model& model, double r) {
    if (!(r > 0.0)) throw validation_error("tail_mass: r must be positive");
    const auto& p = model.profile();
    return sphere_surface(model.d()) *
           p.moment(model.d() - 1.0, r, std::numeric_limits<double>::infinity());
}

double small_jump_second_moment(const Model& model, double r) {
    if (!(r > 0.0)) throw validation_error("small_jump_second_moment: r must be positive");
    const auto& p = model.profile();
    if (r == 1.0) return p.second_moment_small();
    return sphere_surface(model.d()) * p.moment(model.d() + 1.0, 0.0, r);
}

} // namespace levyk::profiles
