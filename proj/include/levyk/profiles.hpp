#pragma once

#include <optional>
#include <vector>

#include "levyk/common.hpp"
#include "levyk/quadrature.hpp"

namespace levyk::profiles {

/// Small-radius singularity class of the radial profile.
enum class KappaVariant { pure_log, poly_log, high_intensity };

/// kappa(r) = r^{-d-a1} log(1 + 1/r)^{a2} on (0, 1] with (a1, a2) fixed by
/// the variant: pure_log (0, 0), poly_log (alpha1, alpha2) with
/// alpha1 in (0, 2], high_intensity (2, -2).
struct KappaClass {
    KappaVariant variant = KappaVariant::pure_log;
    double alpha1 = 0.0;
    double alpha2 = 0.0;

    static KappaClass pure_log() { return {KappaVariant::pure_log, 0.0, 0.0}; }
    static KappaClass poly_log(double a1, double a2) {
        return {KappaVariant::poly_log, a1, a2};
    }
    static KappaClass high_intensity() { return {KappaVariant::high_intensity, 2.0, -2.0}; }

    double a1_eff() const { return variant == KappaVariant::pure_log ? 0.0 : alpha1; }
    double a2_eff() const { return variant == KappaVariant::pure_log ? 0.0 : alpha2; }
};

/// Raw parameters of the radial profile
///   f(s) = 1_{(0,1]}(s) kappa(s) + 1_{(1,inf)}(s) c e^{-m s^beta} s^{-delta}.
struct ProfileSpec {
    int d = 1;
    KappaClass kappa;
    double m = 0.0;
    double beta = 1.0;
    double delta = 0.0;
    /// Junction constant; unset means the continuity default kappa~(1) e^m.
    std::optional<double> c;
};

/// Validated, monotonized profile evaluator.
///
/// Construction enforces admissibility: m >= 0, beta in (0, 2], delta > d
/// when m = 0 and delta >= 0 when m > 0, 0 < c <= kappa~(1) e^m, and a finite
/// small-jump second moment (computed numerically, cached). For poly_log with
/// alpha2 < 0 the stored kappa~ is the running minimum of the raw formula in
/// the direction of increasing radius, which clips the spurious rise near
/// s = 1 and keeps kappa~ nonincreasing and comparable to the raw formula.
class Profile {
public:
    explicit Profile(const ProfileSpec& spec);

    const ProfileSpec& spec() const { return spec_; }
    int d() const { return spec_.d; }
    double m() const { return spec_.m; }
    double beta() const { return spec_.beta; }
    double delta() const { return spec_.delta; }

    /// Radius where the stored kappa~ flattens (1 when no clipping applies).
    double r_star() const { return r_star_; }
    /// Stored junction value kappa~(1).
    double kappa1() const { return kappa1_; }
    /// Resolved junction constant c.
    double c() const { return c_; }

    /// f(s) for s > 0.
    double eval(double s) const;
    /// log f(s), safe where eval underflows.
    double log_eval(double s) const;

    /// log f at s = exp(log_s). Safe for arbitrarily negative log_s, where
    /// s itself (or individual power factors) would overflow or underflow.
    double log_eval_log(double log_s) const;
    /// Stored kappa~(s) for s in (0, 1].
    double kappa(double s) const;

    /// integral_{lo}^{hi} s^p f(s) ds, hi may be +inf. Endpoint lo = 0 is
    /// handled through the log substitution (or the exact marginal transform
    /// when the power cancels the singularity); divergent requests throw
    /// numeric_error.
    double moment(double p, double lo, double hi, quad::Tol tol = {}) const;

    /// Cached omega_{d-1} * integral_0^1 s^{d+1} f(s) ds.
    double second_moment_small() const { return sigma2_small_; }

    /// Interior smoothness breakpoints of f within (lo, hi): subset of
    /// {r_star, 1}.
    std::vector<double> breakpoints(double lo, double hi) const;

private:
    double kappa_raw(double s) const;
    double moment_kappa_piece(double p, double lo, double hi, quad::Tol tol) const;
    double moment_tail_piece(double p, double lo, double hi, quad::Tol tol) const;

    ProfileSpec spec_;
    double r_star_ = 1.0;
    double kappa1_ = 0.0;
    double c_ = 0.0;
    double sigma2_small_ = 0.0;
};

/// A validated model: profile plus drift vector (length d, default zeros).
class Model {
public:
    explicit Model(const ProfileSpec& spec, std::vector<double> drift = {});

    const Profile& profile() const { return profile_; }
    int d() const { return profile_.d(); }
    const std::vector<double>& drift() const { return drift_; }

private:
    Profile profile_;
    std::vector<double> drift_;
};

/// f(s); thin named wrapper so call sites read like the operation map.
double profile_eval(const Profile& p, double s);

/// Density of the Lévy measure at a point x != 0: f(|x|).
double levy_density(const Model& model, const std::vector<double>& x);

/// nu(B(0, r)^c) = omega_{d-1} integral_r^inf f(s) s^{d-1} ds.
double tail_mass(const Model& model, double r);

/// omega_{d-1} integral_0^r s^{d+1} f(s) ds (finite by admissibility).
double small_jump_second_moment(const Model& model, double r);

} // namespace levyk::profiles
