#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "levyk/profiles.hpp"
#include "levyk/report.hpp"

namespace levyk::exponent {

/// Real part of the characteristic (Lévy–Khintchine) exponent at radial
/// frequency rho >= 0:
///
///   re_phi(rho) = integral over R^d of (1 - cos<xi, y>) f(|y|) dy,  |xi| = rho,
///
/// reduced to the radial integral  int_0^inf f(s) s^{d-1} A_d(rho s) ds with
///   A_1(u) = 2 (1 - cos u),
///   A_2(u) = 2 pi (1 - J0(u)),
///   A_3(u) = 4 pi (1 - sin(u)/u).
///
/// The integrand is split at s_c = u_c / rho: below it A_d is evaluated by its
/// (alternating, rapidly convergent) power series so the difference never
/// cancels; above it the constant part of A_d integrates against the profile
/// moment and the oscillatory remainder goes through dedicated oscillatory
/// quadrature (for d = 2 the Bessel weight is decomposed into slowly varying
/// modulus functions times cos/sin).
double re_phi(const profiles::Model& model, double rho);

/// Same exponent for the measure truncated to jumps |y| <= radius.
double re_phi_truncated(const profiles::Model& model, double radius, double rho);

/// Scalar radial exponent function. Tables can be built either from a Model
/// or from any user-supplied radial exponent (e.g. closed-form reference
/// exponents), so everything downstream of the table is shared.
using RadialExponent = std::function<double(double)>;

/// Log-log sampled table of re_phi over [rho_lo, rho_hi] plus its running
/// maximum Psi(rho) = sup_{q <= rho} re_phi(q). Provides monotone
/// interpolation, the rightmost generalized inverse of Psi, and the time
/// scale function h(t) = 1 / Psi^{-1}(1/t).
class ExponentTable {
public:
    ExponentTable(const profiles::Model& model, double rho_lo = 1e-3,
                  double rho_hi = 1e7, int n = 2048);
    ExponentTable(const RadialExponent& fn, int d, double rho_lo = 1e-3,
                  double rho_hi = 1e7, int n = 2048);
    ~ExponentTable();
    ExponentTable(ExponentTable&&) noexcept;
    ExponentTable& operator=(ExponentTable&&) noexcept;
    ExponentTable(const ExponentTable&) = delete;
    ExponentTable& operator=(const ExponentTable&) = delete;

    int d() const { return d_; }
    double rho_lo() const { return rhos_.front(); }
    double rho_hi() const { return rhos_.back(); }
    const std::vector<double>& rhos() const { return rhos_; }
    const std::vector<double>& re_phis() const { return phis_; }
    const std::vector<double>& psis() const { return psis_; }

    /// Interpolated re_phi inside the table range; power-law continuation of
    /// the first/last fitted decade outside it.
    double re_phi_at(double rho) const;

    /// Running maximum Psi evaluated like re_phi_at.
    double psi(double rho) const;

    /// Rightmost rho with Psi(rho) = value (generalized inverse; flats resolve
    /// to their right edge). Uses the fitted endpoint behavior outside the
    /// tabulated Psi range; for tables whose high end grows logarithmically in
    /// rho the log-growth fit is inverted instead of the power law.
    double psi_inverse(double value) const;

    /// h(t) = 1 / psi_inverse(1/t), the space scale matched to time t.
    double h(double t) const;

    /// d log Psi / d log rho fitted over the top decade of the table.
    double tail_power_slope() const;
    /// Same fit one decade earlier (used to detect slopes decaying to zero).
    double prev_power_slope() const;
    /// B in Psi ~ B log rho + const fitted over the top decade.
    double tail_log_coeff() const;
    /// True when the top-decade behavior looks logarithmic rather than
    /// power-like (the local log-log slope decays decade over decade).
    bool log_type_tail() const;

private:
    void finish_build();

    int d_ = 1;
    std::vector<double> rhos_, phis_, psis_;
    std::vector<double> log_rhos_, log_psis_;
    double slope_lo_ = 2.0, slope_hi_ = 0.0, prev_slope_hi_ = 0.0;
    double log_coeff_hi_ = 0.0, log_offset_hi_ = 0.0;
    struct Interp;
    std::unique_ptr<Interp> interp_;
};

/// Finiteness of  int e^{-t re_phi(xi)} |xi| d xi  at a given time t.
/// Power-type growth of the exponent makes the integral finite for every t;
/// logarithmic growth B log rho makes it finite iff t B > d + 1.
report::ConditionReport check_fourier_integrability(const ExponentTable& table, double t);

/// Profile/exponent comparability near the origin: f(r) r^d / Psi(1/r) must
/// stay bounded as r -> 0. Probed on r in [1e-8 r0, 2 r0].
report::ConditionReport check_profile_psi_bound(const profiles::Model& model,
                                                const ExponentTable& table,
                                                double r0 = 1.0);

/// Weak lower scaling of Psi at infinity: the fitted local power slope over
/// the top decades must stay bounded away from zero (slopes decaying like
/// 1/log rho indicate purely logarithmic growth and fail).
report::ConditionReport check_weak_scaling(const ExponentTable& table,
                                           double alpha_min = 0.05);

} // namespace levyk::exponent
