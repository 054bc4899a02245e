#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "log.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
/*!
 * Dimensionless control set of the rescaled master equation.
 *
 * - beta: rescaled Planck constant, [X, P] = i beta
 * - eta: dissipation rate
 * - mu: recoil wavenumber in units of the length scale; a photon kick
 *   shifts the momentum by mu * beta
 */
class DimensionlessParams
{
  public:
    DimensionlessParams(double beta, double eta, double mu)
        : beta_(beta), eta_(eta), mu_(mu)
    {
        if (!(beta > 0) || !std::isfinite(beta))
            throw ValidationError("params", "beta must be positive and finite");
        if (!(eta >= 0) || !std::isfinite(eta))
            throw ValidationError("params", "eta must be non-negative and finite");
        if (!(mu >= 0) || !std::isfinite(mu))
            throw ValidationError("params", "mu must be non-negative and finite");
    }

    double beta() const { return beta_; }
    double eta() const { return eta_; }
    double mu() const { return mu_; }

    //! delta = i beta eta
    std::complex<double> delta() const { return {0.0, beta_ * eta_}; }

    //! Momentum shift of a single photon kick along the kick direction.
    double kick() const { return mu_ * beta_; }

  private:
    double beta_;
    double eta_;
    double mu_;
};

//! Pass-through constructor for figure-reproduction parameter sets.
inline DimensionlessParams direct(double beta, double eta, double mu)
{
    return {beta, eta, mu};
}

//---------------------------------------------------------------------------//
// Physical parameter path
//---------------------------------------------------------------------------//
namespace constants
{
inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double two_pi = 2 * std::numbers::pi;
} // namespace constants

//! SI inputs of a two-level atom in a Laguerre-Gaussian (l=1) beam.
struct PhysicalParams
{
    double mass{};       //!< kg
    double wavelength{}; //!< m
    double linewidth{};  //!< Gamma, rad/s
    double detuning{};   //!< Delta, rad/s
    double rabi{};       //!< Omega_0, rad/s
    double waist{};      //!< m
    double beta{};       //!< chosen rescaled Planck constant
};

//! Values the user expects; compared against derived quantities.
struct ExpectedScales
{
    std::optional<double> omega_s_hz;
    std::optional<double> eta;
    std::optional<double> mu;
};

struct DerivedScales
{
    double wavenumber{}; //!< k = 2 pi / lambda
    double nu2{};        //!< |nu|^2 = 1 + Gamma^2 / (2 Delta^2)
    double omega_s{};    //!< orbital frequency, rad/s
    double alpha_x{};    //!< length scale, m
    double alpha_p{};    //!< momentum scale, kg m/s
    double eta{};
    double mu{};
    double recoil_dp{}; //!< recoil-limited momentum spread, dimensionless
    double recoil_dx{}; //!< matching minimum-uncertainty position spread

    double omega_s_hz() const { return omega_s / constants::two_pi; }
};

struct DerivationReport
{
    DerivedScales scales;
    std::vector<std::string> diagnostics;
};

namespace detail
{
inline std::string fmt_num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline void compare_expected(std::vector<std::string>& out,
                             const char* name,
                             double derived,
                             std::optional<double> expected)
{
    if (!expected)
        return;
    double rel = (derived - *expected) / *expected;
    std::ostringstream os;
    os << name << ": derived " << fmt_num(derived) << " vs supplied "
       << fmt_num(*expected) << " (ratio " << fmt_num(derived / *expected)
       << ")";
    if (std::abs(rel) > 0.05)
        os << " INCONSISTENT";
    else
        os << " consistent within 5%";
    out.push_back(os.str());
}
} // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Convert physical parameters into the dimensionless scales.
 *
 * Regime violations (Delta < Gamma, Delta < Omega_0) are reported as
 * diagnostics and warnings; they are not rejected.
 */
inline DerivationReport
derive(const PhysicalParams& p, const ExpectedScales& expected = {})
{
    auto require_positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v))
            throw ValidationError("params",
                                  std::string(name) + " must be positive");
    };
    require_positive(p.mass, "mass");
    require_positive(p.wavelength, "wavelength");
    require_positive(p.linewidth, "linewidth");
    require_positive(p.detuning, "detuning");
    require_positive(p.rabi, "rabi");
    require_positive(p.waist, "waist");
    require_positive(p.beta, "beta");

    using constants::hbar;
    DerivationReport report;
    DerivedScales& s = report.scales;

    s.wavenumber = constants::two_pi / p.wavelength;
    s.nu2 = 1 + p.linewidth * p.linewidth / (2 * p.detuning * p.detuning);
    double omega2 = 2 * hbar * p.rabi * p.rabi
                    / (p.mass * p.detuning * s.nu2 * p.waist * p.waist);
    s.omega_s = std::sqrt(omega2);
    s.alpha_x = std::sqrt(hbar / (p.beta * p.mass * s.omega_s));
    s.alpha_p = std::sqrt(hbar * p.mass * s.omega_s / p.beta);
    s.eta = p.linewidth / (4 * p.detuning * p.beta);
    s.mu = s.wavenumber * s.alpha_x;
    s.recoil_dp = std::sqrt(p.beta)
                  * std::sqrt(hbar * s.wavenumber * s.wavenumber
                              / (p.mass * s.omega_s));
    s.recoil_dx = p.beta / (2 * s.recoil_dp);

    auto& diag = report.diagnostics;
    if (p.detuning < p.linewidth)
    {
        diag.push_back("regime: detuning < linewidth; large-detuning "
                       "elimination is not justified");
    }
    if (p.detuning < p.rabi)
    {
        diag.push_back("regime: detuning < Rabi frequency; large-detuning "
                       "elimination is not justified");
    }
    for (const auto& d : diag)
        warn(d);

    detail::compare_expected(diag, "omega_s/2pi [Hz]", s.omega_s_hz(),
                             expected.omega_s_hz);
    detail::compare_expected(diag, "eta = Gamma/(4 Delta beta)", s.eta,
                             expected.eta);
    detail::compare_expected(diag, "mu = k alpha_x", s.mu, expected.mu);
    if (expected.mu)
    {
        detail::compare_expected(diag, "recoil kick mu*beta vs supplied mu*beta",
                                 s.recoil_dp, *expected.mu * p.beta);
    }
    if (expected.omega_s_hz)
    {
        // omega_s^2 is inversely proportional to the mass.
        double target = *expected.omega_s_hz * constants::two_pi;
        double implied_mass = p.mass * omega2 / (target * target);
        diag.push_back("mass implied by supplied omega_s: "
                       + detail::fmt_num(implied_mass) + " kg (given "
                       + detail::fmt_num(p.mass) + " kg)");
    }
    return report;
}

//! Dimensionless set implied by a physical derivation.
inline DimensionlessParams to_dimensionless(const PhysicalParams& p,
                                            const DerivedScales& s)
{
    return {p.beta, s.eta, s.mu};
}

//! Human-readable rendering of a derivation.
inline std::string format_report(const PhysicalParams& p,
                                 const DerivationReport& r)
{
    using detail::fmt_num;
    const auto& s = r.scales;
    std::ostringstream os;
    os << "inputs:\n"
       << "  mass          " << fmt_num(p.mass) << " kg\n"
       << "  wavelength    " << fmt_num(p.wavelength) << " m\n"
       << "  Gamma/2pi     " << fmt_num(p.linewidth / constants::two_pi)
       << " Hz\n"
       << "  Delta/2pi     " << fmt_num(p.detuning / constants::two_pi)
       << " Hz\n"
       << "  Omega0/2pi    " << fmt_num(p.rabi / constants::two_pi) << " Hz\n"
       << "  waist         " << fmt_num(p.waist) << " m\n"
       << "  beta          " << fmt_num(p.beta) << "\n"
       << "derived:\n"
       << "  |nu|^2        " << fmt_num(s.nu2) << "\n"
       << "  omega_s/2pi   " << fmt_num(s.omega_s_hz()) << " Hz\n"
       << "  alpha_x       " << fmt_num(s.alpha_x) << " m\n"
       << "  alpha_p       " << fmt_num(s.alpha_p) << " kg m/s\n"
       << "  eta           " << fmt_num(s.eta) << "\n"
       << "  mu            " << fmt_num(s.mu) << "\n"
       << "  mu*beta       " << fmt_num(s.mu * p.beta) << "\n"
       << "  dP_recoil     " << fmt_num(s.recoil_dp) << "\n"
       << "  dX_recoil     " << fmt_num(s.recoil_dx) << "\n";
    os << "diagnostics:\n";
    if (r.diagnostics.empty())
        os << "  none\n";
    for (const auto& d : r.diagnostics)
        os << "  " << d << "\n";
    return os.str();
}

} // namespace lgtraj
