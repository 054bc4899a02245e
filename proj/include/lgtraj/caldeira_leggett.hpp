#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
// Recoil-free, cross-term-free comparison model: a harmonic oscillator with
// position-coupled dissipation in the high-temperature, weak-damping limit.
// Everything here is in the rescaled units of the trajectory simulator.
//---------------------------------------------------------------------------//
struct CLParams
{
    double sigma_bar{}; //!< initial position spread
    double eta_bar{};   //!< dissipation rate
    double beta{};      //!< rescaled Planck constant

    void validate() const
    {
        if (!(sigma_bar > 0) || !std::isfinite(sigma_bar))
            throw ValidationError("caldeira-leggett", "sigma_bar must be positive");
        if (!(eta_bar >= 0) || !std::isfinite(eta_bar))
            throw ValidationError("caldeira-leggett", "eta_bar must be non-negative");
        if (!(beta > 0) || !std::isfinite(beta))
            throw ValidationError("caldeira-leggett", "beta must be positive");
    }
};

/*!
 * Position variance <x^2>(tau) for a zero-mean minimum-uncertainty start:
 *   sigma^2 cos^2 tau + eta beta^2 (tau - sin(2 tau)/2)
 *   + beta^2 / (4 sigma^2) sin^2 tau
 * Regular for every tau >= 0.
 */
inline double cl_variance(double tau, const CLParams& p)
{
    p.validate();
    if (!(tau >= 0))
        throw ValidationError("caldeira-leggett", "tau must be non-negative");
    const double s2 = p.sigma_bar * p.sigma_bar;
    const double c = std::cos(tau);
    const double s = std::sin(tau);
    return s2 * c * c + p.eta_bar * p.beta * p.beta * (tau - 0.5 * std::sin(2 * tau))
           + p.beta * p.beta / (4 * s2) * s * s;
}

//! Diffusion coefficients of the propagator in the relative coordinate.
struct CLCoefficients
{
    double A{};
    double B{};
    double C{};
};

//! Oscillation coefficients of the same propagator: K = (w/2) cot nu, L = w/(2 sin nu).
struct CLKernel
{
    double K{};
    double L{};
};

namespace detail
{
inline void require_regular(double nu)
{
    double s = std::sin(nu);
    if (std::abs(s) < 1e-12)
    {
        throw SingularityError("caldeira-leggett",
                               "propagator coefficients are singular at nu = "
                                   + std::to_string(nu) + " (multiple of pi)");
    }
}
} // namespace detail

inline CLCoefficients cl_coefficients(double nu, double eta, double omega_R)
{
    detail::require_regular(nu);
    const double s = std::sin(nu);
    const double s2 = s * s;
    CLCoefficients c;
    c.A = eta * (nu - std::sin(2 * nu)) / (2 * omega_R * s2);
    c.B = eta * (s - nu * std::cos(nu)) / (omega_R * s2);
    c.C = eta * (nu - 0.5 * std::sin(2 * nu)) / (2 * omega_R * s2);
    return c;
}

inline CLKernel cl_kernel(double nu, double omega_R)
{
    detail::require_regular(nu);
    return {0.5 * omega_R * std::cos(nu) / std::sin(nu),
            0.5 * omega_R / std::sin(nu)};
}

/*!
 * Same variance assembled from the propagator coefficients.
 *
 * Unbarred model: omega_R = beta, t = tau / beta, eta = eta_bar beta^3,
 * sigma = sigma_bar / beta. Propagating the initial Gaussian leaves
 * rho(X, 0) ~ exp(-Bcal X^2) in the sum coordinate with
 *   Bcal = L^2 / (4 (C + 1/(8 sigma^2) + 2 sigma^2 K^2)),
 * so <x_bar^2> = beta^2 / (8 Bcal). Singular at tau = k pi.
 */
inline double cl_variance_from_coefficients(double tau, const CLParams& p)
{
    p.validate();
    const double omega = p.beta;
    const double nu = tau; // nu = omega_R t = tau
    const double eta = p.eta_bar * p.beta * p.beta * p.beta;
    const double sigma = p.sigma_bar / p.beta;
    CLCoefficients c = cl_coefficients(nu, eta, omega);
    CLKernel k = cl_kernel(nu, omega);
    const double denom = c.C + 1 / (8 * sigma * sigma) + 2 * sigma * sigma * k.K * k.K;
    const double bcal = k.L * k.L / (4 * denom);
    return p.beta * p.beta / (8 * bcal);
}

} // namespace lgtraj
