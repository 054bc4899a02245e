#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fock2d.hpp"
#include "params.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
//! Unit vector of a spontaneously emitted photon.
struct EmissionDirection
{
    double theta{};
    double phi{};
    double eps_x{};
    double eps_y{};
    double eps_z{1};

    static EmissionDirection from_angles(double theta, double phi)
    {
        EmissionDirection d;
        d.theta = theta;
        d.phi = phi;
        d.eps_x = std::sin(theta) * std::cos(phi);
        d.eps_y = std::sin(theta) * std::sin(phi);
        d.eps_z = std::cos(theta);
        return d;
    }
};

/*!
 * Inverse CDF of the polar angle for the circular-polarization dipole
 * pattern (3/16pi)(1 + cos^2 theta).
 *
 * Solves cos^3 + 3 cos - 4 + 8 eps = 0 by Cardano's formula:
 * cos theta = u^{1/3} - u^{-1/3}, u = 2 - 4 eps + sqrt(5 - 16 eps + 16 eps^2).
 */
inline double polar_angle_from_uniform(double eps)
{
    // The pattern is symmetric about pi/2; working with q >= 0 avoids the
    // cancellation in u for eps near 1.
    if (eps > 0.5)
        return std::numbers::pi - polar_angle_from_uniform(1 - eps);
    double q = 2 - 4 * eps;
    double w = std::cbrt(q + std::sqrt(q * q + 1));
    double c = w - 1 / w;
    // One Newton step on c^3 + 3c = 2q cleans up the last ulps.
    c -= (c * c * c + 3 * c - 2 * q) / (3 * c * c + 3);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

//! Direction from two uniforms: eps for theta, v for phi = 2 pi v.
inline EmissionDirection direction_from_uniforms(double eps, double v)
{
    return EmissionDirection::from_angles(polar_angle_from_uniform(eps),
                                          2 * std::numbers::pi * v);
}

//! Dipole-pattern density of theta, (3/8)(1 + cos^2) sin.
inline double polar_angle_pdf(double theta)
{
    double c = std::cos(theta);
    return 0.375 * (1 + c * c) * std::sin(theta);
}

//! CDF of theta for the same pattern.
inline double polar_angle_cdf(double theta)
{
    double c = std::cos(theta);
    return 0.375 * ((1 - c) + (1 - c * c * c) / 3);
}

template<class Stream>
EmissionDirection sample_direction(Stream& rng)
{
    double eps = rng.uniform();
    double v = rng.uniform();
    return direction_from_uniforms(eps, v);
}

//---------------------------------------------------------------------------//
// Jump matrix elements
//---------------------------------------------------------------------------//
/*!
 * Displacement matrix G(m, n, b) = <m| exp(i b x) |n> for m, n < size.
 *
 * With kappa = b sqrt(beta/2):
 *   G = sqrt(n>!/n<!) e^{-kappa^2/2}
 *       sum_{j=0}^{n<} C(n<, j) (i kappa)^{n> + n< - 2j} / (n> - j)!
 * Each term is formed as a log-magnitude with a separate sign and power of i.
 * kappa = 0 gives the identity exactly.
 */
inline ComplexMatrix displacement_matrix(double b, double beta, std::size_t size)
{
    if (!std::isfinite(b))
        throw ValidationError("recoil-jump", "kick wavenumber must be finite");
    ComplexMatrix g = ComplexMatrix::Zero(size, size);
    const double kappa = b * std::sqrt(beta / 2);
    if (kappa == 0)
    {
        g.setIdentity();
        return g;
    }
    std::vector<double> lf(2 * size + 2);
    for (std::size_t k = 0; k < lf.size(); ++k)
        lf[k] = std::lgamma(double(k) + 1);
    const double log_k = std::log(std::abs(kappa));
    const bool negative = kappa < 0;
    const double gauss = -kappa * kappa / 2;
    static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

    for (std::size_t m = 0; m < size; ++m)
    {
        for (std::size_t n = 0; n < size; ++n)
        {
            const std::size_t hi = std::max(m, n);
            const std::size_t lo = std::min(m, n);
            const double pre = 0.5 * (lf[hi] - lf[lo]) + gauss;
            cplx sum = 0;
            for (std::size_t j = 0; j <= lo; ++j)
            {
                const std::size_t p = hi + lo - 2 * j;
                double logmag = pre + lf[lo] - lf[j] - lf[lo - j] - lf[hi - j]
                                + double(p) * log_k;
                double mag = std::exp(logmag);
                if (negative && (p % 2 == 1))
                    mag = -mag;
                sum += mag * ipow[p % 4];
            }
            g(m, n) = sum;
        }
    }
    return g;
}

namespace detail
{
//! F from an (N+1)-extended G via x = sqrt(beta/2)(a + a^dag).
inline ComplexMatrix
kick_position_from_displacement(const ComplexMatrix& g_ext, double beta, std::size_t n)
{
    ComplexMatrix f(n, n);
    const double c = std::sqrt(beta / 2);
    for (std::size_t m = 0; m < n; ++m)
    {
        for (std::size_t k = 0; k < n; ++k)
        {
            cplx v = std::sqrt(double(m + 1)) * g_ext(m + 1, k);
            if (m > 0)
                v += std::sqrt(double(m)) * g_ext(m - 1, k);
            f(m, k) = c * v;
        }
    }
    return f;
}
} // namespace detail

/*!
 * F(m, n, b) = <m| x exp(i b x) |n>, from the ladder identity
 * F(m, n) = sqrt(beta/2) [sqrt(m+1) G(m+1, n) + sqrt(m) G(m-1, n)].
 */
inline ComplexMatrix kick_position_matrix(double b, double beta, std::size_t size)
{
    ComplexMatrix g = displacement_matrix(b, beta, size + 1);
    return detail::kick_position_from_displacement(g, beta, size);
}

//---------------------------------------------------------------------------//
//! Per-mode kick parameters of one emission event.
struct JumpKick
{
    double mu{};
    EmissionDirection direction;
    double kappa_x{};
    double kappa_y{};

    static JumpKick make(double mu, const EmissionDirection& dir, double beta)
    {
        JumpKick k;
        k.mu = mu;
        k.direction = dir;
        k.kappa_x = mu * dir.eps_x * std::sqrt(beta / 2);
        k.kappa_y = mu * dir.eps_y * std::sqrt(beta / 2);
        return k;
    }

    double b_x() const { return mu * direction.eps_x; }
    double b_y() const { return mu * direction.eps_y; }
};

struct JumpMatrices
{
    ComplexMatrix gx, gy; //!< N x N displacement blocks
    ComplexMatrix fx, fy; //!< N x N position-times-displacement blocks
};

inline JumpMatrices build_jump_matrices(const JumpKick& kick, double beta, std::size_t n)
{
    JumpMatrices jm;
    ComplexMatrix gx_ext = displacement_matrix(kick.b_x(), beta, n + 1);
    ComplexMatrix gy_ext = displacement_matrix(kick.b_y(), beta, n + 1);
    jm.fx = detail::kick_position_from_displacement(gx_ext, beta, n);
    jm.fy = detail::kick_position_from_displacement(gy_ext, beta, n);
    jm.gx = gx_ext.topLeftCorner(n, n);
    jm.gy = gy_ext.topLeftCorner(n, n);
    return jm;
}

//! Smallest post-jump norm^2 accepted before renormalization.
inline constexpr double degenerate_jump_threshold = 1e-12;

/*!
 * Apply (X + iY) exp(i mu (eps_x X + eps_y Y)) and renormalize.
 *
 * B = Fx A Gy^T + i Gx A Fy^T. The sqrt(eta Phi) prefactor of the jump
 * operator is dropped; renormalization absorbs it.
 */
inline TruncatedState apply_jump(const TruncatedState& state, const JumpKick& kick)
{
    if (!(state.norm2() > 0))
        throw InvalidStateError("recoil-jump", "cannot jump a zero-norm state");
    const auto n = state.cutoff();
    JumpMatrices jm = build_jump_matrices(kick, state.beta(), n);
    const ComplexMatrix& a = state.coeffs();
    ComplexMatrix b = jm.fx * a * jm.gy.transpose()
                      + cplx(0, 1) * (jm.gx * a * jm.fy.transpose());
    double n2 = b.squaredNorm() / state.norm2();
    if (!(n2 > degenerate_jump_threshold))
    {
        throw DegenerateJumpError("recoil-jump",
                                  "post-jump norm^2 " + std::to_string(n2)
                                      + " below threshold");
    }
    return TruncatedState(std::move(b), state.beta()).normalized();
}

} // namespace lgtraj
