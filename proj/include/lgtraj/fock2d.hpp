#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"
#include "log.hpp"
#include "params.hpp"

namespace lgtraj
{
using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

//---------------------------------------------------------------------------//
/*!
 * Pure state of the two-mode oscillator in a truncated Fock basis.
 *
 * Coefficient A(nx, ny) multiplies |nx, ny>, with 0 <= nx, ny < cutoff.
 * The norm is not forced to one: between jumps the trajectory engine keeps
 * the decaying norm because it encodes the no-jump probability.
 */
class TruncatedState
{
  public:
    TruncatedState(ComplexMatrix coeffs, double beta)
        : coeffs_(std::move(coeffs)), beta_(beta)
    {
        if (coeffs_.rows() != coeffs_.cols() || coeffs_.rows() < 1)
            throw ValidationError("fock2d", "coefficients must be square");
        if (!(beta > 0))
            throw ValidationError("fock2d", "beta must be positive");
        if (!coeffs_.allFinite())
            throw InvalidStateError("fock2d", "non-finite coefficients");
    }

    static TruncatedState vacuum(std::size_t cutoff, double beta)
    {
        return number(0, 0, cutoff, beta);
    }

    static TruncatedState
    number(std::size_t nx, std::size_t ny, std::size_t cutoff, double beta)
    {
        if (nx >= cutoff || ny >= cutoff)
            throw ValidationError("fock2d", "number state outside cutoff");
        ComplexMatrix a = ComplexMatrix::Zero(cutoff, cutoff);
        a(nx, ny) = 1.0;
        return {std::move(a), beta};
    }

    std::size_t cutoff() const { return static_cast<std::size_t>(coeffs_.rows()); }
    double beta() const { return beta_; }
    const ComplexMatrix& coeffs() const { return coeffs_; }

    double norm2() const { return coeffs_.squaredNorm(); }

    TruncatedState normalized() const
    {
        double n2 = norm2();
        if (!(n2 > 0) || !std::isfinite(n2))
            throw InvalidStateError("fock2d", "cannot normalize a zero-norm state");
        return {coeffs_ / std::sqrt(n2), beta_};
    }

    /*!
     * Probability in the outermost shells (nx or ny >= cutoff - shells) of
     * the normalized state. Used as a truncation sentinel.
     */
    double top_shell_probability(std::size_t shells = 2) const
    {
        auto n = cutoff();
        shells = std::min(shells, n);
        auto inner = n - shells;
        double total = norm2();
        if (!(total > 0))
            throw InvalidStateError("fock2d", "zero-norm state");
        double outside = coeffs_.rightCols(shells).squaredNorm()
                         + coeffs_.bottomLeftCorner(shells, inner).squaredNorm();
        return outside / total;
    }

  private:
    ComplexMatrix coeffs_;
    double beta_;
};

//---------------------------------------------------------------------------//
// Single-mode operator matrices
//---------------------------------------------------------------------------//
//! Annihilation operator on levels 0..n-1: a(m, m+1) = sqrt(m+1).
inline RealMatrix lowering_matrix(std::size_t n)
{
    RealMatrix a = RealMatrix::Zero(n, n);
    for (std::size_t m = 0; m + 1 < n; ++m)
        a(m, m + 1) = std::sqrt(double(m + 1));
    return a;
}

//! X = sqrt(beta/2) (a + a^dagger) on levels 0..n-1.
inline RealMatrix position_matrix(std::size_t n, double beta)
{
    RealMatrix a = lowering_matrix(n);
    return std::sqrt(beta / 2) * (a + a.transpose());
}

//! P = i sqrt(beta/2) (a^dagger - a) on levels 0..n-1.
inline ComplexMatrix momentum_matrix(std::size_t n, double beta)
{
    RealMatrix a = lowering_matrix(n);
    RealMatrix d = a.transpose() - a;
    return cplx(0, std::sqrt(beta / 2)) * d.cast<cplx>();
}

//---------------------------------------------------------------------------//
// Observables
//---------------------------------------------------------------------------//
//! First and second moments of the tracked observables.
struct Moments
{
    double x{}, y{}, px{}, py{}, L{};
    double x2{}, y2{}, px2{}, py2{}, L2{};
    //! Imaginary part of <L>; zero to round-off for a Hermitian L.
    double L_imag{};
};

struct ObservableRecord
{
    double tau{};
    double mean_x{}, mean_y{}, mean_px{}, mean_py{};
    double var_x{}, var_y{}, var_px{}, var_py{};
    double mean_L{}, mean_L2{}, var_L{};
    long long jump_count{};
};

namespace detail
{
//! Embed A into an (N+1)x(N+1) zero-padded matrix.
inline ComplexMatrix padded(const ComplexMatrix& a)
{
    auto n = a.rows();
    ComplexMatrix p = ComplexMatrix::Zero(n + 1, n + 1);
    p.topLeftCorner(n, n) = a;
    return p;
}

inline double inner_real(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a.conjugate().cwiseProduct(b)).sum().real();
}
} // namespace detail

/*!
 * Moments of a state, computed on a normalized copy.
 *
 * Operators act on an (N+1)-padded copy of the coefficients so that a single
 * raising step out of the cutoff is retained. The second moments are then
 * the exact <psi|O^2|psi> of the truncated state, which keeps every variance
 * non-negative.
 */
inline Moments moments(const TruncatedState& state)
{
    TruncatedState s = state.normalized();
    const double beta = s.beta();
    const auto n = s.cutoff() + 1;
    const double c = std::sqrt(beta / 2);

    ComplexMatrix psi = detail::padded(s.coeffs());
    ComplexMatrix a = lowering_matrix(n).cast<cplx>();
    ComplexMatrix ad = a.transpose();

    // Row index is x, column index is y: O_x psi = O psi, O_y psi = psi O^T.
    ComplexMatrix x_psi = c * ((a + ad) * psi);
    ComplexMatrix y_psi = c * (psi * (a + ad).transpose());
    ComplexMatrix px_psi = cplx(0, c) * ((ad - a) * psi);
    ComplexMatrix py_psi = cplx(0, c) * (psi * (ad - a).transpose());

    // L = X P_y - P_x Y = i beta (a_x a_y^dagger - a_x^dagger a_y)
    ComplexMatrix L_psi
        = cplx(0, beta) * (a * psi * ad.transpose() - ad * psi * a.transpose());

    Moments m;
    m.x = detail::inner_real(psi, x_psi);
    m.y = detail::inner_real(psi, y_psi);
    m.px = detail::inner_real(psi, px_psi);
    m.py = detail::inner_real(psi, py_psi);
    cplx lval = (psi.conjugate().cwiseProduct(L_psi)).sum();
    m.L = lval.real();
    m.L_imag = lval.imag();
    m.x2 = x_psi.squaredNorm();
    m.y2 = y_psi.squaredNorm();
    m.px2 = px_psi.squaredNorm();
    m.py2 = py_psi.squaredNorm();
    m.L2 = L_psi.squaredNorm();
    return m;
}

inline ObservableRecord to_record(const Moments& m, double tau = 0.0)
{
    ObservableRecord r;
    r.tau = tau;
    r.mean_x = m.x;
    r.mean_y = m.y;
    r.mean_px = m.px;
    r.mean_py = m.py;
    r.var_x = m.x2 - m.x * m.x;
    r.var_y = m.y2 - m.y * m.y;
    r.var_px = m.px2 - m.px * m.px;
    r.var_py = m.py2 - m.py * m.py;
    r.mean_L = m.L;
    r.mean_L2 = m.L2;
    r.var_L = m.L2 - m.L * m.L;
    return r;
}

//! Means and variances of X, Y, P_x, P_y and L on the normalized state.
inline ObservableRecord expectations(const TruncatedState& state)
{
    return to_record(moments(state));
}

//---------------------------------------------------------------------------//
// Coherent states
//---------------------------------------------------------------------------//
//! Largest tolerated norm deficit of a truncated coherent state.
inline constexpr double coherent_truncation_tolerance = 1e-4;

namespace detail
{
//! Per-mode coherent coefficients exp(-|alpha|^2/2) alpha^n / sqrt(n!).
inline Eigen::VectorXcd coherent_mode(cplx alpha, std::size_t n)
{
    Eigen::VectorXcd c(n);
    c(0) = std::exp(-std::norm(alpha) / 2);
    for (std::size_t k = 1; k < n; ++k)
        c(k) = c(k - 1) * alpha / std::sqrt(double(k));
    return c;
}
} // namespace detail

/*!
 * Product coherent state centered at (x0, y0) with mean momenta (px0, py0).
 *
 * Each mode has alpha = (q + i p) / sqrt(2 beta). A norm deficit above
 * coherent_truncation_tolerance is rejected; otherwise the state is
 * renormalized.
 */
inline TruncatedState make_coherent(double x0,
                                    double y0,
                                    double px0,
                                    double py0,
                                    const DimensionlessParams& params,
                                    std::size_t cutoff)
{
    if (cutoff < 2)
        throw ValidationError("fock2d", "cutoff must be at least 2");
    const double beta = params.beta();
    const double scale = 1 / std::sqrt(2 * beta);
    cplx ax(x0 * scale, px0 * scale);
    cplx ay(y0 * scale, py0 * scale);
    for (double a2 : {std::norm(ax), std::norm(ay)})
    {
        if (a2 > cutoff / 4.0)
        {
            warn("coherent amplitude |alpha|^2 = " + std::to_string(a2)
                 + " is large for cutoff " + std::to_string(cutoff));
        }
    }
    Eigen::VectorXcd cx = detail::coherent_mode(ax, cutoff);
    Eigen::VectorXcd cy = detail::coherent_mode(ay, cutoff);
    ComplexMatrix coeffs = cx * cy.transpose();
    double deficit = 1 - coeffs.squaredNorm();
    if (deficit > coherent_truncation_tolerance)
    {
        throw TruncationError("fock2d",
                              "coherent state norm deficit "
                                  + std::to_string(deficit) + " exceeds "
                                  + std::to_string(coherent_truncation_tolerance)
                                  + " at cutoff " + std::to_string(cutoff));
    }
    return TruncatedState(std::move(coeffs), beta).normalized();
}

//---------------------------------------------------------------------------//
// Position-space density
//---------------------------------------------------------------------------//
//! Uniform rectangular sample grid (inclusive end points).
struct Grid
{
    double x_min{-3}, x_max{3};
    std::size_t nx{61};
    double y_min{-3}, y_max{3};
    std::size_t ny{61};

    double x(std::size_t i) const
    {
        return nx == 1 ? x_min : x_min + (x_max - x_min) * double(i) / double(nx - 1);
    }
    double y(std::size_t j) const
    {
        return ny == 1 ? y_min : y_min + (y_max - y_min) * double(j) / double(ny - 1);
    }
    double dx() const { return nx > 1 ? (x_max - x_min) / double(nx - 1) : 0.0; }
    double dy() const { return ny > 1 ? (y_max - y_min) / double(ny - 1) : 0.0; }

    void validate() const
    {
        if (nx < 1 || ny < 1 || !std::isfinite(x_min) || !std::isfinite(x_max)
            || !std::isfinite(y_min) || !std::isfinite(y_max) || x_max < x_min
            || y_max < y_min)
        {
            throw ValidationError("fock2d", "invalid density grid");
        }
    }
};

/*!
 * Oscillator eigenfunctions psi_n(q_i) for n < levels, as a matrix with one
 * row per sample point. Uses the normalized three-term recurrence.
 */
inline RealMatrix
oscillator_functions(const Eigen::VectorXd& q, std::size_t levels, double beta)
{
    RealMatrix f(q.size(), levels);
    const double norm0 = std::pow(std::numbers::pi * beta, -0.25);
    for (Eigen::Index i = 0; i < q.size(); ++i)
    {
        double s = q(i) / std::sqrt(beta);
        double prev = 0;
        double cur = norm0 * std::exp(-s * s / 2);
        f(i, 0) = cur;
        for (std::size_t n = 1; n < levels; ++n)
        {
            double next = std::sqrt(2.0 / n) * s * cur
                          - std::sqrt((n - 1.0) / n) * prev;
            prev = cur;
            cur = next;
            f(i, n) = cur;
        }
    }
    return f;
}

//! |psi(x, y)|^2 of the normalized state sampled on a grid (rows: x).
inline RealMatrix position_density(const TruncatedState& state, const Grid& grid)
{
    grid.validate();
    TruncatedState s = state.normalized();
    Eigen::VectorXd xs(grid.nx), ys(grid.ny);
    for (std::size_t i = 0; i < grid.nx; ++i)
        xs(i) = grid.x(i);
    for (std::size_t j = 0; j < grid.ny; ++j)
        ys(j) = grid.y(j);
    RealMatrix fx = oscillator_functions(xs, s.cutoff(), s.beta());
    RealMatrix fy = oscillator_functions(ys, s.cutoff(), s.beta());
    ComplexMatrix amp = fx.cast<cplx>() * s.coeffs() * fy.transpose().cast<cplx>();
    return amp.cwiseAbs2();
}

} // namespace lgtraj
