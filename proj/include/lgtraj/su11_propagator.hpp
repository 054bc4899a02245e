#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "fock2d.hpp"
#include "params.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
/*!
 * Normal-ordering coefficients of the per-mode non-unitary propagator.
 *
 * For the generator H = a0 K0 + a+ K+ + a- K- with K0 = (a^dag a + 1/2)/2,
 * K+ = a^dag^2/2, K- = a^2/2 and
 *   a0 = -2 i tau (1 - delta),   a+ = a- = i tau delta,
 * the operator exp(H) equals exp(g+ K+) exp(g0 K0) exp(g- K-).
 */
struct DisentangledCoeffs
{
    double tau{};
    cplx delta{};
    cplx a_zero{}, a_plus{}, a_minus{};
    //! gamma^2 = a0^2/4 - a+ a- = -tau^2 (1 - 2 delta); stored as the
    //! rotation angle tau sqrt(1 - 2 delta), principal root (Re >= 0)
    cplx gamma{};
    cplx g_plus{}, g_zero{}, g_minus{};
};

namespace detail
{
//! sin(z)/z, regular at zero.
inline cplx sinc(cplx z)
{
    if (std::abs(z) < 1e-4)
    {
        cplx z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

} // namespace detail

/*!
 * Disentangle the per-mode propagator for time tau.
 *
 * With [K-, K+] = 2 K0 and [K0, K+-] = +-K+- the flow equations are
 *   g-' = a- e^{g0},  g0' = a0 + 2 a- g+,  g+' = a+ + a0 g+ + a- g+^2,
 * solved by D = cos(phi) - (a0/2) sinc(phi), phi = tau sqrt(1 - 2 delta):
 *   e^{g0} = D^{-2},  g+- = a+- sinc(phi) / D.
 * ln D is taken on the branch continuous from tau = 0, where D(0) = 1. The
 * phase of D is unwrapped by stepping in tau; this matters because
 * exp(g0 n / 2) distinguishes odd and even levels.
 */
inline DisentangledCoeffs disentangle(double tau, cplx delta)
{
    if (!(tau >= 0) || !std::isfinite(tau))
        throw ValidationError("su11-propagator", "tau must be non-negative");

    DisentangledCoeffs c;
    c.tau = tau;
    c.delta = delta;
    c.a_zero = cplx(0, -2 * tau) * (1.0 - delta);
    c.a_plus = cplx(0, tau) * delta;
    c.a_minus = c.a_plus;
    cplx root = std::sqrt(1.0 - 2.0 * delta);
    if (root.real() < 0)
        root = -root;
    c.gamma = tau * root;
    if (tau == 0)
        return c;

    auto denom = [&](double s) {
        cplx phi = s * root;
        cplx a0 = cplx(0, -2 * s) * (1.0 - delta);
        return std::cos(phi) - 0.5 * a0 * detail::sinc(phi);
    };

    // Unwrap arg D(s) on [0, tau]. |d arg D / ds| is about 1 for small
    // |delta|; steps of 0.05 keep increments far below pi. Refine if not.
    std::size_t steps = static_cast<std::size_t>(std::ceil(tau / 0.05));
    steps = std::max<std::size_t>(steps, 1);
    double phase = 0;
    for (int attempt = 0;; ++attempt)
    {
        phase = 0;
        cplx prev = 1.0;
        bool ok = true;
        for (std::size_t i = 1; i <= steps; ++i)
        {
            double s = tau * double(i) / double(steps);
            cplx d = denom(s);
            if (!(std::abs(d) > 1e-14) || !std::isfinite(std::abs(d)))
            {
                throw SingularityError(
                    "su11-propagator",
                    "focal singularity of the disentangled propagator near tau = "
                        + std::to_string(s));
            }
            double inc = std::arg(d / prev);
            if (std::abs(inc) > std::numbers::pi / 4)
            {
                ok = false;
                break;
            }
            phase += inc;
            prev = d;
        }
        if (ok)
            break;
        if (attempt > 20)
        {
            throw SingularityError("su11-propagator",
                                   "cannot track the propagator phase at tau = "
                                       + std::to_string(tau));
        }
        steps *= 2;
    }

    cplx d = denom(tau);
    c.g_zero = -2.0 * cplx(std::log(std::abs(d)), phase);
    cplx sg = detail::sinc(c.gamma);
    c.g_plus = c.a_plus * sg / d;
    c.g_minus = c.a_minus * sg / d;
    return c;
}

//---------------------------------------------------------------------------//
/*!
 * Per-mode propagator matrix and the shared 2D prefactor.
 *
 * elements(m, n) = <m| exp(-i tau [(1-delta) a^dag a - (delta/2)(a^dag^2 +
 * a^2)]) |n>, and the 2D propagator is global_phase * (U (x) U) with
 * global_phase = exp(-i tau (1 - delta)). The prefactor is not a pure phase
 * when delta is imaginary; it carries the zero-point part of the decay.
 */
struct PropagatorMatrix
{
    double tau{};
    ComplexMatrix elements;
    cplx global_phase{1.0};

    std::size_t cutoff() const { return static_cast<std::size_t>(elements.rows()); }
};

namespace detail
{
//! ln(k!) for k < size.
inline const std::vector<double>& log_factorials(std::size_t size)
{
    thread_local std::vector<double> table{0.0};
    if (table.size() < size)
    {
        auto old = table.size();
        table.resize(size);
        for (auto k = old; k < size; ++k)
            table[k] = std::lgamma(double(k) + 1);
    }
    return table;
}
} // namespace detail

/*!
 * Matrix elements of exp(g+ K+) exp(g0 K0) exp(g- K-) in the Fock basis.
 *
 * Inserting the intermediate level l gives
 *   <m|U|n> = sqrt(m! n!) e^{g0/4} sum_l (g+/2)^j (g-/2)^k e^{g0 l/2}
 *             / (j! k! l!)
 * with m = l + 2j, n = l + 2k. Elements with m + n odd vanish. Every term is
 * formed in log space.
 */
inline PropagatorMatrix
propagator_matrix(const DisentangledCoeffs& c, std::size_t cutoff)
{
    if (cutoff < 1)
        throw ValidationError("su11-propagator", "cutoff must be positive");
    const auto& lf = detail::log_factorials(4 * cutoff + 4);

    const bool has_plus = c.g_plus != cplx(0);
    const bool has_minus = c.g_minus != cplx(0);
    const cplx log_hp = has_plus ? std::log(c.g_plus / 2.0) : cplx(0);
    const cplx log_hm = has_minus ? std::log(c.g_minus / 2.0) : cplx(0);
    const cplx half_g0 = c.g_zero / 2.0;
    // Per-mode factor: e^{g0/4} and the zero-point phase e^{+i tau (1-delta)/2}
    // that the 2D prefactor removes again.
    const cplx offset = c.g_zero / 4.0 + cplx(0, c.tau / 2) * (1.0 - c.delta);

    PropagatorMatrix u;
    u.tau = c.tau;
    u.global_phase = std::exp(cplx(0, -c.tau) * (1.0 - c.delta));
    u.elements = ComplexMatrix::Zero(cutoff, cutoff);
    for (std::size_t m = 0; m < cutoff; ++m)
    {
        for (std::size_t n = (m % 2); n < cutoff; n += 2)
        {
            const std::size_t lmax = std::min(m, n);
            // l runs over levels with the parity of m, as far as g+- allow.
            std::size_t lmin = lmax % 2;
            if (!has_plus)
                lmin = std::max(lmin, m);
            if (!has_minus)
                lmin = std::max(lmin, n);
            if (lmin > lmax)
                continue;
            const double base = 0.5 * (lf[m] + lf[n]);
            cplx sum = 0;
            for (std::size_t l = lmin; l <= lmax; l += 2)
            {
                const std::size_t j = (m - l) / 2;
                const std::size_t k = (n - l) / 2;
                cplx logterm = base - lf[j] - lf[k] - lf[l] + double(j) * log_hp
                               + double(k) * log_hm + double(l) * half_g0
                               + offset;
                sum += std::exp(logterm);
            }
            if (!std::isfinite(sum.real()) || !std::isfinite(sum.imag()))
            {
                throw NumericRangeError("su11-propagator",
                                        "propagator element overflow at tau = "
                                            + std::to_string(c.tau));
            }
            u.elements(m, n) = sum;
        }
    }
    return u;
}

//! Propagator for a time step under the given parameters.
inline PropagatorMatrix
build_propagator(double tau, const DimensionlessParams& params, std::size_t cutoff)
{
    return propagator_matrix(disentangle(tau, params.delta()), cutoff);
}

//! B = global_phase * U A U^T
inline TruncatedState apply(const PropagatorMatrix& u, const TruncatedState& state)
{
    if (u.cutoff() != state.cutoff())
    {
        throw ValidationError("su11-propagator",
                              "cutoff mismatch: propagator "
                                  + std::to_string(u.cutoff()) + ", state "
                                  + std::to_string(state.cutoff()));
    }
    ComplexMatrix tmp = u.elements * state.coeffs();
    ComplexMatrix b = u.global_phase * (tmp * u.elements.transpose());
    return {std::move(b), state.beta()};
}

//---------------------------------------------------------------------------//
/*!
 * Caches propagators for a fixed (delta, cutoff), keyed by the exact bit
 * pattern of tau. Intended for the repeated sampling-lattice step; one cache
 * per worker thread.
 */
class PropagatorCache
{
  public:
    PropagatorCache(DimensionlessParams params, std::size_t cutoff, std::size_t capacity = 16)
        : params_(params), cutoff_(cutoff), capacity_(capacity)
    {
    }

    const PropagatorMatrix& get(double tau)
    {
        auto key = std::bit_cast<std::uint64_t>(tau);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
        if (cache_.size() >= capacity_)
            cache_.clear();
        return cache_.emplace(key, build_propagator(tau, params_, cutoff_))
            .first->second;
    }

    std::size_t size() const { return cache_.size(); }

  private:
    DimensionlessParams params_;
    std::size_t cutoff_;
    std::size_t capacity_;
    std::unordered_map<std::uint64_t, PropagatorMatrix> cache_;
};

//---------------------------------------------------------------------------//
// Waiting times
//---------------------------------------------------------------------------//
//! How the uniform variate zeta is compared against the decaying state.
enum class SurvivalConvention
{
    standard, //!< <psi|psi> = zeta
    literal,  //!< |<psi|psi>|^2 = zeta
};

//! Threshold on <psi|psi> that corresponds to zeta under a convention.
inline double survival_threshold(double zeta, SurvivalConvention conv)
{
    return conv == SurvivalConvention::literal ? std::sqrt(zeta) : zeta;
}

//! <psi(tau)|psi(tau)> under no-jump evolution.
inline double survival(const TruncatedState& state,
                       const DimensionlessParams& params,
                       double tau)
{
    return apply(build_propagator(tau, params, state.cutoff()), state).norm2();
}

//! Relative tolerance of the waiting-time root finder.
inline constexpr double waiting_time_tolerance = 1e-8;

/*!
 * Time at which the no-jump norm <psi|psi> falls to an absolute threshold.
 *
 * The state need not be normalized: the engine calls this on the decaying
 * state between sample points. Returns nullopt when the norm at tau_max is
 * still above the threshold.
 */
inline std::optional<double> find_norm_crossing(const TruncatedState& state,
                                                double threshold,
                                                const DimensionlessParams& params,
                                                double tau_max)
{
    if (!(tau_max > 0))
        throw ValidationError("su11-propagator", "tau_max must be positive");
    const double n0 = state.norm2();
    if (!(n0 > 0))
        throw InvalidStateError("su11-propagator", "zero-norm state");
    if (params.eta() == 0)
        return std::nullopt;
    if (threshold >= n0)
        return 0.0;

    std::vector<std::pair<double, double>> evaluated{{0.0, n0}};
    auto f = [&](double tau) {
        double n = survival(state, params, tau);
        evaluated.emplace_back(tau, n);
        return n - threshold;
    };

    double f_hi = f(tau_max);
    if (f_hi > 0)
        return std::nullopt;
    if (f_hi == 0)
        return tau_max;

    boost::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) {
        return std::abs(b - a)
               <= waiting_time_tolerance * std::max(std::abs(a), std::abs(b));
    };
    auto [lo, hi] = boost::math::tools::toms748_solve(
        f, 0.0, tau_max, n0 - threshold, f_hi, tol, max_iter);

    std::sort(evaluated.begin(), evaluated.end());
    for (std::size_t i = 1; i < evaluated.size(); ++i)
    {
        const auto& [t0, v0] = evaluated[i - 1];
        const auto& [t1, v1] = evaluated[i];
        if (t1 > t0 && v1 > v0 * (1 + 1e-12) + 1e-300)
        {
            throw ConsistencyError("su11-propagator",
                                   "survival increased between tau = "
                                       + std::to_string(t0) + " and "
                                       + std::to_string(t1));
        }
    }
    return 0.5 * (lo + hi);
}

/*!
 * Waiting time until the next jump for a normalized state and a uniform
 * variate zeta in (0, 1).
 */
inline std::optional<double>
waiting_time(const TruncatedState& state,
             double zeta,
             const DimensionlessParams& params,
             double tau_max,
             SurvivalConvention conv = SurvivalConvention::standard)
{
    if (!(zeta > 0 && zeta < 1))
        throw ValidationError("su11-propagator", "zeta must lie in (0, 1)");
    return find_norm_crossing(state, survival_threshold(zeta, conv) * state.norm2(),
                              params, tau_max);
}

} // namespace lgtraj
