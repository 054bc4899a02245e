#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "lgtraj/recoil_jump.hpp"
#include "lgtraj/rng.hpp"
#include "oracles.hpp"

using namespace lgtraj;

namespace
{
const DimensionlessParams ref_params{0.25, 0.0125, 2.310};

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

//! Terminating 2F0(a, b;; z) with a a non-positive integer.
double hyp2f0(int a, int b, double z)
{
    double term = 1, sum = 1;
    for (int k = 0; a + k < 0 && b + k < 0; ++k)
    {
        term *= double(a + k) * double(b + k) * z / double(k + 1);
        sum += term;
    }
    return sum;
}

//! Hypergeometric closed forms for G and for F with a selectable kappa power.
struct ClosedForm
{
    double beta;
    int f_kappa_power; // 2 is the consistent value

    cplx g(int m, int n, double b) const
    {
        double kappa = b * std::sqrt(beta / 2);
        int hi = std::max(m, n), lo = std::min(m, n);
        double pre = std::sqrt(std::tgamma(hi + 1.0) / std::tgamma(lo + 1.0))
                     * std::exp(-kappa * kappa / 2) / std::tgamma(hi + 1.0);
        return pre * std::pow(cplx(0, kappa), m + n) * hyp2f0(-hi, -lo, -1 / (kappa * kappa));
    }

    cplx f(int m, int n, double b) const
    {
        double kappa = b * std::sqrt(beta / 2);
        int hi = std::max(m, n), lo = std::min(m, n);
        double z = -1 / (kappa * kappa);
        double f0 = hyp2f0(-hi, -lo, z);
        double f1 = lo > 0 ? hyp2f0(-hi + 1, -lo + 1, z) : 0.0;
        double pre = std::sqrt(std::tgamma(hi + 1.0) / std::tgamma(lo + 1.0))
                     * std::exp(-kappa * kappa / 2) / (std::tgamma(hi + 1.0) * std::pow(kappa, 3));
        double bracket = -std::pow(kappa, 4) * f0
                         + std::pow(kappa, f_kappa_power) * double(n + m) * f0
                         + 2.0 * hi * lo * f1;
        return cplx(0, -std::sqrt(beta / 2)) * pre * std::pow(cplx(0, kappa), m + n) * bracket;
    }
};

TruncatedState random_state(std::size_t n, double beta, unsigned seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    ComplexMatrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        a.data()[i] = cplx(g(gen), g(gen));
    return TruncatedState(a, beta).normalized();
}
} // namespace

//---------------------------------------------------------------------------//
// Matrix elements
//---------------------------------------------------------------------------//
TEST(RecoilJump, DisplacementMatchesDenseExponential)
{
    const std::size_t n = 32;
    for (double b : {-3.0, -1.1, 0.4, 2.31, 3.0})
    {
        ComplexMatrix g = displacement_matrix(b, 0.25, n);
        EXPECT_LT(max_abs_diff(g, oracle::displacement(b, 0.25, n)), 1e-10) << "b = " << b;
    }
}

TEST(RecoilJump, KickPositionMatchesFiniteDifference)
{
    const std::size_t n = 32;
    for (double b : {-2.5, -0.3, 0.0, 1.7, 3.0})
    {
        ComplexMatrix f = kick_position_matrix(b, 0.25, n);
        EXPECT_LT(max_abs_diff(f, oracle::kick_position_fd(b, 0.25, n)), 1e-8) << "b = " << b;
    }
}

TEST(RecoilJump, KickPositionAtZeroIsPosition)
{
    ComplexMatrix f = kick_position_matrix(0, 0.25, 10);
    EXPECT_LT(max_abs_diff(f, position_matrix(10, 0.25).cast<cplx>()), 1e-15);
    EXPECT_EQ(max_abs_diff(displacement_matrix(0, 0.25, 10), ComplexMatrix::Identity(10, 10)),
              0.0);
}

TEST(RecoilJump, HypergeometricClosedFormOfDisplacement)
{
    ClosedForm cf{0.25, 2};
    for (double b : {0.9, -1.7, 2.8})
    {
        ComplexMatrix g = displacement_matrix(b, 0.25, 11);
        for (int m = 0; m <= 10; ++m)
            for (int n = 0; n <= 10; ++n)
                EXPECT_LT(std::abs(g(m, n) - cf.g(m, n, b)), 1e-10);
    }
}

TEST(RecoilJump, DerivativeClosedFormNeedsKappaSquared)
{
    // The derivative of the hypergeometric form gives kappa^2 (n + m) in the
    // bracket. A linear power reproduces the matrix elements only where
    // n + m = 0.
    ClosedForm good{0.25, 2}, linear{0.25, 1};
    const double b = 1.9;
    ComplexMatrix f = kick_position_matrix(b, 0.25, 9);
    double worst_good = 0, worst_linear = 0;
    for (int m = 0; m <= 8; ++m)
    {
        for (int n = 0; n <= 8; ++n)
        {
            worst_good = std::max(worst_good, std::abs(f(m, n) - good.f(m, n, b)));
            worst_linear = std::max(worst_linear, std::abs(f(m, n) - linear.f(m, n, b)));
        }
    }
    EXPECT_LT(worst_good, 1e-10);
    EXPECT_GT(worst_linear, 1e-2);
}

TEST(RecoilJump, ColumnNormsBoundedByOne)
{
    const std::size_t n = 32;
    for (double b : {0.1, 1.0, 2.31, 3.0, 6.0})
    {
        ComplexMatrix g = displacement_matrix(b, 0.25, n);
        for (std::size_t c = 0; c < n; ++c)
            EXPECT_LE(g.col(c).squaredNorm(), 1 + 1e-10);
        // Leakage concentrates at the top of the basis.
        EXPECT_NEAR(g.col(0).squaredNorm(), 1, 1e-12);
        EXPECT_LT(g.col(n - 1).squaredNorm(), g.col(n / 2).squaredNorm());
    }
}

TEST(RecoilJump, HermitianTransposeSymmetry)
{
    for (double b : {0.7, 2.2})
    {
        ComplexMatrix gp = displacement_matrix(b, 0.25, 16);
        ComplexMatrix gm = displacement_matrix(-b, 0.25, 16);
        EXPECT_LT(max_abs_diff(gp, gm.adjoint()), 1e-14);
    }
}

TEST(RecoilJump, RandomElementsMatchOracles)
{
    const std::size_t n = 32;
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<std::size_t> idx(0, n - 1);
    std::uniform_real_distribution<double> bdist(-3, 3);
    for (int trial = 0; trial < 20; ++trial)
    {
        double b = bdist(gen);
        ComplexMatrix g = displacement_matrix(b, 0.25, n);
        ComplexMatrix f = kick_position_matrix(b, 0.25, n);
        ComplexMatrix go = oracle::displacement(b, 0.25, n);
        ComplexMatrix fo = oracle::kick_position_fd(b, 0.25, n);
        std::size_t m = idx(gen), k = idx(gen);
        EXPECT_LT(std::abs(g(m, k) - go(m, k)), 1e-7);
        EXPECT_LT(std::abs(f(m, k) - fo(m, k)), 1e-7);
    }
}

//---------------------------------------------------------------------------//
// Jumps
//---------------------------------------------------------------------------//
TEST(RecoilJump, MomentumKickLaw)
{
    const std::size_t n = 40;
    for (double ex : {1.0, 0.6, -0.35})
    {
        auto s = make_coherent(0.3, -0.2, 0.1, 0.4, ref_params, n);
        double before = expectations(s).mean_px;
        ComplexMatrix g = displacement_matrix(ref_params.mu() * ex, ref_params.beta(), n);
        TruncatedState kicked(g * s.coeffs(), ref_params.beta());
        double after = expectations(kicked).mean_px;
        EXPECT_NEAR(after - before, 0.5775 * ex, 1e-4);
    }
}

TEST(RecoilJump, VacuumJumpMatchesDenseOperator)
{
    const std::size_t n = 32;
    auto dir = EmissionDirection::from_angles(std::numbers::pi / 2, 0);
    auto kick = JumpKick::make(ref_params.mu(), dir, ref_params.beta());
    auto out = apply_jump(TruncatedState::vacuum(n, 0.25), kick);

    oracle::Mat c = oracle::jump_operator(ref_params.mu(), dir.eps_x, dir.eps_y, 0.25, n);
    oracle::Vec v = c * oracle::flatten(TruncatedState::vacuum(n, 0.25).coeffs());
    TruncatedState ref(oracle::unflatten(v, n), 0.25);
    auto r = expectations(out);
    auto rr = expectations(ref);
    EXPECT_NEAR(r.mean_px, rr.mean_px, 1e-8);
    EXPECT_NEAR(r.mean_L, rr.mean_L, 1e-8);
    EXPECT_LT(max_abs_diff(out.coeffs(), ref.normalized().coeffs()), 1e-8);
}

TEST(RecoilJump, RandomJumpMatchesDenseOperator)
{
    const std::size_t n = 10;
    auto s = random_state(n, 0.25, 77);
    for (auto [theta, phi] : {std::pair{0.4, 1.0}, {2.1, 4.0}, {1.2, -0.5}})
    {
        auto dir = EmissionDirection::from_angles(theta, phi);
        auto kick = JumpKick::make(1.3, dir, 0.25);
        auto out = apply_jump(s, kick);
        oracle::Mat c = oracle::jump_operator(1.3, dir.eps_x, dir.eps_y, 0.25, n);
        TruncatedState ref(oracle::unflatten(c * oracle::flatten(s.coeffs()), n), 0.25);
        EXPECT_LT(max_abs_diff(out.coeffs(), ref.normalized().coeffs()), 1e-10);
    }
}

TEST(RecoilJump, JumpRaisesAngularMomentum)
{
    // X + iY raises L by beta on an L eigenstate.
    auto dir = EmissionDirection::from_angles(0, 0);
    auto out = apply_jump(TruncatedState::vacuum(8, 0.25), JumpKick::make(2.31, dir, 0.25));
    EXPECT_NEAR(expectations(out).mean_L, 0.25, 1e-14);
}

TEST(RecoilJump, DegenerateJumpDetected)
{
    // One level per mode and no kick: the truncated X + iY vanishes.
    auto dir = EmissionDirection::from_angles(0.3, 0.3);
    EXPECT_THROW(apply_jump(TruncatedState::vacuum(1, 0.25), JumpKick::make(0, dir, 0.25)),
                 DegenerateJumpError);
}

//---------------------------------------------------------------------------//
// Emission sampler
//---------------------------------------------------------------------------//
TEST(EmissionSampler, ClosedFormQuantiles)
{
    EXPECT_DOUBLE_EQ(polar_angle_from_uniform(0.0), 0.0);
    EXPECT_NEAR(polar_angle_from_uniform(0.5), std::numbers::pi / 2, 1e-15);
    EXPECT_DOUBLE_EQ(polar_angle_from_uniform(1.0), std::numbers::pi);
}

TEST(EmissionSampler, InvertsCdf)
{
    for (double eps = 0.01; eps < 1; eps += 0.0625)
        EXPECT_NEAR(polar_angle_cdf(polar_angle_from_uniform(eps)), eps, 1e-13);
}

TEST(EmissionSampler, ChiSquaredGoodnessOfFit)
{
    RandomStream rng(12345, 0);
    const std::size_t draws = 1000000, bins = 50;
    std::vector<double> theta_counts(bins, 0), phi_counts(bins, 0);
    double cos2 = 0;
    for (std::size_t i = 0; i < draws; ++i)
    {
        auto d = sample_direction(rng);
        auto tb = std::min(bins - 1, std::size_t(d.theta / std::numbers::pi * bins));
        auto pb = std::min(bins - 1, std::size_t(d.phi / (2 * std::numbers::pi) * bins));
        theta_counts[tb] += 1;
        phi_counts[pb] += 1;
        cos2 += d.eps_z * d.eps_z;
        ASSERT_NEAR(d.eps_x * d.eps_x + d.eps_y * d.eps_y + d.eps_z * d.eps_z, 1, 1e-12);
    }
    EXPECT_NEAR(cos2 / draws, 0.4, 0.002);

    double chi_theta = 0, chi_phi = 0;
    for (std::size_t b = 0; b < bins; ++b)
    {
        double lo = std::numbers::pi * b / bins, hi = std::numbers::pi * (b + 1) / bins;
        double e = draws * (polar_angle_cdf(hi) - polar_angle_cdf(lo));
        chi_theta += (theta_counts[b] - e) * (theta_counts[b] - e) / e;
        double ep = double(draws) / bins;
        chi_phi += (phi_counts[b] - ep) * (phi_counts[b] - ep) / ep;
    }
    boost::math::chi_squared dist(bins - 1);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi_theta)), 0.001);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi_phi)), 0.001);
}

TEST(EmissionSampler, DensityIntegratesToOne)
{
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
        sum += polar_angle_pdf((i + 0.5) * std::numbers::pi / n) * std::numbers::pi / n;
    EXPECT_NEAR(sum, 1, 1e-8);
}
