#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lgtraj/caldeira_leggett.hpp"

using namespace lgtraj;

namespace
{
const CLParams cl_ref{0.35, 0.0125, 0.25};
constexpr double pi = std::numbers::pi;
} // namespace

TEST(CaldeiraLeggett, InitialVarianceIsSigmaSquared)
{
    EXPECT_EQ(cl_variance(0, cl_ref), 0.35 * 0.35);
}

TEST(CaldeiraLeggett, DirectEvaluations)
{
    EXPECT_NEAR(cl_variance(pi, cl_ref), 0.1225 + 0.0125 * 0.0625 * pi, 1e-15);
    EXPECT_NEAR(cl_variance(pi, cl_ref), 0.124954, 5e-7);
    EXPECT_NEAR(cl_variance(pi / 2, cl_ref), 0.0012272 + 0.1275510, 5e-7);
}

TEST(CaldeiraLeggett, HeatingTermMonotone)
{
    CLParams cold = cl_ref;
    cold.eta_bar = 0;
    double prev = 0;
    for (int k = 0; k <= 400; ++k)
    {
        double tau = 0.2 * k;
        double heat = cl_variance(tau, cl_ref) - cl_variance(tau, cold);
        EXPECT_GE(heat, -1e-16);
        EXPECT_GE(heat, prev - 1e-16);
        prev = heat;
    }
}

TEST(CaldeiraLeggett, FreeBreathingIsPeriodic)
{
    CLParams cold = cl_ref;
    cold.eta_bar = 0;
    for (double tau : {0.3, 1.7, 4.4})
        EXPECT_NEAR(cl_variance(tau, cold), cl_variance(tau + 2 * pi, cold), 1e-14);
}

TEST(CaldeiraLeggett, CoefficientsAtQuarterPeriod)
{
    const double eta = 0.3, w = 0.25;
    auto c = cl_coefficients(pi / 2, eta, w);
    EXPECT_NEAR(c.A, eta * pi / (4 * w), 1e-14);
    EXPECT_NEAR(c.B, eta / w, 1e-14);
    EXPECT_NEAR(c.C, eta * pi / (4 * w), 1e-14);
}

TEST(CaldeiraLeggett, CoefficientsSmallAngleSeries)
{
    // Taylor series about nu = 0:
    //   A = (eta / 2w)(-1/nu + nu + ...), B = (eta / w)(nu / 3 + ...),
    //   C = (eta / 2w)(2 nu / 3 + ...)
    const double eta = 0.2, w = 0.5, nu = 1e-3;
    auto c = cl_coefficients(nu, eta, w);
    EXPECT_NEAR(c.A / (eta / (2 * w) * (-1 / nu + nu)), 1, 1e-6);
    EXPECT_NEAR(c.B / (eta / w * nu / 3), 1, 1e-5);
    EXPECT_NEAR(c.C / (eta / (2 * w) * 2 * nu / 3), 1, 1e-5);
}

TEST(CaldeiraLeggett, NoDissipationNoCoefficients)
{
    auto c = cl_coefficients(1.1, 0, 0.25);
    EXPECT_EQ(c.A, 0);
    EXPECT_EQ(c.B, 0);
    EXPECT_EQ(c.C, 0);
}

TEST(CaldeiraLeggett, SingularAtMultiplesOfPi)
{
    EXPECT_THROW(cl_coefficients(pi, 0.1, 0.25), SingularityError);
    EXPECT_THROW(cl_coefficients(0, 0.1, 0.25), SingularityError);
    EXPECT_THROW(cl_variance_from_coefficients(2 * pi, cl_ref), SingularityError);
}

TEST(CaldeiraLeggett, CoefficientRouteAgrees)
{
    for (double tau : {0.1, 0.9, 1.5, 2.8, 4.0, 7.3, 11.0, 40.2, 79.5})
    {
        EXPECT_NEAR(cl_variance_from_coefficients(tau, cl_ref), cl_variance(tau, cl_ref), 1e-10)
            << "tau = " << tau;
    }
}

TEST(CaldeiraLeggett, RejectsInvalidInput)
{
    EXPECT_THROW(cl_variance(1, CLParams{0, 0.1, 0.25}), ValidationError);
    EXPECT_THROW(cl_variance(-1, cl_ref), ValidationError);
}
