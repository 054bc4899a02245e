#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lgtraj/trajectory_engine.hpp"
#include "oracles.hpp"

using namespace lgtraj;

namespace
{
EnsembleConfig small_config()
{
    EnsembleConfig c;
    c.params = DimensionlessParams(0.25, 0.1, 1.0);
    c.cutoff = 12;
    c.n_traj = 24;
    c.tau_max = 6;
    c.sample_dt = 0.5;
    c.initial = {0.4, 0, 0, 0.3};
    c.seed = 99;
    c.histogram_bin = 2;
    return c;
}
} // namespace

TEST(TrajectoryEngine, UnitaryTrajectoryRotates)
{
    EnsembleConfig c;
    c.params = DimensionlessParams(0.25, 0, 0);
    c.cutoff = 30;
    c.tau_max = 50;
    c.sample_dt = 0.25;
    c.initial = {0.7, 0, 0.4, 0};
    auto r = run_trajectory(c, 0);
    ASSERT_EQ(r.samples.size(), 201u);
    EXPECT_TRUE(r.jump_times.empty());
    for (std::size_t k = 0; k < r.samples.size(); ++k)
    {
        double tau = 0.25 * double(k);
        EXPECT_NEAR(r.samples[k].x, 0.7 * std::cos(tau) + 0.4 * std::sin(tau), 1e-6);
        EXPECT_NEAR(r.samples[k].px, 0.4 * std::cos(tau) - 0.7 * std::sin(tau), 1e-6);
    }
}

TEST(TrajectoryEngine, DeterministicPerIndex)
{
    auto c = small_config();
    auto a = run_trajectory(c, 6);
    auto b = run_trajectory(c, 6);
    auto other = run_trajectory(c, 10);
    ASSERT_FALSE(a.jump_times.empty());
    EXPECT_EQ(a.jump_times, b.jump_times);
    EXPECT_NE(a.jump_times, other.jump_times);
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        EXPECT_EQ(a.samples[k].L, b.samples[k].L);
}

TEST(TrajectoryEngine, JumpsAreAfterStartAndSorted)
{
    auto c = small_config();
    for (std::size_t i = 0; i < 6; ++i)
    {
        auto r = run_trajectory(c, i);
        std::size_t counted = 0;
        for (auto n : r.jumps_per_sample)
            counted += n;
        EXPECT_EQ(counted, r.jump_times.size());
        for (std::size_t j = 0; j < r.jump_times.size(); ++j)
        {
            EXPECT_GT(r.jump_times[j], 0);
            EXPECT_LE(r.jump_times[j], c.tau_max);
            if (j)
            {
                EXPECT_GE(r.jump_times[j], r.jump_times[j - 1]);
            }
        }
    }
}

TEST(TrajectoryEngine, EnsembleShapeAndBookkeeping)
{
    auto c = small_config();
    auto r = run_ensemble(c);
    EXPECT_EQ(r.series.size(), 13u);
    EXPECT_EQ(r.n_traj_effective + r.n_degenerate, c.n_traj);
    std::size_t hist = 0, per_sample = 0;
    for (auto n : r.jump_histogram.counts)
        hist += n;
    for (auto n : r.jumps_per_sample)
        per_sample += n;
    EXPECT_EQ(r.jump_histogram.counts.size(), 3u);
    EXPECT_EQ(hist, r.total_jumps);
    EXPECT_EQ(per_sample, r.total_jumps);
    EXPECT_GT(r.total_jumps, 0u);
    for (const auto& s : r.series)
    {
        EXPECT_GE(s.var_x, 0);
        EXPECT_GE(s.var_L, 0);
    }
    EXPECT_GE(r.truncation_metric, r.top_shell.back());
}

TEST(TrajectoryEngine, ThreadCountDoesNotChangeResults)
{
    auto c = small_config();
    c.n_traj = 30;
    c.threads = 1;
    auto a = run_ensemble(c);
    c.threads = 3;
    auto b = run_ensemble(c);
    ASSERT_EQ(a.series.size(), b.series.size());
    for (std::size_t k = 0; k < a.series.size(); ++k)
    {
        EXPECT_EQ(a.series[k].mean_x, b.series[k].mean_x);
        EXPECT_EQ(a.series[k].var_L, b.series[k].var_L);
        EXPECT_EQ(a.statistics[k][Channel::py].se_mean, b.statistics[k][Channel::py].se_mean);
    }
    EXPECT_EQ(a.jump_histogram.counts, b.jump_histogram.counts);
}

TEST(TrajectoryEngine, PooledVarianceFormula)
{
    auto c = small_config();
    c.n_traj = 5;
    auto r = run_ensemble(c);
    const std::size_t k = 8;
    double m = 0, q = 0;
    for (std::size_t i = 0; i < c.n_traj; ++i)
    {
        auto t = run_trajectory(c, i);
        m += t.samples[k].y;
        q += t.samples[k].y2;
    }
    m /= 5;
    q /= 5;
    EXPECT_NEAR(r.series[k].mean_y, m, 1e-14);
    EXPECT_NEAR(r.series[k].var_y, q - m * m, 1e-14);
}

TEST(TrajectoryEngine, VacuumFirstJumpSurvival)
{
    // <X^2 + Y^2> = beta for the vacuum, so P(no jump by T) ~ exp(-2 eta beta T).
    EnsembleConfig c;
    c.params = DimensionlessParams(0.25, 0.2, 0.5);
    c.cutoff = 10;
    c.tau_max = 2;
    c.sample_dt = 2;
    const std::size_t n = 600;
    std::size_t survived = 0;
    PropagatorCache cache(c.params, c.cutoff);
    for (std::size_t i = 0; i < n; ++i)
        survived += run_trajectory(c, i, {}, &cache).jump_times.empty();
    double p = std::exp(-2 * 0.2 * 0.25 * 2);
    double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(double(survived) / n, p, 4 * se);
}

TEST(TrajectoryEngine, MatchesMasterEquationOnSmallBasis)
{
    const std::size_t n = 6;
    EnsembleConfig c;
    c.params = DimensionlessParams(0.25, 0.2, 0.5);
    c.cutoff = n;
    c.n_traj = 400;
    c.tau_max = 2;
    c.sample_dt = 0.5;
    c.initial = {0.3, 0, 0, 0.3};
    c.seed = 7;
    auto r = run_ensemble(c);

    oracle::MasterEquation me(0.25, 0.2, 0.5, n);
    oracle::Mat rho = oracle::MasterEquation::pure(
        make_coherent(0.3, 0, 0, 0.3, c.params, n).coeffs());
    const double dt = 0.01;
    for (std::size_t k = 0; k < r.statistics.size(); ++k)
    {
        if (k)
            for (int s = 0; s < 50; ++s)
                rho = me.step(rho, dt);
        auto m = me.moments(rho);
        const auto& st = r.statistics[k];
        std::array<double, 5> ref{m.x, m.y, m.px, m.py, m.L};
        for (std::size_t ch = 0; ch < 5; ++ch)
        {
            EXPECT_LE(std::abs(st.channels[ch].mean - ref[ch]),
                      4 * st.channels[ch].se_mean + 1e-9)
                << "tau " << st.tau << " channel " << ch;
        }
    }
}

TEST(TrajectoryEngine, RejectsOffLatticeConfig)
{
    auto c = small_config();
    c.tau_max = 6.3;
    EXPECT_THROW(run_ensemble(c), ValidationError);
    c = small_config();
    c.n_traj = 0;
    EXPECT_THROW(run_ensemble(c), ValidationError);
}

TEST(TrajectoryEngine, DensityRequiresLatticeTimes)
{
    auto c = small_config();
    std::vector<double> taus{0.7};
    EXPECT_THROW(snapshot_density(c, taus, Grid{}), ValidationError);
}

TEST(TrajectoryEngine, DensitySnapshots)
{
    auto c = small_config();
    c.initial = {1, 0, 0, 1};
    c.cutoff = 30;
    c.n_traj = 8;
    std::vector<double> taus{0, 6};
    Grid g;
    auto d = snapshot_density(c, taus, g);
    ASSERT_EQ(d.size(), 2u);
    Eigen::Index i, j;
    d[0].density.maxCoeff(&i, &j);
    EXPECT_NEAR(g.x(i), 1, 1e-12);
    EXPECT_NEAR(g.y(j), 0, 1e-12);
    for (const auto& s : d)
        EXPECT_NEAR(s.density.sum() * g.dx() * g.dy(), 1, 1e-3);
}

TEST(TrajectoryEngine, DegenerateJumpsExcluded)
{
    // Enormous kicks push the whole state beyond the two-level basis.
    EnsembleConfig c;
    c.params = DimensionlessParams(0.25, 5, 1e3);
    c.cutoff = 2;
    c.n_traj = 3;
    c.tau_max = 10;
    c.sample_dt = 1;
    EXPECT_THROW(run_ensemble(c), EnsembleFailure);
    auto t = run_trajectory(c, 0);
    EXPECT_TRUE(t.degenerate);
    EXPECT_FALSE(t.failure.empty());
}
