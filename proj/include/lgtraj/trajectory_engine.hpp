#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "fock2d.hpp"
#include "params.hpp"
#include "recoil_jump.hpp"
#include "rng.hpp"
#include "su11_propagator.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
struct InitialCondition
{
    double x0{}, y0{}, px0{}, py0{};
};

/*!
 * Everything that determines an ensemble run.
 *
 * Results are a deterministic function of this struct; the thread count only
 * changes the wall time.
 */
struct EnsembleConfig
{
    DimensionlessParams params{0.25, 0.0125, 2.310};
    std::size_t cutoff{40};
    std::size_t n_traj{1};
    double tau_max{80};
    double sample_dt{0.5};
    InitialCondition initial{};
    std::uint64_t seed{1};
    SurvivalConvention survival{SurvivalConvention::standard};
    double histogram_bin{5};
    unsigned threads{1};

    //! Number of sampling intervals, tau_max / sample_dt.
    std::size_t sample_intervals() const
    {
        if (!(sample_dt > 0) || !std::isfinite(sample_dt))
            throw ValidationError("trajectory-engine", "sample_dt must be positive");
        if (!(tau_max > 0) || !std::isfinite(tau_max))
            throw ValidationError("trajectory-engine", "tau_max must be positive");
        double ratio = tau_max / sample_dt;
        double k = std::round(ratio);
        if (k < 1 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        {
            throw ValidationError("trajectory-engine",
                                  "tau_max must be an integer multiple of sample_dt");
        }
        return static_cast<std::size_t>(k);
    }

    double sample_time(std::size_t k) const { return double(k) * sample_dt; }

    void validate() const
    {
        sample_intervals();
        if (n_traj < 1)
            throw ValidationError("trajectory-engine", "n_traj must be at least 1");
        if (cutoff < 2)
            throw ValidationError("trajectory-engine", "cutoff must be at least 2");
        if (!(histogram_bin > 0))
            throw ValidationError("trajectory-engine", "histogram_bin must be positive");
    }

    //! Sample index of a time on the sampling lattice.
    std::size_t lattice_index(double tau) const
    {
        double k = std::round(tau / sample_dt);
        if (!(tau >= 0) || k > double(sample_intervals())
            || std::abs(tau - k * sample_dt) > 1e-9 * std::max(1.0, std::abs(tau)))
        {
            throw ValidationError("trajectory-engine",
                                  "time " + std::to_string(tau)
                                      + " is not on the sampling lattice");
        }
        return static_cast<std::size_t>(k);
    }
};

//---------------------------------------------------------------------------//
struct TrajectoryResult
{
    std::size_t index{};
    std::vector<Moments> samples;            //!< one per sample time
    std::vector<double> top_shell;           //!< top-two-shell probability
    std::vector<std::size_t> jumps_per_sample; //!< jumps in (t_{k-1}, t_k]
    std::vector<double> jump_times;
    std::vector<TruncatedState> snapshots; //!< normalized states, on request
    bool degenerate{false};
    std::string failure;
};

/*!
 * One quantum trajectory.
 *
 * Alternates analytic no-jump evolution with sampled jumps. The no-jump
 * segments never cross a sample time: each interval is first propagated in
 * one step, and the waiting-time root is searched only when the norm falls
 * below the current threshold within it. Observables are recorded on a
 * normalized copy; the propagated state keeps its decaying norm.
 *
 * A degenerate jump ends the trajectory and marks it; the ensemble excludes
 * it.
 */
inline TrajectoryResult run_trajectory(const EnsembleConfig& cfg,
                                       std::size_t index,
                                       std::span<const std::size_t> snapshot_samples = {},
                                       PropagatorCache* cache = nullptr)
{
    cfg.validate();
    const std::size_t intervals = cfg.sample_intervals();
    const auto& params = cfg.params;
    std::optional<PropagatorCache> own_cache;
    if (!cache)
        cache = &own_cache.emplace(params, cfg.cutoff);

    TrajectoryResult r;
    r.index = index;
    r.samples.reserve(intervals + 1);
    r.top_shell.reserve(intervals + 1);
    r.jumps_per_sample.assign(intervals + 1, 0);

    RandomStream rng(cfg.seed, index);
    TruncatedState psi = make_coherent(cfg.initial.x0, cfg.initial.y0,
                                       cfg.initial.px0, cfg.initial.py0, params,
                                       cfg.cutoff);

    auto record = [&](std::size_t k) {
        r.samples.push_back(moments(psi));
        r.top_shell.push_back(psi.top_shell_probability(2));
        if (std::find(snapshot_samples.begin(), snapshot_samples.end(), k)
            != snapshot_samples.end())
        {
            r.snapshots.push_back(psi.normalized());
        }
    };
    auto draw_threshold = [&] {
        return survival_threshold(rng.uniform_open(), cfg.survival);
    };

    record(0);
    double t = 0;
    double threshold = draw_threshold();
    try
    {
        for (std::size_t k = 1; k <= intervals; ++k)
        {
            const double target = cfg.sample_time(k);
            bool full_step = true;
            for (;;)
            {
                const double seg = target - t;
                std::optional<PropagatorMatrix> local;
                const PropagatorMatrix* u = nullptr;
                if (full_step)
                    u = &cache->get(cfg.sample_dt);
                else
                    u = &local.emplace(build_propagator(seg, params, cfg.cutoff));

                TruncatedState next = apply(*u, psi);
                if (params.eta() == 0 || next.norm2() > threshold)
                {
                    psi = std::move(next);
                    t = target;
                    break;
                }

                double wait = find_norm_crossing(psi, threshold, params, seg)
                                  .value_or(seg);
                psi = apply(build_propagator(wait, params, cfg.cutoff), psi);
                t += wait;
                full_step = false;

                EmissionDirection dir = sample_direction(rng);
                psi = apply_jump(psi, JumpKick::make(params.mu(), dir, params.beta()));
                r.jump_times.push_back(t);
                ++r.jumps_per_sample[k];
                threshold = draw_threshold();
            }
            record(k);
        }
    }
    catch (const DegenerateJumpError& e)
    {
        r.degenerate = true;
        r.failure = e.what();
    }
    return r;
}

//---------------------------------------------------------------------------//
// Ensemble statistics
//---------------------------------------------------------------------------//
enum class Channel : std::size_t
{
    x = 0,
    y,
    px,
    py,
    L,
};
inline constexpr std::size_t channel_count = 5;

//! Mixed-state mean and variance of one observable, with Monte-Carlo errors.
struct ChannelEstimate
{
    double mean{};
    double variance{};
    double se_mean{};
    double se_variance{};
};

struct SampleStatistics
{
    double tau{};
    std::array<ChannelEstimate, channel_count> channels{};

    const ChannelEstimate& operator[](Channel c) const
    {
        return channels[static_cast<std::size_t>(c)];
    }
};

struct JumpHistogram
{
    double bin_width{};
    std::vector<std::size_t> counts;
};

struct DensityRequest
{
    std::vector<double> taus;
    Grid grid;
};

struct DensitySnapshot
{
    double tau{};
    Grid grid;
    RealMatrix density; //!< rows: x, columns: y
};

struct EnsembleResult
{
    std::vector<ObservableRecord> series;
    std::vector<SampleStatistics> statistics;
    std::vector<double> top_shell; //!< ensemble top-two-shell probability
    std::vector<std::size_t> jumps_per_sample;
    JumpHistogram jump_histogram;
    std::size_t total_jumps{};
    double truncation_metric{}; //!< max top-shell probability in any sample
    std::size_t n_traj_effective{};
    std::size_t n_degenerate{};
    std::vector<DensitySnapshot> densities;
};

namespace detail
{
//! Sums over trajectories of m = <O>_i and q = <O^2>_i.
struct ChannelSums
{
    double s1{}, s2{}, s11{}, s22{}, s12{};

    void add(double m, double q)
    {
        s1 += m;
        s2 += q;
        s11 += m * m;
        s22 += q * q;
        s12 += m * q;
    }

    void merge(const ChannelSums& o)
    {
        s1 += o.s1;
        s2 += o.s2;
        s11 += o.s11;
        s22 += o.s22;
        s12 += o.s12;
    }

    ChannelEstimate estimate(double n) const
    {
        ChannelEstimate e;
        e.mean = s1 / n;
        e.variance = s2 / n - e.mean * e.mean;
        if (n > 1)
        {
            double var_m = std::max(0.0, s11 / n - e.mean * e.mean);
            e.se_mean = std::sqrt(var_m / (n - 1));
            // Influence function of the pooled variance: z = q - 2 mean m.
            double mz = s2 / n - 2 * e.mean * s1 / n;
            double ez2 = s22 / n - 4 * e.mean * s12 / n
                         + 4 * e.mean * e.mean * s11 / n;
            e.se_variance = std::sqrt(std::max(0.0, ez2 - mz * mz) / (n - 1));
        }
        return e;
    }
};

struct SampleSums
{
    std::array<ChannelSums, channel_count> ch{};
    std::array<double, 2> p_extra{}; //!< sums of <P_x^2>, <P_y^2>
    double top_shell{};
    std::size_t jumps{};
};

struct EnsembleAccumulator
{
    std::size_t n_effective{};
    std::size_t n_degenerate{};
    std::size_t total_jumps{};
    double max_top_shell{};
    std::vector<SampleSums> samples;
    std::vector<std::size_t> histogram;
    std::vector<RealMatrix> densities;

    EnsembleAccumulator(std::size_t n_samples, std::size_t n_bins, std::size_t n_density,
                        const Grid* grid)
        : samples(n_samples), histogram(n_bins, 0)
    {
        for (std::size_t i = 0; i < n_density; ++i)
            densities.push_back(RealMatrix::Zero(grid->nx, grid->ny));
    }

    void add(const TrajectoryResult& r, double bin_width, const Grid* grid)
    {
        if (r.degenerate)
        {
            ++n_degenerate;
            return;
        }
        ++n_effective;
        for (std::size_t k = 0; k < samples.size(); ++k)
        {
            const Moments& m = r.samples[k];
            auto& s = samples[k];
            s.ch[0].add(m.x, m.x2);
            s.ch[1].add(m.y, m.y2);
            s.ch[2].add(m.px, m.px2);
            s.ch[3].add(m.py, m.py2);
            s.ch[4].add(m.L, m.L2);
            s.top_shell += r.top_shell[k];
            s.jumps += r.jumps_per_sample[k];
            max_top_shell = std::max(max_top_shell, r.top_shell[k]);
        }
        for (double t : r.jump_times)
        {
            auto bin = static_cast<std::size_t>(t / bin_width);
            histogram[std::min(bin, histogram.size() - 1)] += 1;
        }
        total_jumps += r.jump_times.size();
        for (std::size_t i = 0; i < densities.size(); ++i)
            densities[i] += position_density(r.snapshots[i], *grid);
    }

    void merge(const EnsembleAccumulator& o)
    {
        n_effective += o.n_effective;
        n_degenerate += o.n_degenerate;
        total_jumps += o.total_jumps;
        max_top_shell = std::max(max_top_shell, o.max_top_shell);
        for (std::size_t k = 0; k < samples.size(); ++k)
        {
            for (std::size_t c = 0; c < channel_count; ++c)
                samples[k].ch[c].merge(o.samples[k].ch[c]);
            samples[k].top_shell += o.samples[k].top_shell;
            samples[k].jumps += o.samples[k].jumps;
        }
        for (std::size_t b = 0; b < histogram.size(); ++b)
            histogram[b] += o.histogram[b];
        for (std::size_t i = 0; i < densities.size(); ++i)
            densities[i] += o.densities[i];
    }
};

//! Trajectories per reduction block. Fixed so sums do not depend on threads.
inline constexpr std::size_t ensemble_block_size = 8;
} // namespace detail

/*!
 * Run n_traj independent trajectories and pool their statistics.
 *
 * Variances are those of the estimated density matrix: the mean over
 * trajectories of <O^2> minus the square of the mean of <O>. Trajectories are
 * processed in fixed blocks whose partial sums are merged in block order, so
 * the result is bit-identical for any thread count.
 */
inline EnsembleResult run_ensemble(const EnsembleConfig& cfg,
                                   const DensityRequest* density = nullptr)
{
    cfg.validate();
    const std::size_t intervals = cfg.sample_intervals();
    const std::size_t n_samples = intervals + 1;
    const auto n_bins = static_cast<std::size_t>(
        std::max(1.0, std::ceil(cfg.tau_max / cfg.histogram_bin - 1e-9)));

    std::vector<std::size_t> snap_index;
    const Grid* grid = nullptr;
    if (density)
    {
        density->grid.validate();
        grid = &density->grid;
        for (double tau : density->taus)
            snap_index.push_back(cfg.lattice_index(tau));
        // Snapshots come back in sample order; keep requests sorted alike.
        std::vector<std::size_t> sorted = snap_index;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError("trajectory-engine", "duplicate density time");
        if (sorted != snap_index)
            throw ValidationError("trajectory-engine", "density times must be increasing");
    }

    const std::size_t n_blocks
        = (cfg.n_traj + detail::ensemble_block_size - 1) / detail::ensemble_block_size;
    std::vector<std::optional<detail::EnsembleAccumulator>> blocks(n_blocks);
    std::atomic<std::size_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        PropagatorCache cache(cfg.params, cfg.cutoff);
        for (;;)
        {
            std::size_t b = next_block.fetch_add(1);
            if (b >= n_blocks)
                return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure)
                    return;
            }
            try
            {
                detail::EnsembleAccumulator acc(n_samples, n_bins, snap_index.size(), grid);
                std::size_t begin = b * detail::ensemble_block_size;
                std::size_t end = std::min(cfg.n_traj, begin + detail::ensemble_block_size);
                for (std::size_t i = begin; i < end; ++i)
                {
                    TrajectoryResult r = run_trajectory(cfg, i, snap_index, &cache);
                    acc.add(r, cfg.histogram_bin, grid);
                }
                blocks[b].emplace(std::move(acc));
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                return;
            }
        }
    };

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));
    if (threads <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    detail::EnsembleAccumulator total(n_samples, n_bins, snap_index.size(), grid);
    for (auto& b : blocks)
        total.merge(*b);

    if (total.n_effective == 0)
    {
        throw EnsembleFailure("trajectory-engine",
                              "all " + std::to_string(cfg.n_traj)
                                  + " trajectories ended in degenerate jumps");
    }

    EnsembleResult res;
    const double n = double(total.n_effective);
    res.n_traj_effective = total.n_effective;
    res.n_degenerate = total.n_degenerate;
    res.total_jumps = total.total_jumps;
    res.truncation_metric = total.max_top_shell;
    res.jump_histogram = {cfg.histogram_bin, total.histogram};
    for (std::size_t k = 0; k < n_samples; ++k)
    {
        const auto& s = total.samples[k];
        SampleStatistics st;
        st.tau = cfg.sample_time(k);
        for (std::size_t c = 0; c < channel_count; ++c)
            st.channels[c] = s.ch[c].estimate(n);

        ObservableRecord rec;
        rec.tau = st.tau;
        rec.mean_x = st.channels[0].mean;
        rec.mean_y = st.channels[1].mean;
        rec.mean_px = st.channels[2].mean;
        rec.mean_py = st.channels[3].mean;
        rec.var_x = st.channels[0].variance;
        rec.var_y = st.channels[1].variance;
        rec.var_px = st.channels[2].variance;
        rec.var_py = st.channels[3].variance;
        rec.mean_L = st.channels[4].mean;
        rec.mean_L2 = s.ch[4].s2 / n;
        rec.var_L = st.channels[4].variance;
        rec.jump_count = static_cast<long long>(s.jumps);

        res.series.push_back(rec);
        res.statistics.push_back(st);
        res.top_shell.push_back(s.top_shell / n);
        res.jumps_per_sample.push_back(s.jumps);
    }
    for (std::size_t i = 0; i < snap_index.size(); ++i)
    {
        res.densities.push_back(
            {cfg.sample_time(snap_index[i]), *grid, total.densities[i] / n});
    }
    return res;
}

//! Ensemble-averaged position densities at lattice times.
inline std::vector<DensitySnapshot> snapshot_density(const EnsembleConfig& cfg,
                                                     std::span<const double> taus,
                                                     const Grid& grid)
{
    DensityRequest req{{taus.begin(), taus.end()}, grid};
    return run_ensemble(cfg, &req).densities;
}

} // namespace lgtraj
