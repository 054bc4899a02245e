#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace lgtraj
{
//---------------------------------------------------------------------------//
/*!
 * Random stream owned by a single trajectory.
 *
 * The engine state is a pure function of (seed, stream index), so results do
 * not depend on how trajectories are scheduled across threads. Doubles are
 * formed from the top 53 bits directly rather than through a standard
 * distribution, whose output is implementation-defined.
 */
class RandomStream
{
  public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32),
                          0x4c47u};
        engine_.seed(seq);
    }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    //! Uniform in the open interval (0, 1).
    double uniform_open()
    {
        return (double(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    //! Uniform in [0, 1).
    double uniform()
    {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace lgtraj
