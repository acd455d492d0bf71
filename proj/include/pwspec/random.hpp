#pragma once

// Counter-based random streams: every (seed, stream) pair indexes an
// independent sequence, so results never depend on which thread drew them.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pwspec {

namespace detail {
inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// SplitMix64 stream keyed by (seed, stream id).
///
/// The n-th draw is a pure function of (seed, stream, n).
class CounterStream
{
  public:
    using result_type = std::uint64_t;

    CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(detail::mix64(detail::mix64(seed ^ 0x6a09e667f3bcc909ULL) + stream * detail::golden_gamma))
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept
    {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::golden_gamma);
    }

    std::uint64_t draws() const noexcept { return counter_; }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller (two draws per variate).
    double normal() noexcept
    {
        double const u1 = uniform();
        double const u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Gamma(3/2, 1) as Z^2/2 + Exp(1): the sum of Gamma(1/2) and Gamma(1).
    double gamma_three_halves() noexcept
    {
        double const z = normal();
        return 0.5 * z * z - std::log(uniform());
    }

    /// +1 or -1 with equal probability.
    double sign() noexcept { return ((*this)() >> 63) ? -1.0 : 1.0; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace pwspec
