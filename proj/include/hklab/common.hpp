#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hklab {

/// Argument outside the mathematical domain of an operation (bad order k,
/// invalid index, non-positive eigenvalue where positivity is required).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A documented precondition of a lemma or solver entry point does not hold.
class precondition_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rejection sampler ran out of draws.
class sampling_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Counter-based generator: the i-th output of stream (seed, stream) is a pure
/// function of (seed, stream, i). Two generators built from the same key
/// produce identical sequences regardless of thread or call order, so sweeps
/// can be split across workers by stream index.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL)))
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (platform independent, unlike
    /// std::normal_distribution).
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hklab
