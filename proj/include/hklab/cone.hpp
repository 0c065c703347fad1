#pragma once

// Garding cones Gamma_k = { sigma_1 > 0, ..., sigma_k > 0 }.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "symfun.hpp"

namespace hklab {

/// Strict membership; the boundary counts as outside.
inline bool in_cone(std::span<const double> lambda, int k)
{
    const int n = static_cast<int>(lambda.size());
    if (k < 1 || k > n) throw domain_error("in_cone: order k outside [1, n]");
    const std::vector<double> e = detail::esf_prefix(lambda, k);
    for (int m = 1; m <= k; ++m)
        if (!(e[static_cast<std::size_t>(m)] > 0.0)) return false;
    return true;
}

inline bool in_cone(const Spectrum& lambda, int k) { return in_cone(lambda.values(), k); }

/// Smallest sigma_m, m = 1..k. Positive iff lambda is in Gamma_k.
inline double cone_margin(std::span<const double> lambda, int k)
{
    const std::vector<double> e = detail::esf_prefix(lambda, k);
    double lo = e[1];
    for (int m = 2; m <= k; ++m) lo = std::min(lo, e[static_cast<std::size_t>(m)]);
    return lo;
}

enum class SampleStrategy { rejection, boundary_biased };

struct ConeSampleConfig {
    int n = 3;
    int k = 2;
    double scale = 1.0;
    std::uint64_t seed = 0;
    SampleStrategy strategy = SampleStrategy::rejection;

    void validate() const
    {
        if (n < 2) throw domain_error("ConeSampleConfig: n must be at least 2");
        if (k < 1 || k > n) throw domain_error("ConeSampleConfig: k outside [1, n]");
        if (!(scale > 0.0)) throw domain_error("ConeSampleConfig: scale must be positive");
    }
};

inline constexpr int kRejectionBudget = 100000;

/// Draws a point of Gamma_k from `rng`: centered Gaussian of the configured
/// scale conditioned on the cone, then (boundary-biased) the smallest entry is
/// pushed down until 0 < sigma_k < 0.1 * scale^k.
inline Spectrum sample_cone(const ConeSampleConfig& cfg, CounterRng& rng)
{
    cfg.validate();
    std::vector<double> x(static_cast<std::size_t>(cfg.n));
    bool found = false;
    for (int draw = 0; draw < kRejectionBudget; ++draw) {
        for (double& v : x) v = cfg.scale * rng.normal();
        if (in_cone(x, cfg.k)) {
            found = true;
            break;
        }
    }
    if (!found)
        throw sampling_error("sample_cone: rejection budget exhausted for n=" + std::to_string(cfg.n) +
                             " k=" + std::to_string(cfg.k));
    if (cfg.strategy == SampleStrategy::rejection) return Spectrum(std::move(x));

    // sigma_k is affine in the smallest entry; walk it towards the boundary.
    const auto smallest = static_cast<std::size_t>(std::min_element(x.begin(), x.end()) - x.begin());
    const double target = 0.1 * std::pow(cfg.scale, cfg.k);
    double inside = x[smallest];
    double outside = inside - cfg.scale;
    for (int guard = 0; guard < 200; ++guard) {
        x[smallest] = outside;
        if (!in_cone(x, cfg.k)) break;
        inside = outside;
        outside -= cfg.scale * (guard + 2);
    }
    x[smallest] = inside;
    for (int it = 0; it < 200 && !(detail::esf_value(x, cfg.k) < target); ++it) {
        const double mid = 0.5 * (inside + outside);
        x[smallest] = mid;
        if (in_cone(x, cfg.k))
            inside = mid;
        else
            outside = mid;
        x[smallest] = inside;
    }
    return Spectrum(std::move(x));
}

/// Deterministic in (seed, draw_index): each index gets its own RNG stream.
inline Spectrum sample(const ConeSampleConfig& cfg, std::uint64_t draw_index = 0)
{
    CounterRng rng(cfg.seed, draw_index);
    return sample_cone(cfg, rng);
}

struct ShiftedSpectrum {
    Spectrum lambda;
    double k0 = 0.0;
};

/// Translates lambda by K0 * (1, ..., 1) so every entry is positive, with the
/// minimal K0 = max(0, -lambda_n) + 1e-8 * max(1, |lambda|_inf). Requires
/// lambda in Gamma_{k+1} (Gamma_n when k >= n).
inline ShiftedSpectrum shift_to_positive(const Spectrum& lambda, int k)
{
    const int n = static_cast<int>(lambda.size());
    const int order = std::min(k + 1, n);
    if (k < 1 || !in_cone(lambda, order))
        throw precondition_error("shift_to_positive: lambda is not in Gamma_" + std::to_string(order));
    const double margin = 1e-8 * std::max(1.0, lambda.max_abs());
    const double k0 = std::max(0.0, -lambda.smallest()) + margin;
    std::vector<double> shifted(lambda.values().begin(), lambda.values().end());
    for (double& v : shifted) v += k0;
    return {Spectrum(std::move(shifted)), k0};
}

} // namespace hklab
