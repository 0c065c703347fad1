#pragma once

// Test-point generators shared by the randomized suites and the adversarial
// search. All draws come from a caller-supplied CounterRng.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cone.hpp"
#include "harness.hpp"

namespace hklab {

/// Positive spectrum with entries log-uniform in [scale * 1e-3, scale].
inline Spectrum sample_positive_spectrum(std::size_t n, CounterRng& rng, double scale = 1.0)
{
    std::vector<double> v(n);
    for (double& x : v) x = scale * std::pow(10.0, rng.uniform(-3.0, 0.0));
    return Spectrum(std::move(v));
}

/// lambda_1 = scale, lambda_2..lambda_mu in [delta, 1] * scale and
/// lambda_{mu+1}..lambda_n in (0, delta'] * scale. Every fourth draw pins the
/// two boundary entries at delta and delta' exactly.
inline Spectrum sample_separated_spectrum(std::size_t n, int mu, double delta, double delta_prime, CounterRng& rng,
                                          double scale = 1.0)
{
    std::vector<double> v(n);
    const auto m = static_cast<std::size_t>(mu);
    const bool pin = rng.uniform() < 0.25;
    v[0] = 1.0;
    for (std::size_t j = 1; j < m; ++j) v[j] = rng.uniform(delta, 1.0);
    for (std::size_t j = m; j < n; ++j) v[j] = delta_prime * std::pow(10.0, rng.uniform(-4.0, 0.0));
    if (pin) {
        if (m >= 2) v[m - 1] = delta;
        v[m] = delta_prime;
    }
    for (double& x : v) x *= scale;
    return Spectrum(std::move(v));
}

/// Third-order data with a random diagonal/off-diagonal ratio, the knob the
/// i = 1 inequality is sensitive to.
inline ThirdOrderData sample_mixed_third_order(std::size_t n, CounterRng& rng)
{
    const double ratio = std::pow(10.0, rng.uniform(-2.0, 2.0));
    return sample_third_order(n, rng, 1.0, 1.0 / ratio);
}

} // namespace hklab
