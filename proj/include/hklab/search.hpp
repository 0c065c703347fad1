#pragma once

// Multi-start Nelder-Mead minimization of inequality slacks over each
// inequality's precondition set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cone.hpp"
#include "harness.hpp"
#include "nelder_mead.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace hklab {

enum class Inequality { lemma1, corollary17, lemma2_genesisi, lemma2_genesis2, lemma3 };

inline std::optional<Inequality> parse_inequality(std::string_view s)
{
    if (s == "lemma1") return Inequality::lemma1;
    if (s == "corollary17") return Inequality::corollary17;
    if (s == "lemma2_genesisi") return Inequality::lemma2_genesisi;
    if (s == "lemma2_genesis2") return Inequality::lemma2_genesis2;
    if (s == "lemma3") return Inequality::lemma3;
    return std::nullopt;
}

inline std::string to_string(Inequality q)
{
    switch (q) {
    case Inequality::lemma1: return "lemma1";
    case Inequality::corollary17: return "corollary17";
    case Inequality::lemma2_genesisi: return "lemma2_genesisi";
    case Inequality::lemma2_genesis2: return "lemma2_genesis2";
    case Inequality::lemma3: return "lemma3";
    }
    return "unknown";
}

struct SearchConfig {
    int n = 3;
    int k = 2;
    int ell = 1;
    /// quotient-inequality delta for lemma1/corollary17, pinching delta for lemma3
    double delta = 0.5;
    int m = 7;
    int mu = 1;
    double delta_prime = 0.01;
    int restarts = 200;
    int max_evals = 1500;
    std::uint64_t seed = 0;
    /// K = gain_factor * threshold
    double gain_factor = 1.0 + 1e-6;
    /// data slice i (0-based, sorted order); -1 picks 1 for genesisi, else 0
    int index = -1;
};

/// Gain used by the randomized suites and the search: just above the
/// relevant threshold, with psi_inf = sigma_k at the sample.
inline double corollary17_gain(int k, double delta, double psi_inf, double factor = 1.0 + 1e-6)
{
    return factor * gain_threshold(k, 1, delta, psi_inf);
}

inline double lemma3_gain(int k, int mu, double psi_inf, double factor = 1.0 + 1e-6)
{
    return factor * lemma3_gain_threshold(k, mu, psi_inf);
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct Candidate {
    std::optional<SlackReport> report;
    double objective = std::numeric_limits<double>::infinity();
};

/// Scale-free relative slack; invariant under t -> c t and lambda -> c lambda,
/// so the simplex cannot drift into trivially tight degenerate corners.
inline double search_objective(const SlackReport& r) { return r.relative_slack(); }

class SearchProblem {
public:
    SearchProblem(Inequality q, const SearchConfig& cfg) : q_(q), cfg_(cfg) {}

    std::size_t dimension() const
    {
        const auto n = static_cast<std::size_t>(cfg_.n);
        return q_ == Inequality::lemma3 ? (n - 1) + 2 * n : n + 2 * n;
    }

    std::size_t slice() const
    {
        if (q_ == Inequality::lemma2_genesis2 || q_ == Inequality::lemma3) return 0;
        if (cfg_.index >= 0) return static_cast<std::size_t>(cfg_.index);
        return q_ == Inequality::lemma2_genesisi ? 1 : 0;
    }

    std::vector<double> initial_point(CounterRng& rng) const
    {
        const auto n = static_cast<std::size_t>(cfg_.n);
        std::vector<double> x;
        x.reserve(dimension());
        switch (q_) {
        case Inequality::lemma1:
        case Inequality::corollary17: {
            ConeSampleConfig c{cfg_.n, cfg_.k, 1.0, 0,
                               rng.uniform() < 0.5 ? SampleStrategy::rejection : SampleStrategy::boundary_biased};
            const Spectrum s = sample_cone(c, rng);
            x.assign(s.values().begin(), s.values().end());
            break;
        }
        case Inequality::lemma2_genesisi:
        case Inequality::lemma2_genesis2: {
            const Spectrum s = sample_positive_spectrum(n, rng);
            for (double v : s.values()) x.push_back(std::log(v));
            break;
        }
        case Inequality::lemma3: {
            const Spectrum s = sample_separated_spectrum(n, cfg_.mu, cfg_.delta, cfg_.delta_prime, rng);
            for (std::size_t j = 1; j < n; ++j) {
                const bool upper = j < static_cast<std::size_t>(cfg_.mu);
                const double frac = upper ? (s[j] - cfg_.delta) / (1.0 - cfg_.delta) : s[j] / cfg_.delta_prime;
                x.push_back(logit(std::clamp(frac, 1e-6, 1.0 - 1e-6)));
            }
            break;
        }
        }
        for (std::size_t p = 0; p < 2 * n; ++p) x.push_back(rng.normal());
        return x;
    }

    /// Maps a search vector to an evaluated report, or nullopt when the point
    /// leaves the precondition set.
    std::optional<SlackReport> evaluate(const std::vector<double>& x) const
    {
        const auto n = static_cast<std::size_t>(cfg_.n);
        std::vector<double> lam;
        std::size_t off = 0;
        switch (q_) {
        case Inequality::lemma1:
        case Inequality::corollary17:
            lam.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
            off = n;
            break;
        case Inequality::lemma2_genesisi:
        case Inequality::lemma2_genesis2:
            for (std::size_t j = 0; j < n; ++j) lam.push_back(std::exp(std::clamp(x[j], -30.0, 30.0)));
            off = n;
            break;
        case Inequality::lemma3:
            lam.push_back(1.0);
            for (std::size_t j = 1; j < n; ++j) {
                const bool upper = j < static_cast<std::size_t>(cfg_.mu);
                const double s = sigmoid(x[j - 1]);
                lam.push_back(upper ? cfg_.delta + (1.0 - cfg_.delta) * s : cfg_.delta_prime * s);
            }
            off = n - 1;
            break;
        }
        // every family is homogeneous in lambda; |lambda|_inf = 1 keeps the
        // fixed slack scale meaningful
        double lmax = 0.0;
        for (double v : lam) {
            if (!std::isfinite(v)) return std::nullopt;
            lmax = std::max(lmax, std::abs(v));
        }
        if (!(lmax > 0.0)) return std::nullopt;
        for (double& v : lam) v /= lmax;
        const Spectrum s(lam);
        const std::size_t i = slice();
        ThirdOrderData t(n);
        for (std::size_t p = 0; p < n; ++p) t(i, p, p) = cplx(x[off + 2 * p], x[off + 2 * p + 1]);

        try {
            switch (q_) {
            case Inequality::lemma1:
                if (!in_cone(s, cfg_.k)) return std::nullopt;
                return lemma1_slack(s, cfg_.k, cfg_.ell, cfg_.delta, i, t);
            case Inequality::corollary17: {
                if (!in_cone(s, cfg_.k)) return std::nullopt;
                const double psi = sigma(s, cfg_.k);
                return corollary17_slack(s, cfg_.k, corollary17_gain(cfg_.k, cfg_.delta, psi, cfg_.gain_factor), i, t,
                                         psi, cfg_.delta);
            }
            case Inequality::lemma2_genesisi:
            case Inequality::lemma2_genesis2: {
                EstimateParams p;
                p.m = cfg_.m;
                return lemma2_slack(s, cfg_.k, t, p, i);
            }
            case Inequality::lemma3: {
                EstimateParams p;
                p.m = cfg_.m;
                p.mu = cfg_.mu;
                p.delta = cfg_.delta;
                p.delta_prime = cfg_.delta_prime;
                p.psi_inf = sigma(s, cfg_.k);
                p.K = lemma3_gain(cfg_.k, cfg_.mu, p.psi_inf, cfg_.gain_factor);
                return lemma3_slack(s, cfg_.k, t, p);
            }
            }
        } catch (const precondition_error&) {
            return std::nullopt;
        } catch (const domain_error&) {
            return std::nullopt;
        }
        return std::nullopt;
    }

private:
    Inequality q_;
    SearchConfig cfg_;
};

} // namespace detail

inline void validate_search(Inequality q, const SearchConfig& cfg)
{
    if (cfg.n < 2) throw domain_error("search: n must be at least 2");
    if (cfg.k < 1 || cfg.k > cfg.n) throw domain_error("search: k outside [1, n]");
    if (cfg.restarts < 1) throw domain_error("search: restarts must be positive");
    if ((q == Inequality::lemma1 || q == Inequality::corollary17) && cfg.k < 2)
        throw domain_error("search: quotient inequalities need k >= 2");
    if (q == Inequality::lemma1 && !(cfg.ell >= 1 && cfg.ell < cfg.k)) throw domain_error("search: ell outside [1, k)");
    if ((q == Inequality::lemma2_genesisi || q == Inequality::lemma2_genesis2 || q == Inequality::lemma3) &&
        !is_m_admissible(cfg.m))
        throw precondition_error("search: m not admissible (m=" + std::to_string(cfg.m) + ")");
    if (cfg.index >= cfg.n) throw domain_error("search: index out of range");
    if (q == Inequality::lemma2_genesisi && cfg.index == 0) throw domain_error("search: genesisi needs index != 0");
    if (q == Inequality::lemma3) {
        if (cfg.mu < 1 || cfg.mu > cfg.k - 1) throw domain_error("search: mu outside [1, k-1]");
        if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw domain_error("search: delta outside (0, 1]");
        if (!(cfg.delta_prime > 0.0 && cfg.delta_prime < 1.0))
            throw domain_error("search: delta' must lie in (0, 1)");
    }
}

/// Worst (smallest normalized) slack over `restarts` Nelder-Mead runs started
/// from seeded precondition-respecting points. Deterministic in cfg.seed.
inline SlackReport adversarial_search(Inequality q, const SearchConfig& cfg)
{
    validate_search(q, cfg);
    const detail::SearchProblem problem(q, cfg);
    const auto restarts = static_cast<std::size_t>(cfg.restarts);
    std::vector<detail::Candidate> best(restarts);

    parallel_chunks(restarts, worker_count(), [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t r = b; r < e; ++r) {
            CounterRng rng(cfg.seed, r);
            std::vector<double> x0;
            std::optional<SlackReport> start;
            for (int attempt = 0; attempt < 50 && !start; ++attempt) {
                x0 = problem.initial_point(rng);
                start = problem.evaluate(x0);
            }
            if (!start) continue;
            auto objective = [&](const std::vector<double>& x) {
                const auto rep = problem.evaluate(x);
                return rep ? detail::search_objective(*rep) : std::numeric_limits<double>::infinity();
            };
            NelderMeadOptions opt;
            opt.max_evals = cfg.max_evals;
            const NelderMeadResult res = nelder_mead(objective, x0, opt);
            auto rep = problem.evaluate(res.x);
            if (!rep) rep = start;
            rep->sample_id = r;
            best[r].objective = detail::search_objective(*rep);
            best[r].report = std::move(rep);
        }
    });

    std::optional<SlackReport> worst;
    double worst_objective = std::numeric_limits<double>::infinity();
    for (auto& c : best) {
        if (!c.report) continue;
        if (!worst || c.objective < worst_objective) {
            worst = c.report;
            worst_objective = c.objective;
        }
    }
    if (!worst) throw sampling_error("adversarial_search: no feasible starting point found");
    worst->worst = true;
    worst->seed = cfg.seed;
    worst->name = to_string(q);
    return *worst;
}

struct DeltaPrimeThreshold {
    /// largest delta' tried at which the worst slack stayed above -tol
    double passing = 0.0;
    /// smallest delta' tried at which a violation was found (0 if none)
    double failing = 0.0;
    bool bracketed = false;
    std::optional<SlackReport> violation;
};

/// Bisects (in log scale) for the separation threshold of the pinched case:
/// the largest delta' in [lo, hi] whose adversarial worst slack is >= -tol.
inline DeltaPrimeThreshold find_delta_prime_threshold(SearchConfig cfg, double lo, double hi, int iterations = 12,
                                                      double tol = 1e-8)
{
    DeltaPrimeThreshold out;
    auto fails = [&](double dp) {
        cfg.delta_prime = dp;
        SlackReport r = adversarial_search(Inequality::lemma3, cfg);
        const bool bad = r.normalized_slack() < -tol;
        if (bad) out.violation = std::move(r);
        return bad;
    };
    if (!fails(hi)) {
        out.passing = hi;
        return out;
    }
    out.failing = hi;
    if (fails(lo)) {
        out.failing = lo;
        return out;
    }
    out.passing = lo;
    out.bracketed = true;
    for (int it = 0; it < iterations; ++it) {
        const double mid = std::sqrt(out.passing * out.failing);
        if (fails(mid))
            out.failing = mid;
        else
            out.passing = mid;
    }
    return out;
}

} // namespace hklab
