#pragma once

// Randomized verification suites. Each suite is a list of groups (one per
// parameter combination); a group draws `samples` points, sample s of group g
// from CounterRng(group_seed(seed, g), s), so results do not depend on the
// thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cone.hpp"
#include "harness.hpp"
#include "parallel.hpp"
#include "report_json.hpp"
#include "sampling.hpp"
#include "search.hpp"
#include "symfun.hpp"

namespace hklab {

enum class RecordMode { none, worst, all };

struct SuiteConfig {
    std::string suite;
    /// empty means the suite default
    std::vector<int> ns;
    std::vector<int> ks;
    std::vector<double> deltas;
    /// 0 means the suite default
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    int m = 7;
    int ell = 1;
    /// 0 means every mu in [1, k-1]
    int mu = 0;
    double delta_prime = 0.01;
    double gain_factor = 1.0 + 1e-6;
    /// "sample" or "search"
    std::string mode = "sample";
    int restarts = 200;
    int max_evals = 1500;
    RecordMode records = RecordMode::worst;
};

struct GroupSummary {
    std::string label;
    std::uint64_t samples = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    std::uint64_t worst_sample_id = 0;
};

struct SuiteResult {
    std::string suite;
    std::string mode;
    std::uint64_t samples = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    std::uint64_t worst_sample_id = 0;
    std::string worst_group;
    double tolerance = 0.0;
    bool passed = false;
    std::vector<GroupSummary> groups;
    std::vector<SlackReport> records;
};

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"identities", "lemma1",    "corollary17", "lemma2",
                                                "lemma3",     "subchecks", "cascade"};
    return names;
}

inline bool is_suite_name(const std::string& s)
{
    const auto& v = suite_names();
    return std::find(v.begin(), v.end(), s) != v.end();
}

inline std::uint64_t group_seed(std::uint64_t seed, std::size_t group)
{
    return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(group) + 1));
}

namespace detail {

/// Collects the worst (smallest score) report of a chunk, and optionally all.
class Sink {
public:
    explicit Sink(bool keep_all) : keep_all_(keep_all) {}

    void begin_sample(std::uint64_t sample_id, std::uint64_t seed)
    {
        sample_id_ = sample_id;
        seed_ = seed;
    }

    bool wants(double score) const { return keep_all_ || score < best_score_; }

    void push(SlackReport r, double score)
    {
        r.sample_id = sample_id_;
        r.seed = seed_;
        if (score < best_score_) {
            best_score_ = score;
            best_ = r;
        }
        if (keep_all_) all_.push_back(std::move(r));
    }

    double best_score() const { return best_score_; }
    const std::optional<SlackReport>& best() const { return best_; }
    std::vector<SlackReport>& all() { return all_; }

private:
    bool keep_all_;
    std::uint64_t sample_id_ = 0;
    std::uint64_t seed_ = 0;
    double best_score_ = std::numeric_limits<double>::infinity();
    std::optional<SlackReport> best_;
    std::vector<SlackReport> all_;
};

/// eval(sample_id, rng, sink) pushes one or more scored reports per sample.
template <typename Eval>
void run_group(SuiteResult& out, std::string label, std::size_t group_index, std::uint64_t samples,
               std::uint64_t seed, RecordMode records, Eval&& eval)
{
    const std::uint64_t gseed = group_seed(seed, group_index);
    const unsigned workers = worker_count();
    const std::size_t count = static_cast<std::size_t>(samples);
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, count));
    std::vector<Sink> sinks(chunks, Sink(records == RecordMode::all));
    const std::size_t per = (count + chunks - 1) / chunks;
    parallel_chunks(chunks, workers, [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t c = b; c < e; ++c) {
            const std::size_t lo = std::min(count, c * per), hi = std::min(count, lo + per);
            for (std::size_t s = lo; s < hi; ++s) {
                CounterRng rng(gseed, s);
                sinks[c].begin_sample(s, seed);
                eval(static_cast<std::uint64_t>(s), rng, sinks[c]);
            }
        }
    });

    GroupSummary g;
    g.label = std::move(label);
    g.samples = samples;
    std::optional<SlackReport> worst;
    for (auto& sink : sinks) {
        if (sink.best() && sink.best_score() < g.min_slack) {
            g.min_slack = sink.best_score();
            worst = sink.best();
        }
        if (records == RecordMode::all)
            for (auto& r : sink.all()) out.records.push_back(std::move(r));
    }
    if (worst) {
        g.worst_sample_id = worst->sample_id;
        worst->worst = true;
        if (records == RecordMode::worst) out.records.push_back(*worst);
    }
    out.samples += samples;
    if (g.min_slack < out.min_slack) {
        out.min_slack = g.min_slack;
        out.worst_sample_id = g.worst_sample_id;
        out.worst_group = g.label;
    }
    out.groups.push_back(std::move(g));
}

/// Record for a pointwise identity lhs == rhs, scored by -|lhs - rhs| / scale.
inline SlackReport identity_record(const char* name, double lhs, double rhs, double scale, const Spectrum& lambda,
                                   int k, std::size_t index)
{
    SlackReport r;
    r.name = name;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = lhs - rhs;
    r.scale = scale;
    r.magnitude = std::abs(lhs) + std::abs(rhs);
    r.k = k;
    r.index = index;
    r.lambda.assign(lambda.values().begin(), lambda.values().end());
    return r;
}

inline std::string label_of(std::initializer_list<std::pair<const char*, double>> kv)
{
    std::string s;
    for (const auto& [key, v] : kv) {
        if (!s.empty()) s += ' ';
        s += key;
        s += '=';
        const double r = std::round(v);
        s += (r == v) ? std::to_string(static_cast<long long>(r)) : nlohmann::json(v).dump();
    }
    return s;
}

inline std::vector<int> or_default(const std::vector<int>& v, std::vector<int> d) { return v.empty() ? d : v; }

inline std::vector<double> or_default(const std::vector<double>& v, std::vector<double> d)
{
    return v.empty() ? d : v;
}

/// Fills the per-suite default groups and samples and checks the result.
inline SuiteConfig resolve_suite(SuiteConfig c)
{
    if (!is_suite_name(c.suite)) throw domain_error("unknown suite '" + c.suite + "'");
    if (c.mode != "sample" && c.mode != "search") throw domain_error("mode must be 'sample' or 'search'");
    const bool searchable = c.suite == "lemma1" || c.suite == "corollary17" || c.suite == "lemma2" ||
                            c.suite == "lemma3";
    if (c.mode == "search" && !searchable) throw domain_error("suite '" + c.suite + "' has no search mode");

    if (c.suite == "identities") {
        c.ns = or_default(c.ns, {2, 3, 4, 5, 6});
        if (!c.samples) c.samples = 10000;
    } else if (c.suite == "lemma1" || c.suite == "corollary17") {
        c.ns = or_default(c.ns, {3, 4, 5});
        c.ks = or_default(c.ks, {2, 3});
        c.deltas = or_default(c.deltas, {0.5, 1.0});
        if (!c.samples) c.samples = 100000;
    } else if (c.suite == "lemma2") {
        c.ns = or_default(c.ns, {3, 4, 5});
        c.ks = or_default(c.ks, {2, 3});
        if (!c.samples) c.samples = 100000;
    } else if (c.suite == "lemma3") {
        c.ns = or_default(c.ns, {3, 4, 5});
        c.ks = or_default(c.ks, {2, 3});
        c.deltas = or_default(c.deltas, {0.5});
        if (!c.samples) c.samples = 10000;
    } else if (c.suite == "subchecks") {
        c.ns = or_default(c.ns, {3, 4, 5, 6});
        if (!c.samples) c.samples = 100000;
    } else if (c.suite == "cascade") {
        c.ns = or_default(c.ns, {3, 4, 5});
        if (!c.samples) c.samples = 10000;
    }

    for (int n : c.ns)
        if (n < 2) throw domain_error("n must be at least 2");
    for (int k : c.ks)
        if (k < 1) throw domain_error("k must be at least 1");
    for (double d : c.deltas)
        if (!(d > 0.0)) throw domain_error("delta must be positive");
    if ((c.suite == "lemma2" || c.suite == "lemma3") && !is_m_admissible(c.m))
        throw precondition_error("m not admissible (m=" + std::to_string(c.m) + ", need m^2 <= (2m-4)(m-2))");
    if (c.suite == "lemma3") {
        for (double d : c.deltas)
            if (d > 1.0) throw domain_error("pinching delta must be at most 1");
        if (!(c.delta_prime > 0.0 && c.delta_prime < 1.0)) throw domain_error("delta' must lie in (0, 1)");
    }
    if (c.suite == "corollary17")
        for (int k : c.ks)
            for (double d : c.deltas)
                if (d > k) throw domain_error("corollary17 needs delta <= k");
    if (c.mode == "search" && c.restarts < 1) throw domain_error("restarts must be positive");
    return c;
}

inline double power_floor(double base, int degree) { return std::pow(base, std::max(degree, 0)); }

inline Spectrum draw_general_spectrum(std::size_t n, std::uint64_t s, CounterRng& rng)
{
    const double scale = std::pow(10.0, rng.uniform(-1.0, 1.0));
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    if (s % 3 == 2) v[1] = v[0];
    return Spectrum(std::move(v));
}

inline Spectrum draw_positive_spectrum(std::size_t n, std::uint64_t s, CounterRng& rng)
{
    const double scale = std::pow(10.0, rng.uniform(-1.0, 1.0));
    Spectrum l = sample_positive_spectrum(n, rng, scale);
    if (s % 3 != 2) return l;
    std::vector<double> v(l.values().begin(), l.values().end());
    v[1] = v[0];
    return Spectrum(std::move(v));
}

inline Spectrum draw_cone_spectrum(int n, int k, std::uint64_t s, CounterRng& rng)
{
    ConeSampleConfig cfg;
    cfg.n = n;
    cfg.k = k;
    cfg.scale = std::pow(10.0, rng.uniform(-1.0, 1.0));
    cfg.strategy = (s % 2) ? SampleStrategy::boundary_biased : SampleStrategy::rejection;
    return sample_cone(cfg, rng);
}

inline void run_identities(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    for (int n : c.ns) {
        const auto nn = static_cast<std::size_t>(n);
        run_group(out, label_of({{"n", n}}), gi++, c.samples, c.seed, c.records,
                  [&](std::uint64_t s, CounterRng& rng, Sink& sink) {
                      const Spectrum l = draw_general_spectrum(nn, s, rng);
                      const double base = 1.0 + l.max_abs();
                      for (int k = 1; k <= n; ++k) {
                          if (!c.ks.empty() && std::find(c.ks.begin(), c.ks.end(), k) == c.ks.end()) continue;
                          const SymJet j = jet(l, k);
                          const double fk = power_floor(base, k);
                          const double fk1 = power_floor(base, k - 1);
                          auto offer = [&](const char* name, double lhs, double rhs, double scale, std::size_t idx) {
                              const double score = -std::abs(lhs - rhs) / scale;
                              if (sink.wants(score)) sink.push(identity_record(name, lhs, rhs, scale, l, k, idx), score);
                          };

                          double euler = 0.0;
                          for (std::size_t p = 0; p < nn; ++p) euler += l[p] * j.grad[p];
                          offer("identity_euler", euler, k * j.value, fk, 0);
                          offer("identity_trace", j.trace_grad(), (n - k + 1) * sigma(l, k - 1), fk1, 0);

                          for (std::size_t i = 0; i < nn; ++i) {
                              for (std::size_t p = 0; p < nn; ++p) {
                                  if (p == i) continue;
                                  const double ex_ip = k - 1 <= n - 2 ? sigma_excluding(l, k - 1, {i, p}) : 0.0;
                                  const double ex2_ip = k >= 2 ? sigma_excluding(l, k - 2, {i, p}) : 0.0;
                                  offer("identity_exclusion", j.grad[i], ex_ip + l[p] * ex2_ip, fk1, i * nn + p);
                                  offer("identity_divided_difference", j.grad[p] - j.grad[i],
                                        j.quotient(p, i) * (l[p] - l[i]), fk, i * nn + p);
                                  offer("identity_quotient_closed_form", j.quotient(p, i), -j.hess_diag(p, i), fk1,
                                        i * nn + p);
                                  offer("identity_second_derivative", l[p] * j.hess_diag(p, i) + j.grad[p],
                                        j.grad[i] - ex_ip + j.grad[p], fk1, i * nn + p);
                              }
                          }
                      }
                  });
    }
}

inline void run_quotient_samples(const SuiteConfig& c, SuiteResult& out, bool corollary)
{
    std::size_t gi = 0;
    for (int n : c.ns)
        for (int k : c.ks) {
            if (k < 2 || k > n) continue;
            for (double delta : c.deltas) {
                const auto nn = static_cast<std::size_t>(n);
                run_group(out, label_of({{"n", n}, {"k", k}, {"ell", c.ell}, {"delta", delta}}), gi++, c.samples,
                          c.seed, c.records, [&](std::uint64_t s, CounterRng& rng, Sink& sink) {
                              const Spectrum w = draw_cone_spectrum(n, k, s, rng);
                              const ThirdOrderData t = sample_mixed_third_order(nn, rng);
                              const double psi = corollary ? sigma(w, k) : 0.0;
                              const double K = corollary ? corollary17_gain(k, delta, psi, c.gain_factor) : 0.0;
                              for (std::size_t i = 0; i < nn; ++i) {
                                  SlackReport r = corollary ? corollary17_slack(w, k, K, i, t, psi, delta)
                                                            : lemma1_slack(w, k, c.ell, delta, i, t);
                                  const double score = r.normalized_slack();
                                  if (sink.wants(score)) sink.push(std::move(r), score);
                              }
                          });
            }
        }
}

inline void run_lemma2_samples(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    EstimateParams params;
    params.m = c.m;
    for (int n : c.ns)
        for (int k : c.ks) {
            if (k > n) continue;
            const auto nn = static_cast<std::size_t>(n);
            run_group(out, label_of({{"n", n}, {"k", k}, {"m", c.m}}), gi++, c.samples, c.seed, c.records,
                      [&](std::uint64_t s, CounterRng& rng, Sink& sink) {
                          const Spectrum l = draw_positive_spectrum(nn, s, rng);
                          const ThirdOrderData t = sample_mixed_third_order(nn, rng);
                          for (std::size_t i = 0; i < nn; ++i) {
                              SlackReport r = lemma2_slack(l, k, t, params, i);
                              const double score = r.normalized_slack();
                              if (sink.wants(score)) sink.push(std::move(r), score);
                          }
                      });
        }
}

inline std::vector<int> mus_for(const SuiteConfig& c, int k)
{
    std::vector<int> out;
    for (int mu = 1; mu <= k - 1; ++mu)
        if (c.mu == 0 || c.mu == mu) out.push_back(mu);
    return out;
}

inline void run_lemma3_samples(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    for (int n : c.ns)
        for (int k : c.ks) {
            if (k < 2 || k > n) continue;
            for (int mu : mus_for(c, k))
                for (double delta : c.deltas) {
                    const auto nn = static_cast<std::size_t>(n);
                    run_group(out,
                              label_of({{"n", n}, {"k", k}, {"mu", mu}, {"delta", delta},
                                        {"delta_prime", c.delta_prime}}),
                              gi++, c.samples, c.seed, c.records, [&](std::uint64_t, CounterRng& rng, Sink& sink) {
                                  const Spectrum l = sample_separated_spectrum(nn, mu, delta, c.delta_prime, rng);
                                  const ThirdOrderData t = sample_mixed_third_order(nn, rng);
                                  EstimateParams p;
                                  p.m = c.m;
                                  p.mu = mu;
                                  p.delta = delta;
                                  p.delta_prime = c.delta_prime;
                                  p.psi_inf = sigma(l, k);
                                  p.K = lemma3_gain(k, mu, p.psi_inf, c.gain_factor);
                                  SlackReport r = lemma3_slack(l, k, t, p);
                                  const double score = r.normalized_slack();
                                  if (sink.wants(score)) sink.push(std::move(r), score);
                              });
                }
        }
}

inline void run_search(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    auto one = [&](Inequality q, SearchConfig sc, std::string label) {
        sc.seed = group_seed(c.seed, gi++);
        sc.restarts = c.restarts;
        sc.max_evals = c.max_evals;
        sc.gain_factor = c.gain_factor;
        SlackReport r = adversarial_search(q, sc);
        r.seed = c.seed;
        GroupSummary g;
        g.label = std::move(label);
        g.samples = static_cast<std::uint64_t>(c.restarts);
        g.min_slack = r.normalized_slack();
        g.worst_sample_id = r.sample_id;
        if (c.records != RecordMode::none) out.records.push_back(r);
        out.samples += g.samples;
        if (g.min_slack < out.min_slack) {
            out.min_slack = g.min_slack;
            out.worst_sample_id = g.worst_sample_id;
            out.worst_group = g.label;
        }
        out.groups.push_back(std::move(g));
    };
    for (int n : c.ns)
        for (int k : c.ks) {
            if (k > n) continue;
            SearchConfig sc;
            sc.n = n;
            sc.k = k;
            sc.m = c.m;
            sc.ell = c.ell;
            sc.delta_prime = c.delta_prime;
            if (c.suite == "lemma1" || c.suite == "corollary17") {
                if (k < 2) continue;
                for (double d : c.deltas) {
                    sc.delta = d;
                    one(c.suite == "lemma1" ? Inequality::lemma1 : Inequality::corollary17, sc,
                        label_of({{"n", n}, {"k", k}, {"ell", c.ell}, {"delta", d}}));
                }
            } else if (c.suite == "lemma2") {
                one(Inequality::lemma2_genesisi, sc, label_of({{"n", n}, {"k", k}, {"m", c.m}, {"i", 2}}));
                one(Inequality::lemma2_genesis2, sc, label_of({{"n", n}, {"k", k}, {"m", c.m}, {"i", 1}}));
            } else if (c.suite == "lemma3") {
                if (k < 2) continue;
                for (int mu : mus_for(c, k))
                    for (double d : c.deltas) {
                        sc.mu = mu;
                        sc.delta = d;
                        one(Inequality::lemma3, sc,
                            label_of({{"n", n}, {"k", k}, {"mu", mu}, {"delta", d}, {"delta_prime", c.delta_prime}}));
                    }
            }
        }
}

/// Newton-MacLaurin on Gamma_mu samples, then the separated-case measurements.
inline void run_subchecks(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    const std::vector<int> nm_mus = c.mu ? std::vector<int>{c.mu} : std::vector<int>{2, 3};
    for (int n : c.ns)
        for (int mu : nm_mus) {
            if (mu < 2 || mu > n) continue;
            const auto nn = static_cast<std::size_t>(n);
            run_group(out, label_of({{"check", 0}, {"n", n}, {"mu", mu}}), gi++, c.samples, c.seed, c.records,
                      [&](std::uint64_t s, CounterRng& rng, Sink& sink) {
                          const Spectrum l = draw_cone_spectrum(n, mu, s, rng);
                          const SymJet j = jet(l, mu);
                          const double scale = power_floor(1.0 + l.max_abs(), 2 * mu - 2);
                          const auto v = l.values();
                          for (std::size_t p = 0; p < nn; ++p)
                              for (std::size_t q = p + 1; q < nn; ++q) {
                                  const double f = j.grad[p] * j.grad[q] - j.value * j.hess_diag(p, q);
                                  const double a = detail::esf_value(v, mu - 1, p, q);
                                  const double pq =
                                      a * a - detail::esf_value(v, mu, p, q) * detail::esf_value(v, mu - 2, p, q);
                                  const double score_nm = f / scale;
                                  if (sink.wants(score_nm)) {
                                      SlackReport r = identity_record("newton_maclaurin", f, 0.0, scale, l, mu, p * nn + q);
                                      r.params.mu = mu;
                                      sink.push(std::move(r), score_nm);
                                  }
                                  const double score_id = -std::abs(f - pq) / scale;
                                  if (sink.wants(score_id)) {
                                      SlackReport r = identity_record("pq_identity", f, pq, scale, l, mu, p * nn + q);
                                      r.params.mu = mu;
                                      sink.push(std::move(r), score_id);
                                  }
                              }
                      });
        }
    const std::vector<int> sep_mus = c.mu ? std::vector<int>{c.mu} : std::vector<int>{1, 2, 3};
    for (int n : c.ns)
        for (int mu : sep_mus) {
            const int k = mu + 1;
            if (k > n) continue;
            const auto nn = static_cast<std::size_t>(n);
            run_group(out, label_of({{"check", 1}, {"n", n}, {"k", k}, {"mu", mu}}), gi++, c.samples, c.seed,
                      c.records, [&](std::uint64_t, CounterRng& rng, Sink& sink) {
                          const Spectrum l = sample_separated_spectrum(nn, mu, 0.5, c.delta_prime, rng);
                          const auto sub = lemma3_subchecks(l, k, mu);
                          const double scale = power_floor(1.0 + l.max_abs(), 2 * mu - 2);
                          double score;
                          const char* name;
                          double lhs;
                          if (mu == 1) {
                              name = "F_equals_one";
                              lhs = sub.at("F_max_deviation_from_one");
                              score = -lhs / scale;
                          } else {
                              name = "F_nonnegative";
                              lhs = sub.at("F_min");
                              score = lhs / scale;
                          }
                          if (sink.wants(score)) {
                              SlackReport r = identity_record(name, lhs, 0.0, scale, l, k, 0);
                              r.params.mu = mu;
                              r.params.delta_prime = c.delta_prime;
                              sink.push(std::move(r), score);
                          }
                      });
        }
}

/// Every branch of the pinching walk must deliver its stated conclusion.
inline void run_cascade(const SuiteConfig& c, SuiteResult& out)
{
    std::size_t gi = 0;
    for (int n : c.ns)
        for (int k = 2; k <= n; ++k) {
            if (!c.ks.empty() && std::find(c.ks.begin(), c.ks.end(), k) == c.ks.end()) continue;
            const auto nn = static_cast<std::size_t>(n);
            run_group(out, label_of({{"n", n}, {"k", k}}), gi++, c.samples, c.seed, c.records,
                      [&](std::uint64_t, CounterRng& rng, Sink& sink) {
                          // mostly near-pinched spectra so both branches occur
                          std::vector<double> v(nn);
                          const double spread = rng.uniform(0.0, 3.0);
                          for (double& x : v) x = std::pow(10.0, -spread * rng.uniform());
                          const Spectrum l(std::move(v));
                          std::vector<double> deltas(static_cast<std::size_t>(k - 1));
                          for (double& d : deltas) d = std::pow(10.0, rng.uniform(-3.0, -0.01));
                          std::sort(deltas.begin(), deltas.end(), std::greater<>());
                          const double sk = sigma(l, k);
                          const CascadeDiagnosis d = pinching_cascade(l, k, sk, deltas);
                          const double l1 = l[0];
                          double lhs, rhs, scale;
                          const char* name;
                          std::size_t idx = 0;
                          if (d.all_pinched) {
                              // sigma_k >= lambda_1..lambda_k >= delta_k^{k-1} lambda_1^k
                              const double a = sk - d.leading_product;
                              const double b = d.leading_product - std::pow(deltas.back(), k - 1) * std::pow(l1, k);
                              scale = power_floor(1.0 + l1, k);
                              name = "cascade_pinched_chain";
                              lhs = std::min(a, b);
                              rhs = 0.0;
                              const double c2 = d.lambda1_bound_sharp - l1;
                              if (c2 / (1.0 + l1) < lhs / scale) {
                                  name = "cascade_pinched_bound";
                                  lhs = c2;
                                  scale = 1.0 + l1;
                              }
                          } else {
                              const auto mu = static_cast<std::size_t>(d.mu);
                              idx = mu;
                              const double a = l[mu - 1] - d.delta * l1;
                              const double b = d.delta_prime * l1 - l[mu];
                              name = "cascade_separated_hypotheses";
                              lhs = b > 0.0 ? std::min(a, b) : -1.0; // the separation is strict
                              rhs = 0.0;
                              scale = 1.0 + l1;
                          }
                          const double score = (lhs - rhs) / scale;
                          if (sink.wants(score)) {
                              SlackReport r = identity_record(name, lhs, rhs, scale, l, k, idx);
                              r.params.mu = std::max(d.mu, 1);
                              r.params.delta = d.delta;
                              r.params.delta_prime = d.delta_prime;
                              sink.push(std::move(r), score);
                          }
                      });
        }
}

} // namespace detail

/// Tolerance the suite's min slack is gated against.
inline double suite_tolerance(const std::string& suite, const std::string& mode)
{
    if (suite == "identities") return 1e-12;
    if (mode == "search") return 1e-8;
    if (suite == "lemma3") return 1e-8;
    return kSlackTolerance;
}

inline SuiteResult run_suite(const SuiteConfig& raw)
{
    const SuiteConfig c = detail::resolve_suite(raw);
    SuiteResult out;
    out.suite = c.suite;
    out.mode = c.mode;
    out.tolerance = suite_tolerance(c.suite, c.mode);
    if (c.mode == "search")
        detail::run_search(c, out);
    else if (c.suite == "identities")
        detail::run_identities(c, out);
    else if (c.suite == "lemma1")
        detail::run_quotient_samples(c, out, false);
    else if (c.suite == "corollary17")
        detail::run_quotient_samples(c, out, true);
    else if (c.suite == "lemma2")
        detail::run_lemma2_samples(c, out);
    else if (c.suite == "lemma3")
        detail::run_lemma3_samples(c, out);
    else if (c.suite == "subchecks")
        detail::run_subchecks(c, out);
    else if (c.suite == "cascade")
        detail::run_cascade(c, out);
    if (out.groups.empty()) throw domain_error("suite '" + c.suite + "': no valid (n, k) combination");
    out.passed = out.min_slack >= -out.tolerance;
    return out;
}

inline nlohmann::json summary_json(const SuiteResult& r)
{
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.groups)
        groups.push_back({{"label", g.label},
                          {"samples", g.samples},
                          {"min_slack", g.min_slack},
                          {"worst_sample_id", g.worst_sample_id}});
    return {{"suite", r.suite},         {"mode", r.mode},
            {"samples", r.samples},     {"min_slack", r.min_slack},
            {"worst_sample_id", r.worst_sample_id}, {"worst_group", r.worst_group},
            {"tolerance", r.tolerance}, {"passed", r.passed},
            {"groups", std::move(groups)}};
}

} // namespace hklab
