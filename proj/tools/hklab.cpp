// hklab: verification suites, adversarial searches, solves and monitors.
//
// Exit codes: 0 success, 1 violation or non-convergence, 2 invalid input.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <hklab/config.hpp>
#include <hklab/field_io.hpp>
#include <hklab/report_json.hpp>
#include <hklab/search.hpp>
#include <hklab/solve_json.hpp>
#include <hklab/solver.hpp>
#include <hklab/suites.hpp>

#ifndef HKLAB_VERSION
#define HKLAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInvalid = 2;

struct Common {
    std::string config;
    std::string out = "hklab-out";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    std::vector<int> n;
    std::vector<int> k;
    std::optional<int> m;
    std::optional<int> mu;
    std::optional<int> ell;
    std::vector<double> delta;
    std::optional<double> delta_prime;
    std::optional<int> restarts;
    std::optional<int> max_evals;
};

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << s;
}

class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv))
    {
        start_ = std::chrono::steady_clock::now();
    }

    void output(const fs::path& p) { outputs_.push_back(p.string()); }

    void write(const fs::path& dir, const std::string& config_path, std::optional<std::uint64_t> seed,
               const json& resolved) const
    {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json j{{"command", command_},
               {"argv", argv_},
               {"config_path", config_path.empty() ? json(nullptr) : json(config_path)},
               {"seed", seed ? json(*seed) : json(nullptr)},
               {"config", resolved},
               {"outputs", outputs_},
               {"tool_version", HKLAB_VERSION},
               {"wall_time_seconds", wall}};
        write_text(dir / "manifest.json", j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

fs::path prepare_out(const std::string& out)
{
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_jsonl(const fs::path& p, const std::vector<hklab::SlackReport>& records)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    for (const auto& r : records) os << hklab::to_json(r).dump() << '\n';
}

json suite_config_json(const hklab::SuiteConfig& c)
{
    return {{"suite", c.suite},         {"n", c.ns},
            {"k", c.ks},                {"delta", c.deltas},
            {"samples", c.samples},     {"seed", c.seed},
            {"m", c.m},                 {"ell", c.ell},
            {"mu", c.mu},               {"delta_prime", c.delta_prime},
            {"gain_factor", c.gain_factor}, {"mode", c.mode},
            {"restarts", c.restarts},   {"max_evals", c.max_evals}};
}

json search_config_json(const hklab::SearchConfig& c, const hklab::BisectConfig& b)
{
    json j{{"n", c.n},           {"k", c.k},
           {"ell", c.ell},       {"delta", c.delta},
           {"m", c.m},           {"mu", c.mu},
           {"delta_prime", c.delta_prime}, {"restarts", c.restarts},
           {"max_evals", c.max_evals}, {"seed", c.seed},
           {"gain_factor", c.gain_factor}, {"index", c.index}};
    if (b.enabled) j["bisect"] = {{"lo", b.lo}, {"hi", b.hi}, {"iterations", b.iterations}};
    return j;
}

int run_verify(const std::string& suite, const Common& o, const std::string& mode, const std::string& records,
               const std::vector<std::string>& argv)
{
    Manifest manifest("verify", argv);
    hklab::SuiteConfig c;
    bool have_seed = false;
    if (!o.config.empty()) {
        c = hklab::parse_suite_config(hklab::load_json_file(o.config));
        have_seed = true;
    }
    c.suite = suite;
    if (o.seed) {
        c.seed = *o.seed;
        have_seed = true;
    }
    if (!have_seed) throw hklab::config_error("a seed is required (--seed or 'seed' in --config)");
    if (o.samples) c.samples = *o.samples;
    if (!o.n.empty()) c.ns = o.n;
    if (!o.k.empty()) c.ks = o.k;
    if (!o.delta.empty()) c.deltas = o.delta;
    if (o.m) c.m = *o.m;
    if (o.mu) c.mu = *o.mu;
    if (o.ell) c.ell = *o.ell;
    if (o.delta_prime) c.delta_prime = *o.delta_prime;
    if (o.restarts) c.restarts = *o.restarts;
    if (o.max_evals) c.max_evals = *o.max_evals;
    if (!mode.empty()) c.mode = mode;
    if (!records.empty()) c.records = hklab::parse_record_mode(records);

    const hklab::SuiteResult r = hklab::run_suite(c);
    const fs::path dir = prepare_out(o.out);
    write_text(dir / "summary.json", hklab::summary_json(r).dump(2) + "\n");
    manifest.output(dir / "summary.json");
    write_jsonl(dir / "reports.jsonl", r.records);
    manifest.output(dir / "reports.jsonl");
    manifest.write(dir, o.config, c.seed, suite_config_json(hklab::detail::resolve_suite(c)));

    std::printf("%s [%s]: samples=%llu min_slack=%.6e worst_sample_id=%llu (%s) tolerance=%.1e -> %s\n",
                r.suite.c_str(), r.mode.c_str(), static_cast<unsigned long long>(r.samples), r.min_slack,
                static_cast<unsigned long long>(r.worst_sample_id), r.worst_group.c_str(), r.tolerance,
                r.passed ? "PASS" : "VIOLATION");
    return r.passed ? kExitOk : kExitViolation;
}

int run_search(const std::string& name, const Common& o, const hklab::BisectConfig& bisect_flags, bool bisect_flag,
               std::optional<int> index, const std::vector<std::string>& argv)
{
    Manifest manifest("search", argv);
    const auto q = hklab::parse_inequality(name);
    if (!q) throw hklab::config_error("unknown inequality '" + name + "'");
    hklab::SearchRunConfig c;
    bool have_seed = false;
    if (!o.config.empty()) {
        c = hklab::parse_search_config(hklab::load_json_file(o.config));
        have_seed = true;
    }
    if (o.seed) {
        c.search.seed = *o.seed;
        have_seed = true;
    }
    if (!have_seed) throw hklab::config_error("a seed is required (--seed or 'seed' in --config)");
    if (o.n.size() > 1 || o.k.size() > 1 || o.delta.size() > 1)
        throw hklab::config_error("search takes a single n, k and delta");
    if (!o.n.empty()) c.search.n = o.n[0];
    if (!o.k.empty()) c.search.k = o.k[0];
    if (!o.delta.empty()) c.search.delta = o.delta[0];
    if (o.m) c.search.m = *o.m;
    if (o.mu) c.search.mu = *o.mu;
    if (o.ell) c.search.ell = *o.ell;
    if (o.delta_prime) c.search.delta_prime = *o.delta_prime;
    if (o.restarts) c.search.restarts = *o.restarts;
    if (o.max_evals) c.search.max_evals = *o.max_evals;
    if (index) c.search.index = *index;
    if (bisect_flag) {
        c.bisect = bisect_flags;
        c.bisect.enabled = true;
    }
    if (c.bisect.enabled && *q != hklab::Inequality::lemma3)
        throw hklab::config_error("--bisect applies to lemma3 only");
    if (c.bisect.enabled && !(c.bisect.lo > 0.0 && c.bisect.lo < c.bisect.hi && c.bisect.hi < 1.0))
        throw hklab::config_error("bisection bracket must satisfy 0 < lo < hi < 1");
    hklab::validate_search(*q, c.search);

    constexpr double tol = 1e-8;
    std::vector<hklab::SlackReport> records;
    json out{{"inequality", name}, {"tolerance", tol}};
    const hklab::SlackReport worst = hklab::adversarial_search(*q, c.search);
    records.push_back(worst);
    out["worst"] = {{"normalized_slack", worst.normalized_slack()},
                    {"relative_slack", worst.relative_slack()},
                    {"slack", worst.slack},
                    {"scale", worst.scale},
                    {"sample_id", worst.sample_id},
                    {"within_tolerance", worst.normalized_slack() >= -tol}};
    std::printf("%s: restarts=%d worst normalized slack=%.6e (relative %.3e) -> %s\n", name.c_str(),
                c.search.restarts, worst.normalized_slack(), worst.relative_slack(),
                worst.normalized_slack() >= -tol ? "within tolerance" : "NEGATIVE");
    if (c.bisect.enabled) {
        const auto t = hklab::find_delta_prime_threshold(c.search, c.bisect.lo, c.bisect.hi, c.bisect.iterations, tol);
        out["threshold"] = {{"n", c.search.n},          {"k", c.search.k},
                            {"mu", c.search.mu},        {"delta", c.search.delta},
                            {"passing", t.passing},     {"failing", t.failing},
                            {"bracketed", t.bracketed}};
        if (t.violation) {
            auto v = *t.violation;
            v.worst = true;
            records.push_back(v);
        }
        std::printf("delta' threshold (n=%d k=%d mu=%d delta=%g): passing=%.6g failing=%.6g%s\n", c.search.n,
                    c.search.k, c.search.mu, c.search.delta, t.passing, t.failing,
                    t.bracketed ? "" : (t.failing == 0.0 ? " (no violation up to hi)" : " (fails at lo)"));
    }
    const fs::path dir = prepare_out(o.out);
    write_text(dir / "search.json", out.dump(2) + "\n");
    manifest.output(dir / "search.json");
    write_jsonl(dir / "reports.jsonl", records);
    manifest.output(dir / "reports.jsonl");
    manifest.write(dir, o.config, c.search.seed, search_config_json(c.search, c.bisect));
    return kExitOk;
}

hklab::ProblemConfig load_problem(const Common& o, std::optional<int> N)
{
    if (o.config.empty()) throw hklab::config_error("--config is required");
    json j = hklab::load_json_file(o.config);
    if (o.seed) j["seed"] = *o.seed;
    if (N) j["N"] = *N;
    if (!o.n.empty()) j["n"] = o.n[0];
    if (!o.k.empty()) j["k"] = o.k[0];
    return hklab::parse_problem_config(j);
}

int run_solve(const Common& o, std::optional<int> N, const std::vector<std::string>& argv)
{
    Manifest manifest("solve", argv);
    const hklab::ProblemConfig pc = load_problem(o, N);
    const fs::path dir = prepare_out(o.out);
    json report;
    int code = kExitOk;
    try {
        hklab::ProblemResult r = hklab::solve_problem(pc.spec);
        report = hklab::to_json(r, pc.spec);
        hklab::write_field((dir / "solution.hkf").string(), r.u);
        manifest.output(dir / "solution.hkf");
        manifest.output(dir / "solution.hkf.json");
        write_text(dir / "iterations.csv", hklab::iterations_csv(r.report));
        manifest.output(dir / "iterations.csv");
        std::printf("solve n=%d k=%d N=%d: %s after %d iterations, residual %.3e", pc.spec.n, pc.spec.k, pc.spec.N,
                    r.report.converged ? "converged" : "NOT converged", r.report.iterations,
                    r.report.final_residual_inf);
        if (r.report.error_inf) std::printf(", |u - u*|_inf %.3e", *r.report.error_inf);
        std::printf(", min sigma margin %.3e\n", r.report.min_sigma_margin);
        if (!r.report.converged) {
            std::fprintf(stderr, "non-convergence: %s\n", r.report.message.c_str());
            code = kExitViolation;
        }
    } catch (const hklab::ConeViolation& e) {
        std::fprintf(stderr, "cone violation: %s (%zu points reported)\n", e.what(), e.points().size());
        report = {{"converged", false}, {"message", std::string("cone violation: ") + e.what()},
                  {"violating_points", e.points()}};
        code = kExitViolation;
    }
    write_text(dir / "solve_report.json", report.dump(2) + "\n");
    manifest.output(dir / "solve_report.json");
    manifest.write(dir, o.config, pc.seed, json::object());
    return code;
}

int run_monitor(const Common& o, const std::string& field_path, std::optional<int> N,
                const std::vector<std::string>& argv)
{
    Manifest manifest("monitor", argv);
    const hklab::ProblemConfig pc = load_problem(o, N);
    const hklab::ProblemSpec& s = pc.spec;
    hklab::TorusField u;
    if (!field_path.empty()) {
        u = hklab::read_field(field_path);
        if (u.grid.n != s.n) throw hklab::config_error("field dimension does not match the config");
    } else {
        u = hklab::manufactured_profile(hklab::TorusGrid(s.n, s.N), s.amplitude, s.wavenumber);
    }
    const hklab::MonitorReport m = hklab::monitor(u, s.chi, s.k, s.monitor);
    constexpr double tol = 1e-9;
    json j = hklab::to_json(m, 2 * s.n);
    j["n"] = u.grid.n;
    j["N"] = u.grid.N;
    j["k"] = s.k;
    j["h"] = u.grid.h();
    j["trace_bound_tolerance"] = tol;
    j["trace_bound_holds"] = m.trace_bound_min_margin >= -tol;
    const fs::path dir = prepare_out(o.out);
    write_text(dir / "monitor.json", j.dump(2) + "\n");
    manifest.output(dir / "monitor.json");
    manifest.write(dir, o.config, pc.seed, json::object());
    std::printf("monitor N=%d: lambda1_max=%.6g G_max=%.6g |grad G| at argmax=%.3e (h=%.4g) trace bound margin=%.3e\n",
                u.grid.N, m.lambda1_max, m.G_max, m.G_argmax_gradient_norm, u.grid.h(), m.trace_bound_min_margin);
    return m.trace_bound_min_margin >= -tol ? kExitOk : kExitViolation;
}

void add_common(CLI::App* sub, Common& o, bool lists)
{
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--samples", o.samples, "samples per group");
    if (lists) {
        sub->add_option("--n", o.n, "complex dimension(s)")->delimiter(',');
        sub->add_option("--k", o.k, "Hessian order(s)")->delimiter(',');
        sub->add_option("--delta", o.delta, "delta value(s)")->delimiter(',');
    } else {
        sub->add_option("--n", o.n, "complex dimension")->expected(1);
        sub->add_option("--k", o.k, "Hessian order")->expected(1);
    }
    sub->add_option("--m", o.m, "power m in P_m");
    sub->add_option("--mu", o.mu, "pinching index");
    sub->add_option("--ell", o.ell, "lower order in the quotient inequality");
    sub->add_option("--delta-prime", o.delta_prime, "separation threshold delta'");
    sub->add_option("--restarts", o.restarts, "Nelder-Mead restarts");
    sub->add_option("--max-evals", o.max_evals, "evaluations per restart");
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"hklab: complex Hessian estimate toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", HKLAB_VERSION);

    Common o;
    std::string suite, inequality, mode, records, field;
    std::optional<int> index, gridN;
    hklab::BisectConfig bisect;
    bool bisect_flag = false;

    auto* verify = app.add_subcommand("verify", "run a randomized verification suite");
    verify->add_option("suite", suite, "identities|lemma1|corollary17|lemma2|lemma3|subchecks|cascade")->required();
    add_common(verify, o, true);
    verify->add_option("--mode", mode, "sample (default) or search");
    verify->add_option("--records", records, "worst (default), all or none");

    auto* search = app.add_subcommand("search", "adversarial search for the worst slack");
    search->add_option("inequality", inequality, "lemma1|corollary17|lemma2_genesisi|lemma2_genesis2|lemma3")
        ->required();
    add_common(search, o, true);
    search->add_option("--index", index, "data slice i (0-based)");
    search->add_flag("--bisect", bisect_flag, "bisect for the lemma3 delta' threshold");
    search->add_option("--bisect-lo", bisect.lo, "lower end of the delta' bracket");
    search->add_option("--bisect-hi", bisect.hi, "upper end of the delta' bracket");
    search->add_option("--bisect-iterations", bisect.iterations, "bisection steps");

    auto* solve = app.add_subcommand("solve", "damped Newton solve from a problem config");
    add_common(solve, o, false);
    solve->add_option("--N", gridN, "override the grid size");

    auto* mon = app.add_subcommand("monitor", "test-function diagnostics for a field");
    add_common(mon, o, false);
    mon->add_option("--field", field, "HKF1 field (default: the manufactured profile)");
    mon->add_option("--N", gridN, "override the grid size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*verify) return run_verify(suite, o, mode, records, args);
        if (*search) return run_search(inequality, o, bisect, bisect_flag, index, args);
        if (*solve) return run_solve(o, gridN, args);
        if (*mon) return run_monitor(o, field, gridN, args);
    } catch (const hklab::config_error& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const hklab::precondition_error& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const hklab::ConeViolation& e) {
        std::fprintf(stderr, "cone violation: %s\n", e.what());
        return kExitViolation;
    } catch (const hklab::domain_error& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitViolation;
    }
    return kExitInvalid;
}
