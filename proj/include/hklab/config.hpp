#pragma once

// JSON configs for solve/monitor runs and for suites and searches. Unknown
// keys are rejected so that typos fail loudly. Every config carries a seed.

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "search.hpp"
#include "solver.hpp"
#include "suites.hpp"

namespace hklab {

using nlohmann::json;

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline json load_json_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config '" + path + "'");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw config_error("config '" + path + "' is not valid JSON: " + e.what());
    }
}

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw config_error(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw config_error("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error("bad value for '" + std::string(key) + "' in " + where);
    }
}

/// Accepts a number or a list of numbers.
template <typename T>
void read_list(const json& j, const char* key, std::vector<T>& out, const std::string& where)
{
    if (!j.contains(key)) return;
    try {
        const json& v = j.at(key);
        out = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
    } catch (const json::exception&) {
        throw config_error("bad value for '" + std::string(key) + "' in " + where);
    }
}

inline std::uint64_t require_seed(const json& j, const std::string& where)
{
    if (!j.contains("seed")) throw config_error(where + ": 'seed' is required");
    if (!j.at("seed").is_number_unsigned()) throw config_error(where + ": 'seed' must be a nonnegative integer");
    return j.at("seed").get<std::uint64_t>();
}

} // namespace detail

struct ProblemConfig {
    ProblemSpec spec;
    std::uint64_t seed = 0;
};

inline ProblemConfig parse_problem_config(const json& j)
{
    const std::string where = "problem config";
    detail::check_keys(j, {"n", "k", "N", "chi", "rhs", "initial", "newton", "monitor", "seed", "coarse_N"}, where);
    ProblemConfig c;
    c.seed = detail::require_seed(j, where);
    ProblemSpec& s = c.spec;
    for (const char* key : {"n", "k", "N"})
        if (!j.contains(key)) throw config_error(where + ": '" + key + "' is required");
    detail::read(j, "n", s.n, where);
    detail::read(j, "k", s.k, where);
    detail::read(j, "N", s.N, where);
    detail::read(j, "coarse_N", s.coarse_N, where);
    if (j.contains("chi")) {
        const json& x = j["chi"];
        detail::check_keys(x, {"c0", "c1", "epsilon", "model", "f"}, "chi");
        detail::read(x, "c0", s.chi.c0, "chi");
        detail::read(x, "c1", s.chi.c1, "chi");
        detail::read(x, "epsilon", s.chi.epsilon, "chi");
        detail::read(x, "f", s.chi.f, "chi");
        std::string model = "linear";
        detail::read(x, "model", model, "chi");
        if (model != "linear" && model != "fu_yau") throw config_error("chi.model must be 'linear' or 'fu_yau'");
        s.chi.fu_yau = model == "fu_yau";
    }
    if (j.contains("rhs")) {
        const json& x = j["rhs"];
        detail::check_keys(x, {"mode", "amplitude", "wavenumber", "beta", "gamma", "P"}, "rhs");
        detail::read(x, "mode", s.rhs_mode, "rhs");
        detail::read(x, "amplitude", s.amplitude, "rhs");
        detail::read(x, "wavenumber", s.wavenumber, "rhs");
        detail::read(x, "beta", s.beta, "rhs");
        detail::read(x, "gamma", s.gamma, "rhs");
        detail::read(x, "P", s.P, "rhs");
        if (s.rhs_mode != "manufactured" && s.rhs_mode != "explicit")
            throw config_error("rhs.mode must be 'manufactured' or 'explicit'");
    }
    if (j.contains("initial")) {
        const json& x = j["initial"];
        detail::check_keys(x, {"amplitude"}, "initial");
        detail::read(x, "amplitude", s.initial_amplitude, "initial");
    }
    if (j.contains("newton")) {
        const json& x = j["newton"];
        detail::check_keys(x,
                           {"tol", "max_iter", "backtrack", "min_step", "cone_margin", "linear_max_iter",
                            "mean_zero_gauge"},
                           "newton");
        detail::read(x, "tol", s.newton.tol, "newton");
        detail::read(x, "max_iter", s.newton.max_iter, "newton");
        detail::read(x, "backtrack", s.newton.backtrack, "newton");
        detail::read(x, "min_step", s.newton.min_step, "newton");
        detail::read(x, "cone_margin", s.newton.cone_margin, "newton");
        detail::read(x, "linear_max_iter", s.newton.linear_max_iter, "newton");
        detail::read(x, "mean_zero_gauge", s.newton.mean_zero_gauge, "newton");
    }
    if (j.contains("monitor")) {
        const json& x = j["monitor"];
        detail::check_keys(x, {"m", "M", "Ncoef"}, "monitor");
        detail::read(x, "m", s.monitor.m, "monitor");
        detail::read(x, "M", s.monitor.M, "monitor");
        detail::read(x, "Ncoef", s.monitor.Ncoef, "monitor");
    }

    try {
        const TorusGrid g(s.n, s.N);
        if (s.coarse_N) (void)TorusGrid(s.n, s.coarse_N);
        s.chi.validate();
    } catch (const domain_error& e) {
        throw config_error(e.what());
    }
    if (s.k < 1 || s.k > s.n) throw config_error("k must lie in [1, n]");
    if (s.coarse_N && s.coarse_N > s.N) throw config_error("coarse_N must not exceed N");
    if (!(s.gamma >= 0.0)) throw config_error("rhs.gamma must be nonnegative");
    if (!(s.gamma > 0.0) && !s.newton.mean_zero_gauge)
        throw config_error("rhs.gamma = 0 needs newton.mean_zero_gauge = true");
    if (!(s.newton.tol > 0.0) || s.newton.max_iter < 0) throw config_error("newton.tol/max_iter out of range");
    if (!(s.newton.backtrack > 0.0 && s.newton.backtrack < 1.0)) throw config_error("newton.backtrack must lie in (0, 1)");
    if (s.monitor.m < 1) throw config_error("monitor.m must be positive");
    return c;
}

inline RecordMode parse_record_mode(const std::string& s)
{
    if (s == "worst") return RecordMode::worst;
    if (s == "all") return RecordMode::all;
    if (s == "none") return RecordMode::none;
    throw config_error("records must be 'worst', 'all' or 'none'");
}

/// Suite config; `suite` may be omitted when it is given on the command line.
inline SuiteConfig parse_suite_config(const json& j)
{
    const std::string where = "suite config";
    detail::check_keys(j,
                       {"suite", "n", "k", "delta", "samples", "seed", "m", "ell", "mu", "delta_prime",
                        "gain_factor", "mode", "restarts", "max_evals", "records"},
                       where);
    SuiteConfig c;
    c.seed = detail::require_seed(j, where);
    detail::read(j, "suite", c.suite, where);
    detail::read_list(j, "n", c.ns, where);
    detail::read_list(j, "k", c.ks, where);
    detail::read_list(j, "delta", c.deltas, where);
    detail::read(j, "samples", c.samples, where);
    detail::read(j, "m", c.m, where);
    detail::read(j, "ell", c.ell, where);
    detail::read(j, "mu", c.mu, where);
    detail::read(j, "delta_prime", c.delta_prime, where);
    detail::read(j, "gain_factor", c.gain_factor, where);
    detail::read(j, "mode", c.mode, where);
    detail::read(j, "restarts", c.restarts, where);
    detail::read(j, "max_evals", c.max_evals, where);
    std::string rec = "worst";
    detail::read(j, "records", rec, where);
    c.records = parse_record_mode(rec);
    return c;
}

struct BisectConfig {
    bool enabled = false;
    double lo = 1e-4;
    double hi = 0.9;
    int iterations = 12;
};

struct SearchRunConfig {
    SearchConfig search;
    BisectConfig bisect;
};

inline SearchRunConfig parse_search_config(const json& j)
{
    const std::string where = "search config";
    detail::check_keys(j,
                       {"inequality", "n", "k", "ell", "delta", "m", "mu", "delta_prime", "restarts", "max_evals",
                        "seed", "gain_factor", "index", "bisect"},
                       where);
    SearchRunConfig c;
    c.search.seed = detail::require_seed(j, where);
    detail::read(j, "n", c.search.n, where);
    detail::read(j, "k", c.search.k, where);
    detail::read(j, "ell", c.search.ell, where);
    detail::read(j, "delta", c.search.delta, where);
    detail::read(j, "m", c.search.m, where);
    detail::read(j, "mu", c.search.mu, where);
    detail::read(j, "delta_prime", c.search.delta_prime, where);
    detail::read(j, "restarts", c.search.restarts, where);
    detail::read(j, "max_evals", c.search.max_evals, where);
    detail::read(j, "gain_factor", c.search.gain_factor, where);
    detail::read(j, "index", c.search.index, where);
    if (j.contains("bisect")) {
        const json& b = j["bisect"];
        detail::check_keys(b, {"lo", "hi", "iterations"}, "bisect");
        c.bisect.enabled = true;
        detail::read(b, "lo", c.bisect.lo, "bisect");
        detail::read(b, "hi", c.bisect.hi, "bisect");
        detail::read(b, "iterations", c.bisect.iterations, "bisect");
    }
    return c;
}

} // namespace hklab
