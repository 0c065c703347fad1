#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "solver.hpp"

namespace hklab {

namespace detail {

/// NaN and infinities become null.
inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace detail

inline nlohmann::json to_json(const IterationLog& l)
{
    return {{"iteration", l.iteration},
            {"residual_inf", detail::num(l.residual_inf)},
            {"min_sigma_margin", detail::num(l.min_sigma_margin)},
            {"lambda1_max", detail::num(l.lambda1_max)},
            {"G_max", detail::num(l.G_max)},
            {"step", l.step},
            {"linear_iterations", l.linear_iterations}};
}

inline nlohmann::json to_json(const SolveReport& r)
{
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& l : r.history) hist.push_back(to_json(l));
    nlohmann::json ratios = nlohmann::json::array();
    for (double q : r.quadratic_ratios()) ratios.push_back(detail::num(q));
    return {{"converged", r.converged},
            {"message", r.message},
            {"iterations", r.iterations},
            {"final_residual_inf", detail::num(r.final_residual_inf)},
            {"min_sigma_margin", detail::num(r.min_sigma_margin)},
            {"lambda1_max", detail::num(r.lambda1_max)},
            {"G_max", detail::num(r.G_max)},
            {"G_argmax_gradient_norm", detail::num(r.G_argmax_gradient_norm)},
            {"error_inf", r.error_inf ? detail::num(*r.error_inf) : nlohmann::json(nullptr)},
            {"quadratic_ratios", ratios},
            {"history", hist}};
}

inline nlohmann::json to_json(const MonitorReport& m)
{
    nlohmann::json pt = nlohmann::json::array();
    for (double x : m.G_argmax_point) pt.push_back(x);
    return {{"lambda1_max", detail::num(m.lambda1_max)},
            {"min_sigma_margin", detail::num(m.min_sigma_margin)},
            {"K0", m.K0},
            {"G_max", detail::num(m.G_max)},
            {"G_argmax", m.G_argmax},
            {"G_argmax_point", pt},
            {"G_argmax_gradient_norm", detail::num(m.G_argmax_gradient_norm)},
            {"trace_bound_min_margin", detail::num(m.trace_bound_min_margin)}};
}

/// Trims the point coordinates to the field's real dimension.
inline nlohmann::json to_json(const MonitorReport& m, int dims)
{
    nlohmann::json j = to_json(m);
    j["G_argmax_point"] = nlohmann::json(std::vector<double>(m.G_argmax_point.begin(), m.G_argmax_point.begin() + dims));
    return j;
}

inline nlohmann::json to_json(const ProblemResult& r, const ProblemSpec& s)
{
    nlohmann::json levels = nlohmann::json::array();
    int N = s.coarse_N;
    for (const auto& c : r.coarse_reports) {
        levels.push_back({{"N", N},
                          {"iterations", c.iterations},
                          {"final_residual_inf", detail::num(c.final_residual_inf)},
                          {"error_inf", c.error_inf ? detail::num(*c.error_inf) : nlohmann::json(nullptr)},
                          {"converged", c.converged}});
        N *= 2;
    }
    nlohmann::json j = to_json(r.report);
    j["n"] = s.n;
    j["k"] = s.k;
    j["N"] = s.N;
    j["coarse_levels"] = levels;
    j["monitor"] = to_json(r.monitor, 2 * s.n);
    return j;
}

/// iter,residual,min_sigma_margin,lambda1_max,G_max,step,linear_iterations
inline std::string iterations_csv(const SolveReport& r)
{
    std::string out = "iter,residual,min_sigma_margin,lambda1_max,G_max,step,linear_iterations\n";
    char line[256];
    for (const auto& l : r.history) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", l.iteration, l.residual_inf,
                      l.min_sigma_margin, l.lambda1_max, l.G_max, l.step, l.linear_iterations);
        out += line;
    }
    return out;
}

} // namespace hklab
