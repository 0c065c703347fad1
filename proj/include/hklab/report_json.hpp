#pragma once

// JSON-lines encoding of SlackReport records, and replay of a decoded record.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness.hpp"

namespace hklab {

inline nlohmann::json params_to_json(const EstimateParams& p, int k, std::size_t index)
{
    return {{"m", p.m},         {"M", p.M},         {"N", p.N},   {"K", p.K},     {"tau", p.tau},
            {"delta", p.delta}, {"delta_prime", p.delta_prime},    {"epsilon", p.epsilon},
            {"mu", p.mu},       {"ell", p.ell},     {"psi_inf", p.psi_inf},
            {"k", k},           {"index", index}};
}

inline nlohmann::json to_json(const SlackReport& r)
{
    const std::size_t n = r.data.size();
    nlohmann::json tr = nlohmann::json::array();
    nlohmann::json ti = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        nlohmann::json ar = nlohmann::json::array(), ai = nlohmann::json::array();
        for (std::size_t p = 0; p < n; ++p) {
            nlohmann::json br = nlohmann::json::array(), bi = nlohmann::json::array();
            for (std::size_t q = 0; q < n; ++q) {
                br.push_back(r.data(i, p, q).real());
                bi.push_back(r.data(i, p, q).imag());
            }
            ar.push_back(std::move(br));
            ai.push_back(std::move(bi));
        }
        tr.push_back(std::move(ar));
        ti.push_back(std::move(ai));
    }
    return {{"name", r.name},
            {"lhs", r.lhs},
            {"rhs", r.rhs},
            {"slack", r.slack},
            {"scale", r.scale},
            {"normalized_slack", r.normalized_slack()},
            {"params", params_to_json(r.params, r.k, r.index)},
            {"lambda", r.lambda},
            {"t_real", std::move(tr)},
            {"t_imag", std::move(ti)},
            {"seed", r.seed},
            {"sample_id", r.sample_id},
            {"worst", r.worst}};
}

inline SlackReport slack_report_from_json(const nlohmann::json& j)
{
    SlackReport r;
    r.name = j.at("name").get<std::string>();
    r.lhs = j.at("lhs").get<double>();
    r.rhs = j.at("rhs").get<double>();
    r.slack = j.at("slack").get<double>();
    r.scale = j.value("scale", 1.0);
    const auto& p = j.at("params");
    r.params.m = p.value("m", 7);
    r.params.M = p.value("M", 1.0);
    r.params.N = p.value("N", 1.0);
    r.params.K = p.value("K", 1.0);
    r.params.tau = p.value("tau", 0.5);
    r.params.delta = p.value("delta", 0.5);
    r.params.delta_prime = p.value("delta_prime", 0.01);
    r.params.epsilon = p.value("epsilon", 1.0);
    r.params.mu = p.value("mu", 1);
    r.params.ell = p.value("ell", 1);
    r.params.psi_inf = p.value("psi_inf", 1.0);
    r.k = p.at("k").get<int>();
    r.index = p.at("index").get<std::size_t>();
    r.lambda = j.at("lambda").get<std::vector<double>>();
    const auto& tr = j.at("t_real");
    const auto& ti = j.at("t_imag");
    const std::size_t n = tr.size();
    r.data = ThirdOrderData(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                r.data(i, a, b) = cplx(tr.at(i).at(a).at(b).get<double>(), ti.at(i).at(a).at(b).get<double>());
    r.seed = j.value("seed", std::uint64_t{0});
    r.sample_id = j.value("sample_id", std::uint64_t{0});
    r.worst = j.value("worst", false);
    return r;
}

/// Re-evaluates a recorded inequality from its stored inputs.
inline SlackReport replay(const SlackReport& r)
{
    const Spectrum s(r.lambda);
    SlackReport out;
    if (r.name == "lemma1")
        out = lemma1_slack(s, r.k, r.params.ell, r.params.delta, r.index, r.data);
    else if (r.name == "corollary17")
        out = corollary17_slack(s, r.k, r.params.K, r.index, r.data, r.params.psi_inf, r.params.delta);
    else if (r.name == "lemma2_genesisi" || r.name == "lemma2_genesis2")
        out = lemma2_slack(s, r.k, r.data, r.params, r.index);
    else if (r.name == "lemma3")
        out = lemma3_slack(s, r.k, r.data, r.params);
    else
        throw std::invalid_argument("replay: no evaluator for record '" + r.name + "'");
    out.seed = r.seed;
    out.sample_id = r.sample_id;
    out.worst = r.worst;
    return out;
}

} // namespace hklab
