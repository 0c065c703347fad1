#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include <hklab/config.hpp>
#include <hklab/field_io.hpp>
#include <hklab/report_json.hpp>
#include <hklab/sampling.hpp>

using namespace hklab;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "hklab-test-io";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<unsigned char> bytes_of(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST(FieldIO, RoundTripIsBitExact)
{
    CounterRng rng(1);
    const TorusGrid g(2, 8);
    TorusField u(g);
    for (double& v : u.values) v = rng.normal() * 1e-3;
    u[5] = -0.0;
    u[6] = 5e-324;
    const auto path = temp_path("u.hkf").string();
    write_field(path, u);
    const TorusField w = read_field(path);
    ASSERT_EQ(w.grid, g);
    for (std::size_t p = 0; p < g.size(); ++p)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(w[p]), std::bit_cast<std::uint64_t>(u[p]));
    const auto side = load_json_file(path + ".json");
    EXPECT_EQ(side.at("format"), "HKF1");
    EXPECT_EQ(side.at("N"), 8);
}

TEST(FieldIO, HeaderLayout)
{
    const TorusGrid g(1, 8);
    TorusField u(g, 1.0);
    const auto path = temp_path("h.hkf");
    write_field(path.string(), u);
    const auto b = bytes_of(path);
    ASSERT_EQ(b.size(), 8u + 4 + 4 + 64 * 8);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "HKFIELD1");
    EXPECT_EQ(b[8], 1);
    EXPECT_EQ(b[9] | b[10] | b[11], 0);
    EXPECT_EQ(b[12], 8);
    // 1.0 = 0x3ff0000000000000, little endian
    EXPECT_EQ(b[16 + 7], 0x3f);
    EXPECT_EQ(b[16 + 6], 0xf0);
}

TEST(FieldIO, RejectsBadFiles)
{
    const auto p = temp_path("bad.hkf");
    {
        std::ofstream os(p, std::ios::binary);
        os << "NOTAFILE";
    }
    EXPECT_THROW(read_field(p.string()), domain_error);
    {
        std::ofstream os(p, std::ios::binary);
        os.write("HKFIELD1", 8);
        const char hdr[8] = {1, 0, 0, 0, 8, 0, 0, 0};
        os.write(hdr, 8);
        os.write("\0\0\0\0", 4);
    }
    EXPECT_THROW(read_field(p.string()), domain_error);
    EXPECT_THROW(read_field(temp_path("missing.hkf").string()), domain_error);
}

TEST(Config, ProblemConfigParsesAndValidates)
{
    const json good = json::parse(R"({"n": 2, "k": 2, "N": 16, "seed": 3,
        "chi": {"c0": 2, "c1": 0.1, "epsilon": 0.1},
        "rhs": {"mode": "manufactured", "amplitude": 0.05, "beta": 0.1, "gamma": 1},
        "newton": {"tol": 1e-10, "max_iter": 20}, "monitor": {"m": 3, "M": 0, "Ncoef": 1}})");
    const ProblemConfig c = parse_problem_config(good);
    EXPECT_EQ(c.seed, 3u);
    EXPECT_EQ(c.spec.N, 16);
    EXPECT_EQ(c.spec.newton.max_iter, 20);
    EXPECT_EQ(c.spec.monitor.m, 3);

    auto rejects = [&](const std::function<void(json&)>& edit) {
        json j = good;
        edit(j);
        EXPECT_THROW(parse_problem_config(j), config_error) << j.dump();
    };
    rejects([](json& j) { j.erase("seed"); });
    rejects([](json& j) { j["seed"] = -1; });
    rejects([](json& j) { j["typo"] = 1; });
    rejects([](json& j) { j["chi"]["c2"] = 1; });
    rejects([](json& j) { j["chi"]["model"] = "quadratic"; });
    rejects([](json& j) { j["k"] = 3; });
    rejects([](json& j) { j["N"] = 12; });
    rejects([](json& j) { j.erase("N"); });
    rejects([](json& j) { j["rhs"]["mode"] = "magic"; });
    rejects([](json& j) { j["rhs"]["gamma"] = 0; });
    rejects([](json& j) { j["chi"]["c0"] = "two"; });
    rejects([](json& j) { j["newton"]["backtrack"] = 1.5; });
    rejects([](json& j) { j["coarse_N"] = 32; });
}

TEST(Config, SuiteAndSearchConfigs)
{
    const SuiteConfig s = parse_suite_config(json::parse(R"({"suite": "lemma1", "n": 3, "k": [2, 3], "seed": 5})"));
    EXPECT_EQ(s.ns, std::vector<int>{3});
    EXPECT_EQ(s.ks, (std::vector<int>{2, 3}));
    EXPECT_THROW(parse_suite_config(json::parse(R"({"suite": "lemma1"})")), config_error);
    EXPECT_THROW(parse_suite_config(json::parse(R"({"seed": 1, "sample": 10})")), config_error);
    EXPECT_THROW(parse_suite_config(json::parse(R"({"seed": 1, "records": "some"})")), config_error);

    const SearchRunConfig r =
        parse_search_config(json::parse(R"({"n": 4, "k": 2, "seed": 9, "bisect": {"lo": 0.05, "iterations": 4}})"));
    EXPECT_TRUE(r.bisect.enabled);
    EXPECT_EQ(r.bisect.iterations, 4);
    EXPECT_EQ(r.search.seed, 9u);
    EXPECT_THROW(parse_search_config(json::parse(R"({"n": 4})")), config_error);
    EXPECT_THROW(load_json_file(temp_path("nope.json").string()), config_error);
}

TEST(Config, PresetsParse)
{
    for (const auto& e : fs::directory_iterator(HKLAB_PRESETS_DIR)) {
        const json j = load_json_file(e.path().string());
        const std::string name = e.path().filename().string();
        if (name.rfind("suite_", 0) == 0)
            EXPECT_NO_THROW(parse_suite_config(j)) << name;
        else if (name.rfind("search_", 0) == 0)
            EXPECT_NO_THROW(parse_search_config(j)) << name;
        else
            EXPECT_NO_THROW(parse_problem_config(j)) << name;
    }
}

TEST(Replay, JsonRoundTripReproducesSlack)
{
    CounterRng rng(4);
    ConeSampleConfig cfg;
    cfg.n = 4;
    cfg.k = 3;
    const Spectrum W = sample_cone(cfg, rng);
    const ThirdOrderData t = sample_third_order(4, rng);
    EstimateParams p;
    p.m = 7;

    std::vector<SlackReport> reports;
    reports.push_back(lemma1_slack(W, 3, 1, 0.5, 2, t));
    reports.push_back(corollary17_slack(W, 3, 1.01 * gain_threshold(3, 1, 0.5, sigma(W, 3)), 1, t, sigma(W, 3), 0.5));
    const Spectrum pos = sample_positive_spectrum(4, rng);
    reports.push_back(lemma2_slack(pos, 3, t, p, 0));
    reports.push_back(lemma2_slack(pos, 3, t, p, 2));
    const Spectrum sep = sample_separated_spectrum(4, 1, 0.5, 0.01, rng);
    EstimateParams q;
    q.mu = 1;
    q.psi_inf = sigma(sep, 2);
    q.K = 1.01 * lemma3_gain_threshold(2, 1, q.psi_inf);
    reports.push_back(lemma3_slack(sep, 2, t, q));

    for (const SlackReport& r : reports) {
        const json j = to_json(r);
        const SlackReport back = slack_report_from_json(json::parse(j.dump()));
        EXPECT_EQ(back.name, r.name);
        const SlackReport again = replay(back);
        EXPECT_EQ(again.slack, r.slack) << r.name;
        EXPECT_EQ(again.scale, r.scale) << r.name;
    }
}
