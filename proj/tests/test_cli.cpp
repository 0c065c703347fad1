#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "hklab-test-cli";

struct CliRun {
    int code = -1;
    std::string err;
};

CliRun run(const std::string& args)
{
    fs::create_directories(kWork);
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd = std::string(HKLAB_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream is(err);
    std::stringstream ss;
    ss << is.rdbuf();
    r.err = ss.str();
    return r;
}

std::string out(const std::string& name) { return (kWork / name).string(); }

std::string preset(const std::string& name) { return std::string(HKLAB_PRESETS_DIR) + "/" + name; }

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

} // namespace

TEST(CliVerify, IdentitiesPassAndWriteArtifacts)
{
    const CliRun r = run("verify identities --n 4 --k 2 --samples 10000 --seed 1 --out " + out("ids"));
    EXPECT_EQ(r.code, 0) << r.err;
    const json s = read_json(kWork / "ids" / "summary.json");
    EXPECT_EQ(s.at("suite"), "identities");
    EXPECT_EQ(s.at("samples"), 10000);
    EXPECT_TRUE(s.contains("min_slack"));
    EXPECT_TRUE(s.contains("worst_sample_id"));
    EXPECT_TRUE(fs::exists(kWork / "ids" / "reports.jsonl"));
    const json m = read_json(kWork / "ids" / "manifest.json");
    EXPECT_EQ(m.at("command"), "verify");
    EXPECT_EQ(m.at("seed"), 1);
    EXPECT_TRUE(m.contains("tool_version"));
    EXPECT_TRUE(m.contains("wall_time_seconds"));
}

TEST(CliVerify, InadmissibleMExitsTwo)
{
    const CliRun r = run("verify lemma2 --m 6 --seed 1 --out " + out("m6"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("m not admissible"), std::string::npos) << r.err;
}

TEST(CliVerify, LargeSeparationSearchExitsOne)
{
    const CliRun r = run("verify lemma3 --mode search --delta-prime 0.9 --n 4 --k 2 --restarts 40 --seed 7 --out " +
                      out("l3"));
    EXPECT_EQ(r.code, 1) << r.err;
    std::ifstream is(kWork / "l3" / "reports.jsonl");
    std::string line;
    ASSERT_TRUE(std::getline(is, line));
    const json rec = json::parse(line);
    EXPECT_TRUE(rec.at("worst").get<bool>());
    EXPECT_LT(rec.at("normalized_slack").get<double>(), -1e-8);
}

TEST(CliVerify, SeedIsMandatory)
{
    EXPECT_EQ(run("verify lemma1 --samples 10 --out " + out("noseed")).code, 2);
    EXPECT_EQ(run("verify lemma1 --samples 10 --seed 1 --out " + out("s1")).code, 0);
}

TEST(CliVerify, BadInputExitsTwo)
{
    EXPECT_EQ(run("verify nonsense --seed 1 --out " + out("x")).code, 2);
    EXPECT_EQ(run("verify lemma1 --seed notanumber --out " + out("x")).code, 2);
    EXPECT_EQ(run("verify lemma1 --seed 1 --records some --out " + out("x")).code, 2);
    EXPECT_EQ(run("verify lemma1 --config /nonexistent.json --out " + out("x")).code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST(CliVerify, ConfigFileAndDeterminism)
{
    const fs::path cfg = kWork / "suite.json";
    fs::create_directories(kWork);
    std::ofstream(cfg) << R"({"suite": "corollary17", "n": [3, 4], "samples": 400, "seed": 21})";
    ASSERT_EQ(run("verify corollary17 --config " + cfg.string() + " --out " + out("d1")).code, 0);
    ASSERT_EQ(run("verify corollary17 --config " + cfg.string() + " --out " + out("d2")).code, 0);
    EXPECT_EQ(slurp(kWork / "d1" / "summary.json"), slurp(kWork / "d2" / "summary.json"));
    EXPECT_EQ(slurp(kWork / "d1" / "reports.jsonl"), slurp(kWork / "d2" / "reports.jsonl"));
}

TEST(CliSearch, ExitsZeroAndReportsWorst)
{
    const CliRun r = run("search lemma1 --n 3 --k 2 --restarts 20 --max-evals 500 --seed 7 --out " + out("srch"));
    EXPECT_EQ(r.code, 0) << r.err;
    const json s = read_json(kWork / "srch" / "search.json");
    EXPECT_GE(s.at("worst").at("normalized_slack").get<double>(), -1e-8);
    EXPECT_TRUE(fs::exists(kWork / "srch" / "reports.jsonl"));
}

TEST(CliSearch, ViolationStillExitsZero)
{
    const CliRun r = run("search lemma3 --n 4 --k 2 --delta-prime 0.9 --restarts 40 --seed 7 --out " + out("srch3"));
    EXPECT_EQ(r.code, 0) << r.err;
    const json s = read_json(kWork / "srch3" / "search.json");
    EXPECT_LT(s.at("worst").at("normalized_slack").get<double>(), -1e-8);
}

TEST(CliSearch, BisectionReportsThreshold)
{
    const CliRun r = run("search lemma3 --n 4 --k 2 --restarts 16 --max-evals 800 --seed 7 --bisect --bisect-lo 0.05 "
                      "--bisect-hi 0.9 --bisect-iterations 3 --out " +
                      out("bis"));
    EXPECT_EQ(r.code, 0) << r.err;
    const json t = read_json(kWork / "bis" / "search.json").at("threshold");
    EXPECT_TRUE(t.at("bracketed").get<bool>());
    EXPECT_LT(t.at("passing").get<double>(), t.at("failing").get<double>());
}

TEST(CliSearch, UnknownNameExitsTwo)
{
    EXPECT_EQ(run("search lemma9 --seed 1 --out " + out("x")).code, 2);
    EXPECT_EQ(run("search lemma1 --seed 1 --bisect --out " + out("x")).code, 2);
}

TEST(CliSolve, ConstantSolution)
{
    const CliRun r = run("solve --config " + preset("n2k2_constant.json") + " --out " + out("const"));
    EXPECT_EQ(r.code, 0) << r.err;
    const json s = read_json(kWork / "const" / "solve_report.json");
    EXPECT_LE(s.at("iterations").get<int>(), 1);
    EXPECT_TRUE(fs::exists(kWork / "const" / "solution.hkf"));
    EXPECT_TRUE(fs::exists(kWork / "const" / "solution.hkf.json"));
    EXPECT_TRUE(fs::exists(kWork / "const" / "iterations.csv"));
    EXPECT_TRUE(fs::exists(kWork / "const" / "manifest.json"));
}

TEST(CliSolve, LaplacePresetAndMonitor)
{
    ASSERT_EQ(run("solve --config " + preset("n1k1_manufactured.json") + " --out " + out("lap")).code, 0);
    const json s = read_json(kWork / "lap" / "solve_report.json");
    EXPECT_LT(s.at("error_inf").get<double>(), 1e-10);
    const std::string csv = slurp(kWork / "lap" / "iterations.csv");
    EXPECT_EQ(csv.rfind("iter,residual,min_sigma_margin,lambda1_max,G_max", 0), 0u);

    const CliRun m = run("monitor --config " + preset("n1k1_manufactured.json") + " --field " +
                      (kWork / "lap" / "solution.hkf").string() + " --out " + out("mon"));
    EXPECT_EQ(m.code, 0) << m.err;
    const json j = read_json(kWork / "mon" / "monitor.json");
    EXPECT_TRUE(j.at("trace_bound_holds").get<bool>());
}

TEST(CliSolve, ConeViolationExitsOne)
{
    const CliRun r = run("solve --config " + preset("n2k2_cone_violation.json") + " --out " + out("cv"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("cone violation"), std::string::npos) << r.err;
    EXPECT_TRUE(fs::exists(kWork / "cv" / "solve_report.json"));
}

TEST(CliSolve, NonConvergenceExitsOneWithArtifacts)
{
    const fs::path cfg = kWork / "short.json";
    fs::create_directories(kWork);
    std::ofstream(cfg) << R"({"n": 2, "k": 2, "N": 8, "seed": 1, "chi": {"c0": 2, "c1": 0.1},
        "rhs": {"mode": "manufactured", "amplitude": 0.05, "beta": 0.1, "gamma": 1},
        "newton": {"max_iter": 1}})";
    const CliRun r = run("solve --config " + cfg.string() + " --out " + out("short"));
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(fs::exists(kWork / "short" / "solution.hkf"));
    EXPECT_FALSE(read_json(kWork / "short" / "solve_report.json").at("converged").get<bool>());
}

TEST(CliSolve, InvalidConfigExitsTwo)
{
    const fs::path cfg = kWork / "bad.json";
    fs::create_directories(kWork);
    std::ofstream(cfg) << R"({"n": 2, "k": 2, "N": 16, "seed": 1, "chi": {"c0": 2, "cO": 1}})";
    EXPECT_EQ(run("solve --config " + cfg.string() + " --out " + out("bad")).code, 2);
    std::ofstream(cfg) << R"({"n": 2, "k": 2, "N": 16})";
    EXPECT_EQ(run("solve --config " + cfg.string() + " --out " + out("bad")).code, 2);
    EXPECT_EQ(run("solve --out " + out("bad")).code, 2);
}
