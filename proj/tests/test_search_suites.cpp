#include <gtest/gtest.h>

#include <hklab/nelder_mead.hpp>
#include <hklab/parallel.hpp>
#include <hklab/report_json.hpp>
#include <hklab/search.hpp>
#include <hklab/suites.hpp>

using namespace hklab;

TEST(NelderMead, MinimizesRosenbrock)
{
    auto f = [](const std::vector<double>& x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.max_evals = 5000;
    const auto r = nelder_mead(f, {-1.2, 1.0}, opt);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, TreatsNonFiniteAsInfeasible)
{
    auto f = [](const std::vector<double>& x) {
        return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 1) * (x[0] - 1);
    };
    const auto r = nelder_mead(f, {2.0});
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Parallel, ChunksCoverEveryIndexOnce)
{
    std::vector<int> hits(1000, 0);
    parallel_chunks(hits.size(), 4, [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Search, NamesAndValidation)
{
    EXPECT_FALSE(parse_inequality("lemma4").has_value());
    for (auto q : {Inequality::lemma1, Inequality::corollary17, Inequality::lemma2_genesisi,
                   Inequality::lemma2_genesis2, Inequality::lemma3})
        EXPECT_EQ(parse_inequality(to_string(q)), q);
    SearchConfig c;
    c.m = 6;
    EXPECT_THROW(validate_search(Inequality::lemma2_genesisi, c), precondition_error);
    c.m = 7;
    c.mu = 2;
    EXPECT_THROW(validate_search(Inequality::lemma3, c), domain_error);
}

TEST(Search, EstimatesHoldAndSearchIsDeterministic)
{
    SearchConfig c;
    c.n = 3;
    c.k = 2;
    c.restarts = 12;
    c.max_evals = 600;
    c.seed = 7;
    for (auto q : {Inequality::lemma1, Inequality::corollary17, Inequality::lemma2_genesisi,
                   Inequality::lemma2_genesis2, Inequality::lemma3}) {
        const SlackReport a = adversarial_search(q, c);
        EXPECT_GE(a.normalized_slack(), -1e-8) << to_string(q);
        EXPECT_TRUE(a.worst);
        const SlackReport b = adversarial_search(q, c);
        EXPECT_EQ(a.slack, b.slack);
        EXPECT_EQ(a.sample_id, b.sample_id);
        // the recorded point replays to the same slack
        EXPECT_EQ(replay(slack_report_from_json(to_json(a))).slack, a.slack);
    }
}

TEST(Search, LargeSeparationBreaksLemma3)
{
    SearchConfig c;
    c.n = 4;
    c.k = 2;
    c.mu = 1;
    c.delta = 0.5;
    c.delta_prime = 0.9;
    c.restarts = 40;
    c.seed = 7;
    EXPECT_LT(adversarial_search(Inequality::lemma3, c).normalized_slack(), -1e-8);
}

TEST(Suites, SmallRunsPass)
{
    for (const std::string& name : suite_names()) {
        SuiteConfig c;
        c.suite = name;
        c.seed = 11;
        c.samples = 300;
        const SuiteResult r = run_suite(c);
        EXPECT_TRUE(r.passed) << name << " min_slack=" << r.min_slack;
        EXPECT_EQ(r.records.size(), r.groups.size()) << name;
        for (const auto& g : r.groups) EXPECT_EQ(g.samples, 300u);
    }
}

TEST(Suites, IdentitiesRespectK)
{
    SuiteConfig c;
    c.suite = "identities";
    c.ns = {4};
    c.ks = {2};
    c.samples = 200;
    c.seed = 1;
    c.records = RecordMode::all;
    const SuiteResult r = run_suite(c);
    EXPECT_TRUE(r.passed);
    for (const auto& rec : r.records) EXPECT_EQ(rec.k, 2);
}

TEST(Suites, SummaryIsByteIdenticalAcrossRuns)
{
    SuiteConfig c;
    c.suite = "lemma1";
    c.seed = 99;
    c.samples = 500;
    const std::string a = summary_json(run_suite(c)).dump();
    const std::string b = summary_json(run_suite(c)).dump();
    EXPECT_EQ(a, b);
    c.seed = 100;
    EXPECT_NE(summary_json(run_suite(c)).dump(), a);
}

TEST(Suites, WorstRecordsReplay)
{
    for (const char* name : {"lemma1", "corollary17", "lemma2", "lemma3"}) {
        SuiteConfig c;
        c.suite = name;
        c.seed = 5;
        c.samples = 200;
        const SuiteResult r = run_suite(c);
        for (const auto& rec : r.records) {
            const SlackReport again = replay(slack_report_from_json(to_json(rec)));
            EXPECT_EQ(again.slack, rec.slack) << name;
        }
    }
}

TEST(Suites, SearchModeRecordsTheViolation)
{
    SuiteConfig c;
    c.suite = "lemma3";
    c.mode = "search";
    c.ns = {4};
    c.ks = {2};
    c.delta_prime = 0.9;
    c.restarts = 40;
    c.seed = 7;
    const SuiteResult r = run_suite(c);
    EXPECT_FALSE(r.passed);
    ASSERT_FALSE(r.records.empty());
    EXPECT_TRUE(r.records.front().worst);
}

TEST(Suites, InvalidConfigs)
{
    SuiteConfig c;
    c.seed = 1;
    c.suite = "nonsense";
    EXPECT_THROW(run_suite(c), domain_error);
    c.suite = "lemma2";
    c.m = 6;
    try {
        run_suite(c);
        FAIL();
    } catch (const precondition_error& e) {
        EXPECT_NE(std::string(e.what()).find("m not admissible"), std::string::npos);
    }
    c.m = 7;
    c.suite = "identities";
    c.mode = "search";
    EXPECT_THROW(run_suite(c), domain_error);
}
