#include <gtest/gtest.h>

#include <hklab/cone.hpp>

#include "oracles.hpp"

using namespace hklab;

TEST(InCone, WorkedExamples)
{
    EXPECT_TRUE(in_cone(Spectrum{1, 1, 1}, 3));
    EXPECT_FALSE(in_cone(Spectrum{2, 2, -1}, 2));
    EXPECT_TRUE(in_cone(Spectrum{2, 2, -0.5}, 2));
    EXPECT_THROW(in_cone(Spectrum{1, 1}, 3), domain_error);
}

TEST(InCone, AgreesWithBruteForceSigmas)
{
    CounterRng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.normal() + 0.5;
        for (int k = 1; k <= 4; ++k) {
            bool want = true;
            for (int m = 1; m <= k; ++m) want = want && oracle::sigma_brute(v, m) > 0.0;
            EXPECT_EQ(in_cone(v, k), want);
        }
    }
}

TEST(Sample, PositiveOrthantForFullOrder)
{
    ConeSampleConfig cfg;
    cfg.n = 3;
    cfg.k = 3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        EXPECT_GT(sample(cfg).smallest(), 0.0);
    }
}

TEST(Sample, SeededDrawIsInConeAndReproducible)
{
    ConeSampleConfig cfg;
    cfg.n = 4;
    cfg.k = 2;
    cfg.seed = 42;
    const Spectrum a = sample(cfg, 3);
    EXPECT_TRUE(in_cone(a, 2));
    const Spectrum b = sample(cfg, 3);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Sample, BoundaryBiasedIsCloseToBoundary)
{
    ConeSampleConfig cfg;
    cfg.n = 3;
    cfg.k = 2;
    cfg.strategy = SampleStrategy::boundary_biased;
    for (double scale : {0.5, 1.0, 4.0}) {
        cfg.scale = scale;
        for (std::uint64_t i = 0; i < 50; ++i) {
            const Spectrum l = sample(cfg, i);
            const double s2 = sigma(l, 2);
            EXPECT_GT(s2, 0.0);
            EXPECT_LT(s2, 0.1 * scale * scale);
            EXPECT_TRUE(in_cone(l, 2));
        }
    }
}

TEST(Sample, InvalidConfig)
{
    ConeSampleConfig cfg;
    cfg.n = 3;
    cfg.k = 4;
    EXPECT_THROW(sample(cfg), domain_error);
    cfg.k = 2;
    cfg.scale = 0.0;
    EXPECT_THROW(sample(cfg), domain_error);
}

TEST(ShiftToPositive, WorkedExamples)
{
    const auto a = shift_to_positive(Spectrum{3, 2, 1}, 2);
    EXPECT_LT(a.k0, 1e-7);
    EXPECT_NEAR(a.lambda[0], 3.0, 1e-7);

    // (5, 1, -0.3) is in Gamma_2: sigma_1 = 5.7, sigma_2 = 5 - 1.5 - 0.3 = 3.2
    const auto b = shift_to_positive(Spectrum{5, 1, -0.3}, 1);
    EXPECT_NEAR(b.k0, 0.3, 1e-6);
    EXPECT_NEAR(b.lambda[0], 5.3, 1e-6);
    EXPECT_NEAR(b.lambda[1], 1.3, 1e-6);
    EXPECT_GT(b.lambda[2], 0.0);
    EXPECT_TRUE(in_cone(b.lambda, 3));

    const auto c = shift_to_positive(Spectrum{1, 1, 0}, 1);
    EXPECT_GT(c.lambda.smallest(), 0.0);
}

TEST(ShiftToPositive, RejectsOutsideCone)
{
    // sigma_2 = 1 - 2 - 2 < 0
    EXPECT_THROW(shift_to_positive(Spectrum{1, 1, -2}, 1), precondition_error);
}
