#include <numbers>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <hklab/torus.hpp>

using namespace hklab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// u = sum_j c_j cos(2 pi <k_j, s>) + d_j sin(2 pi <k_j, s>) on a few low modes,
// with its exact real second derivatives.
struct Modes {
    std::vector<std::array<int, kMaxRealDim>> k;
    std::vector<double> c, d;

    double value(const std::array<double, kMaxRealDim>& s, int dims) const
    {
        double u = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) {
            double ph = 0.0;
            for (int a = 0; a < dims; ++a) ph += k[j][static_cast<std::size_t>(a)] * s[static_cast<std::size_t>(a)];
            u += c[j] * std::cos(kTwoPi * ph) + d[j] * std::sin(kTwoPi * ph);
        }
        return u;
    }

    double second(const std::array<double, kMaxRealDim>& s, int dims, int a, int b) const
    {
        double u = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) {
            double ph = 0.0;
            for (int e = 0; e < dims; ++e) ph += k[j][static_cast<std::size_t>(e)] * s[static_cast<std::size_t>(e)];
            const double f = -kTwoPi * kTwoPi * k[j][static_cast<std::size_t>(a)] * k[j][static_cast<std::size_t>(b)];
            u += f * (c[j] * std::cos(kTwoPi * ph) + d[j] * std::sin(kTwoPi * ph));
        }
        return u;
    }
};

Modes random_modes(int dims, CounterRng& rng, int count = 6, int kmax = 3)
{
    Modes m;
    for (int j = 0; j < count; ++j) {
        std::array<int, kMaxRealDim> k{};
        for (int a = 0; a < dims; ++a)
            k[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(rng.uniform(-kmax, kmax + 1)));
        m.k.push_back(k);
        m.c.push_back(rng.normal());
        m.d.push_back(rng.normal());
    }
    return m;
}

} // namespace

TEST(Grid, Validation)
{
    EXPECT_THROW(TorusGrid(0, 16), domain_error);
    EXPECT_THROW(TorusGrid(4, 16), domain_error);
    EXPECT_THROW(TorusGrid(1, 12), domain_error);
    EXPECT_THROW(TorusGrid(1, 4), domain_error);
    const TorusGrid g(2, 8);
    EXPECT_EQ(g.size(), 4096u);
    for (std::size_t f : {0u, 17u, 4095u}) EXPECT_EQ(g.flat_of(g.index_of(f)), f);
}

TEST(ComplexHessian, ZeroField)
{
    const TorusGrid g(2, 8);
    const HermitianField H = complex_hessian(TorusField(g));
    for (double v : H.diag) EXPECT_EQ(v, 0.0);
    for (auto z : H.upper) EXPECT_EQ(z, cplx{});
}

TEST(ComplexHessian, SingleModeWorkedExample)
{
    // u = cos(2 pi x) / (4 pi^2): u_{1 1bar} = (u_xx + u_yy) / 4 = -cos(2 pi x) / 4
    const TorusGrid g(1, 16);
    const TorusField u = TorusField::from_function(g, [](const auto& s) {
        return std::cos(kTwoPi * s[0]) / (kTwoPi * kTwoPi);
    });
    const HermitianField H = complex_hessian(u);
    for (std::size_t p = 0; p < g.size(); ++p)
        EXPECT_NEAR(H.diag[p], -std::cos(kTwoPi * g.point(p)[0]) / 4.0, 1e-12);
}

TEST(ComplexHessian, MatchesAnalyticEntries)
{
    CounterRng rng(3);
    for (int n = 1; n <= 2; ++n) {
        const TorusGrid g(n, 16);
        const Modes m = random_modes(g.dims(), rng);
        const TorusField u = TorusField::from_function(g, [&](const auto& s) { return m.value(s, g.dims()); });
        const HermitianField H = complex_hessian(u);
        double err = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            const auto s = g.point(p);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const int xa = 2 * a, ya = 2 * a + 1, xb = 2 * b, yb = 2 * b + 1;
                    const cplx want(0.25 * (m.second(s, g.dims(), xa, xb) + m.second(s, g.dims(), ya, yb)),
                                    0.25 * (m.second(s, g.dims(), xa, yb) - m.second(s, g.dims(), ya, xb)));
                    err = std::max(err, std::abs(H.at(p, a, b) - want));
                }
        }
        EXPECT_LT(err, 1e-10) << "n=" << n;
    }
}

TEST(ComplexHessian, SymbolIsHermitian)
{
    std::array<double, kMaxRealDim> k{};
    std::array<bool, kMaxRealDim> nyq{};
    CounterRng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        for (int d = 0; d < 4; ++d) {
            k[static_cast<std::size_t>(d)] = std::floor(rng.uniform(-8, 9));
            nyq[static_cast<std::size_t>(d)] = rng.uniform() < 0.2;
        }
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const auto ab = complex_hessian_symbol(k, nyq, a, b);
                const auto ba = complex_hessian_symbol(k, nyq, b, a);
                EXPECT_DOUBLE_EQ(ab.first, ba.first);
                EXPECT_DOUBLE_EQ(ab.second, -ba.second);
            }
    }
}

TEST(ComplexHessian, HermitianAtEveryPoint)
{
    CounterRng rng(5);
    const TorusGrid g(2, 8);
    TorusField u(g);
    for (double& v : u.values) v = rng.normal();
    const HermitianField H = complex_hessian(u);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto m = H.dense(p);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                EXPECT_LE(std::abs(m[static_cast<std::size_t>(a * 2 + b)] - std::conj(m[static_cast<std::size_t>(b * 2 + a)])),
                          1e-13);
    }
}

// Fourth-order central differences of the band-limited field converge to the
// spectral Hessian at rate h^4.
TEST(ComplexHessian, FourthOrderFiniteDifferences)
{
    CounterRng rng(6);
    const Modes m = random_modes(2, rng, 4, 2);
    std::vector<double> errs;
    for (int N : {32, 64}) {
        const TorusGrid g(1, N);
        const TorusField u = TorusField::from_function(g, [&](const auto& s) { return m.value(s, 2); });
        const HermitianField H = complex_hessian(u);
        const double h = g.h();
        auto at = [&](std::size_t p, int dx, int dy) {
            auto idx = g.index_of(p);
            idx[0] += dx;
            idx[1] += dy;
            return u[g.flat_of(idx)];
        };
        double err = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            auto d2 = [&](int ax) {
                const int ex = ax == 0, ey = ax == 1;
                return (-at(p, 2 * ex, 2 * ey) + 16 * at(p, ex, ey) - 30 * u[p] + 16 * at(p, -ex, -ey) -
                        at(p, -2 * ex, -2 * ey)) /
                       (12 * h * h);
            };
            err = std::max(err, std::abs(H.diag[p] - 0.25 * (d2(0) + d2(1))));
        }
        errs.push_back(err);
    }
    EXPECT_LT(errs[1], 1e-2);
    EXPECT_GT(errs[0] / errs[1], 12.0);
}

TEST(Eigenvalues, MatchEigenSolver)
{
    CounterRng rng(8);
    for (int n = 1; n <= 3; ++n)
        for (int trial = 0; trial < 200; ++trial) {
            Eigen::MatrixXcd A(n, n);
            std::array<cplx, kMaxComplexDim * kMaxComplexDim> m{};
            for (int a = 0; a < n; ++a) {
                A(a, a) = rng.normal();
                for (int b = a + 1; b < n; ++b) {
                    A(a, b) = cplx(rng.normal(), rng.normal());
                    A(b, a) = std::conj(A(a, b));
                }
            }
            if (trial % 10 == 0) A = Eigen::MatrixXcd::Identity(n, n) * 2.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) m[static_cast<std::size_t>(a * n + b)] = A(a, b);
            const auto got = hermitian_eigenvalues(m.data(), n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
            for (int j = 0; j < n; ++j)
                EXPECT_NEAR(got[static_cast<std::size_t>(j)], es.eigenvalues()(n - 1 - j), 1e-12) << n;
        }
}

TEST(Prolong, ExactForBandLimitedFields)
{
    CounterRng rng(9);
    const Modes m = random_modes(4, rng, 5, 3);
    const TorusGrid coarse(2, 8), fine(2, 16);
    const TorusField uc = TorusField::from_function(coarse, [&](const auto& s) { return m.value(s, 4); });
    const TorusField uf = TorusField::from_function(fine, [&](const auto& s) { return m.value(s, 4); });
    EXPECT_LT(max_abs_difference(prolong(uc, fine), uf), 1e-12);
}

TEST(Gradient, NormMatchesAnalytic)
{
    // |Du|^2 = 1/4 sum over real axes of u_axis^2
    const TorusGrid g(1, 16);
    const TorusField u = TorusField::from_function(g, [](const auto& s) { return std::sin(kTwoPi * s[0]); });
    SpectralOps ops(g);
    ops.load(u.values);
    const auto grad = gradient_loaded(ops);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double ux = kTwoPi * std::cos(kTwoPi * g.point(p)[0]);
        EXPECT_NEAR(gradient_norm2(grad, p), 0.25 * ux * ux, 1e-11);
    }
}
