#pragma once

// Flat complex torus C^n / Z^{2n} sampled on a uniform grid, with spectral
// differentiation through FFTW. Grid axes are ordered (x1, y1, ..., xn, yn),
// row-major with x1 slowest.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "common.hpp"
#include "parallel.hpp"

namespace hklab {

using cplx = std::complex<double>;

inline constexpr int kMaxComplexDim = 3;
inline constexpr int kMaxRealDim = 2 * kMaxComplexDim;

struct TorusGrid {
    int n = 1;
    int N = 16;

    TorusGrid() = default;
    TorusGrid(int n_, int N_) : n(n_), N(N_)
    {
        if (n < 1 || n > kMaxComplexDim) throw domain_error("TorusGrid: complex dimension must be 1, 2 or 3");
        if (N < 8 || (N & (N - 1)) != 0) throw domain_error("TorusGrid: N must be a power of two >= 8");
    }

    int dims() const noexcept { return 2 * n; }
    double h() const noexcept { return 1.0 / N; }

    std::size_t size() const noexcept
    {
        std::size_t s = 1;
        for (int d = 0; d < dims(); ++d) s *= static_cast<std::size_t>(N);
        return s;
    }

    /// r2c output length: N^{2n-1} (N/2 + 1)
    std::size_t spectral_size() const noexcept { return size() / static_cast<std::size_t>(N) * (N / 2 + 1); }

    std::array<int, kMaxRealDim> index_of(std::size_t flat) const noexcept
    {
        std::array<int, kMaxRealDim> a{};
        for (int d = dims() - 1; d >= 0; --d) {
            a[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(N));
            flat /= static_cast<std::size_t>(N);
        }
        return a;
    }

    std::size_t flat_of(const std::array<int, kMaxRealDim>& a) const noexcept
    {
        std::size_t f = 0;
        for (int d = 0; d < dims(); ++d)
            f = f * static_cast<std::size_t>(N) + static_cast<std::size_t>(((a[static_cast<std::size_t>(d)] % N) + N) % N);
        return f;
    }

    /// Coordinates in [0, 1) of a grid point.
    std::array<double, kMaxRealDim> point(std::size_t flat) const noexcept
    {
        const auto a = index_of(flat);
        std::array<double, kMaxRealDim> x{};
        for (int d = 0; d < dims(); ++d) x[static_cast<std::size_t>(d)] = a[static_cast<std::size_t>(d)] * h();
        return x;
    }

    bool operator==(const TorusGrid&) const = default;
};

struct TorusField {
    TorusGrid grid;
    std::vector<double> values;
    /// set when the field is kept in the mean-zero gauge
    bool mean_zero = false;

    TorusField() = default;
    explicit TorusField(const TorusGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    template <typename F>
    static TorusField from_function(const TorusGrid& g, F&& f)
    {
        TorusField u(g);
        for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = f(g.point(i));
        return u;
    }

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double mean() const
    {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    bool finite() const
    {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
};

inline double max_abs_difference(const TorusField& a, const TorusField& b)
{
    if (!(a.grid == b.grid)) throw domain_error("max_abs_difference: grids differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

namespace detail {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace detail

/// Per-point Hermitian n x n matrices: the real diagonal and the upper
/// triangle (row-major over a < b).
struct HermitianField {
    int n = 1;
    std::size_t points = 0;
    std::vector<double> diag;
    std::vector<cplx> upper;

    HermitianField() = default;
    HermitianField(int n_, std::size_t points_)
        : n(n_), points(points_), diag(points_ * static_cast<std::size_t>(n_)),
          upper(points_ * static_cast<std::size_t>(n_ * (n_ - 1) / 2))
    {
    }

    static std::size_t pair_index(int n, int a, int b)
    {
        // position of (a, b), a < b, in the row-major upper triangle
        return static_cast<std::size_t>(a * n - a * (a + 1) / 2 + (b - a - 1));
    }

    std::size_t pairs() const noexcept { return static_cast<std::size_t>(n * (n - 1) / 2); }

    /// Entry (a, b) at a grid point.
    cplx at(std::size_t point, int a, int b) const
    {
        if (a == b) return diag[point * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)];
        if (a < b) return upper[point * pairs() + pair_index(n, a, b)];
        return std::conj(upper[point * pairs() + pair_index(n, b, a)]);
    }

    /// Dense row-major copy of the matrix at one point.
    std::array<cplx, kMaxComplexDim * kMaxComplexDim> dense(std::size_t point) const
    {
        std::array<cplx, kMaxComplexDim * kMaxComplexDim> m{};
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m[static_cast<std::size_t>(a * n + b)] = at(point, a, b);
        return m;
    }
};

/// Spectral derivatives on one grid. Plans are created with FFTW_ESTIMATE so
/// transforms are reproducible run to run. Not safe to share between threads.
class SpectralOps {
public:
    explicit SpectralOps(const TorusGrid& g) : grid_(g), spec_(g.spectral_size()), scratch_(g.spectral_size())
    {
        std::array<int, kMaxRealDim> dims{};
        for (int d = 0; d < g.dims(); ++d) dims[static_cast<std::size_t>(d)] = g.N;
        std::vector<double> tmp(g.size());
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_dft_r2c(g.dims(), dims.data(), tmp.data(), as_fftw(spec_.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
        inverse_ = fftw_plan_dft_c2r(g.dims(), dims.data(), as_fftw(spec_.data()), tmp.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!forward_ || !inverse_) throw domain_error("SpectralOps: FFTW planning failed");

        const int N = g.N;
        wave_.resize(static_cast<std::size_t>(N));
        for (int j = 0; j < N; ++j) wave_[static_cast<std::size_t>(j)] = j <= N / 2 ? j : j - N;
    }

    ~SpectralOps()
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    SpectralOps(const SpectralOps&) = delete;
    SpectralOps& operator=(const SpectralOps&) = delete;

    const TorusGrid& grid() const noexcept { return grid_; }

    /// Loads a real field into the internal spectrum.
    void load(std::span<const double> values)
    {
        if (values.size() != grid_.size()) throw domain_error("SpectralOps: field size does not match grid");
        fftw_execute_dft_r2c(forward_, const_cast<double*>(values.data()), as_fftw(spec_.data()));
    }

    std::span<const cplx> spectrum() const noexcept { return spec_; }
    std::span<cplx> spectrum() noexcept { return spec_; }

    /// out = inverse transform of symbol(k) * loaded spectrum. The symbol is
    /// called with the integer wavenumbers and a mask of Nyquist axes.
    template <typename Symbol>
    void apply(Symbol&& symbol, std::span<double> out)
    {
        if (out.size() != grid_.size()) throw domain_error("SpectralOps: output size does not match grid");
        const int D = grid_.dims();
        const int N = grid_.N;
        const int last = N / 2 + 1;
        std::array<int, kMaxRealDim> idx{};
        std::array<double, kMaxRealDim> k{};
        std::array<bool, kMaxRealDim> nyq{};
        const double norm = 1.0 / static_cast<double>(grid_.size());
        for (std::size_t f = 0; f < spec_.size(); ++f) {
            for (int d = 0; d < D; ++d) {
                const auto ud = static_cast<std::size_t>(d);
                k[ud] = d == D - 1 ? idx[ud] : wave_[static_cast<std::size_t>(idx[ud])];
                nyq[ud] = idx[ud] == N / 2;
            }
            scratch_[f] = norm * symbol(k, nyq) * spec_[f];
            for (int d = D - 1; d >= 0; --d) {
                const auto ud = static_cast<std::size_t>(d);
                if (++idx[ud] < (d == D - 1 ? last : N)) break;
                idx[ud] = 0;
            }
        }
        fftw_execute_dft_c2r(inverse_, as_fftw(scratch_.data()), out.data());
    }

    /// Real partial derivative along `axis` of the loaded field.
    void derivative(int axis, std::span<double> out)
    {
        const auto a = static_cast<std::size_t>(axis);
        apply([&](const auto& k, const auto& nyq) { return nyq[a] ? cplx{} : cplx(0.0, kTwoPi * k[a]); }, out);
    }

    /// Real second derivative along axes a, b of the loaded field.
    void second_derivative(int a, int b, std::span<double> out)
    {
        apply([&](const auto& k, const auto& nyq) { return cplx(second_symbol(k, nyq, a, b), 0.0); }, out);
    }

    /// (2 pi i)^2 k_a k_b with the odd Nyquist modes dropped for a != b.
    static double second_symbol(const std::array<double, kMaxRealDim>& k, const std::array<bool, kMaxRealDim>& nyq,
                                int a, int b)
    {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (a == b) return -kTwoPi * kTwoPi * k[ua] * k[ua];
        if (nyq[ua] || nyq[ub]) return 0.0;
        return -kTwoPi * kTwoPi * k[ua] * k[ub];
    }

    static constexpr double kTwoPi = 2.0 * std::numbers::pi;

private:
    static fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

    TorusGrid grid_;
    std::vector<cplx> spec_;
    std::vector<cplx> scratch_;
    std::vector<double> wave_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

/// Fourier symbol of the complex Hessian entry u_{a bbar}:
///   1/4 (d_xa d_xb + d_ya d_yb) + i/4 (d_xa d_yb - d_ya d_xb).
/// Returned as (real part symbol, imaginary part symbol), both real numbers.
inline std::pair<double, double> complex_hessian_symbol(const std::array<double, kMaxRealDim>& k,
                                                        const std::array<bool, kMaxRealDim>& nyq, int a, int b)
{
    const int xa = 2 * a, ya = 2 * a + 1, xb = 2 * b, yb = 2 * b + 1;
    const double re = 0.25 * (SpectralOps::second_symbol(k, nyq, xa, xb) + SpectralOps::second_symbol(k, nyq, ya, yb));
    const double im = a == b ? 0.0
                             : 0.25 * (SpectralOps::second_symbol(k, nyq, xa, yb) -
                                       SpectralOps::second_symbol(k, nyq, ya, xb));
    return {re, im};
}

/// Complex Hessian of the field currently loaded in `ops`.
inline HermitianField complex_hessian_loaded(SpectralOps& ops)
{
    const TorusGrid& g = ops.grid();
    const std::size_t P = g.size();
    HermitianField H(g.n, P);
    std::vector<double> buf(P);
    for (int a = 0; a < g.n; ++a) {
        ops.apply([&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, a).first, 0.0); },
                  buf);
        for (std::size_t p = 0; p < P; ++p) H.diag[p * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(a)] = buf[p];
    }
    for (int a = 0; a < g.n; ++a)
        for (int b = a + 1; b < g.n; ++b) {
            const std::size_t pi = HermitianField::pair_index(g.n, a, b);
            ops.apply([&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, b).first, 0.0); },
                      buf);
            for (std::size_t p = 0; p < P; ++p) H.upper[p * H.pairs() + pi] = cplx(buf[p], 0.0);
            ops.apply(
                [&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, b).second, 0.0); }, buf);
            for (std::size_t p = 0; p < P; ++p) H.upper[p * H.pairs() + pi].imag(buf[p]);
        }
    return H;
}

inline HermitianField complex_hessian(const TorusField& u, SpectralOps& ops)
{
    ops.load(u.values);
    return complex_hessian_loaded(ops);
}

inline HermitianField complex_hessian(const TorusField& u)
{
    SpectralOps ops(u.grid);
    return complex_hessian(u, ops);
}

/// Real gradient (d_x1, d_y1, ...) of the loaded field, one vector per axis.
inline std::vector<std::vector<double>> gradient_loaded(SpectralOps& ops)
{
    const TorusGrid& g = ops.grid();
    std::vector<std::vector<double>> out(static_cast<std::size_t>(g.dims()), std::vector<double>(g.size()));
    for (int d = 0; d < g.dims(); ++d) ops.derivative(d, out[static_cast<std::size_t>(d)]);
    return out;
}

/// |Du|^2 = sum_l |u_{z_l}|^2 = 1/4 sum over real axes of u_axis^2.
inline double gradient_norm2(const std::vector<std::vector<double>>& grad, std::size_t p)
{
    double s = 0.0;
    for (const auto& g : grad) s += g[p] * g[p];
    return 0.25 * s;
}

/// Eigenvalues, largest first, of a dense Hermitian n x n matrix (row-major).
/// Closed form for n <= 2; cyclic Jacobi on the real 2n x 2n embedding
/// otherwise (tolerance 1e-14 relative, at most 30 sweeps).
inline std::array<double, kMaxComplexDim> hermitian_eigenvalues(const cplx* m, int n)
{
    std::array<double, kMaxComplexDim> ev{};
    if (n == 1) {
        ev[0] = m[0].real();
        return ev;
    }
    if (n == 2) {
        const double a = m[0].real(), d = m[3].real();
        const double half = 0.5 * (a - d);
        const double r = std::hypot(half, std::abs(m[1]));
        const double mid = 0.5 * (a + d);
        ev[0] = mid + r;
        ev[1] = mid - r;
        return ev;
    }
    constexpr int R = kMaxRealDim;
    const int r = 2 * n;
    double A[R][R] = {};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx z = m[i * n + j];
            A[i][j] = z.real();
            A[i + n][j + n] = z.real();
            A[i][j + n] = -z.imag();
            A[i + n][j] = z.imag();
        }
    double scale = 0.0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) scale = std::max(scale, std::abs(A[i][j]));
    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j) off = std::max(off, std::abs(A[i][j]));
        if (off <= 1e-14 * std::max(scale, 1e-300)) break;
        for (int p = 0; p < r; ++p)
            for (int q = p + 1; q < r; ++q) {
                if (A[p][q] == 0.0) continue;
                const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < r; ++k) {
                    const double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < r; ++k) {
                    const double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::array<double, R> d{};
    for (int i = 0; i < r; ++i) d[static_cast<std::size_t>(i)] = A[i][i];
    std::sort(d.begin(), d.begin() + r, std::greater<>());
    // each eigenvalue appears twice in the embedding
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(2 * i)];
    return ev;
}

/// Spectral interpolation onto a grid with the same n and fine.N >= coarse.N.
inline TorusField prolong(const TorusField& coarse, const TorusGrid& fine)
{
    const TorusGrid& cg = coarse.grid;
    if (fine.n != cg.n || fine.N < cg.N) throw domain_error("prolong: target grid must refine the source");
    if (fine.N == cg.N) return coarse;
    SpectralOps cops(cg);
    cops.load(coarse.values);
    const auto cs = cops.spectrum();
    const int D = cg.dims();
    const int Nc = cg.N, Nf = fine.N;
    const int lastc = Nc / 2 + 1, lastf = Nf / 2 + 1;
    std::vector<cplx> fs(fine.spectral_size());
    std::array<int, kMaxRealDim> idx{};
    const double ratio = static_cast<double>(fine.size()) / static_cast<double>(cg.size());
    for (std::size_t f = 0; f < cs.size(); ++f) {
        bool nyquist = false;
        std::size_t target = 0;
        for (int d = 0; d < D; ++d) {
            const int j = idx[static_cast<std::size_t>(d)];
            if (j == Nc / 2) nyquist = true;
            const int w = d == D - 1 ? j : (j <= Nc / 2 ? j : j - Nc);
            const int jf = d == D - 1 ? w : (w >= 0 ? w : w + Nf);
            target = target * static_cast<std::size_t>(d == D - 1 ? lastf : Nf) + static_cast<std::size_t>(jf);
        }
        if (!nyquist) fs[target] = cs[f] * ratio;
        for (int d = D - 1; d >= 0; --d) {
            const auto ud = static_cast<std::size_t>(d);
            if (++idx[ud] < (d == D - 1 ? lastc : Nc)) break;
            idx[ud] = 0;
        }
    }
    SpectralOps fops(fine);
    std::copy(fs.begin(), fs.end(), fops.spectrum().begin());
    TorusField out(fine);
    out.mean_zero = coarse.mean_zero;
    fops.apply([](const auto&, const auto&) { return cplx(1.0, 0.0); }, out.values);
    return out;
}

} // namespace hklab
