#pragma once

// Damped Newton for sigma_k(chi(z,u) I + Hess u) = psi(z, Du, u) on a flat
// torus, psi = P + beta (|Du|^2 - q) + gamma (u - r).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "torus.hpp"

namespace hklab {

struct ChiModel {
    double c0 = 1.0;
    double c1 = 0.0;
    double epsilon = 0.1;
    /// chi = e^u + f e^{-u} instead of c0 + c1 u
    bool fu_yau = false;
    double f = 0.0;

    void validate() const
    {
        if (!(epsilon > 0.0)) throw domain_error("ChiModel: epsilon must be positive");
        if (!fu_yau && !(c0 >= epsilon)) throw domain_error("ChiModel: c0 must be at least epsilon");
        if (fu_yau && !(f >= 0.0)) throw domain_error("ChiModel: f must be nonnegative");
    }

    double raw(double u) const { return fu_yau ? std::exp(u) + f * std::exp(-u) : c0 + c1 * u; }
    double value(double u) const { return std::max(raw(u), epsilon); }
    double slope(double u) const
    {
        if (raw(u) <= epsilon) return 0.0;
        return fu_yau ? std::exp(u) - f * std::exp(-u) : c1;
    }
};

struct RhsModel {
    TorusField P;
    double beta = 0.0;
    double gamma = 0.0;
    TorusField q;
    TorusField r;
    /// psi must stay above this at every point of an accepted iterate
    double psi_min = 0.0;

    double psi(std::size_t p, double du2, double u) const
    {
        return P[p] + beta * (du2 - q[p]) + gamma * (u - r[p]);
    }
};

class ConeViolation : public domain_error {
public:
    ConeViolation(const std::string& what, std::vector<std::size_t> points)
        : domain_error(what), points_(std::move(points))
    {
    }
    const std::vector<std::size_t>& points() const noexcept { return points_; }

private:
    std::vector<std::size_t> points_;
};

namespace detail {

using SmallMatrix = std::array<cplx, kMaxComplexDim * kMaxComplexDim>;

/// e_0..e_k of the first n entries.
inline std::array<double, kMaxComplexDim + 1> small_esf(const std::array<double, kMaxComplexDim>& l, int n, int k)
{
    std::array<double, kMaxComplexDim + 1> e{};
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::min(i + 1, k); j >= 1; --j) e[static_cast<std::size_t>(j)] += l[static_cast<std::size_t>(i)] * e[static_cast<std::size_t>(j - 1)];
    return e;
}

inline SmallMatrix small_mul(const SmallMatrix& a, const SmallMatrix& b, int n)
{
    SmallMatrix c{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx s{};
            for (int l = 0; l < n; ++l) s += a[static_cast<std::size_t>(i * n + l)] * b[static_cast<std::size_t>(l * n + j)];
            c[static_cast<std::size_t>(i * n + j)] = s;
        }
    return c;
}

/// d sigma_k / d g as a matrix: sum_{j<k} (-1)^j sigma_{k-1-j}(g) g^j.
inline SmallMatrix sigma_derivative(const SmallMatrix& g, const std::array<double, kMaxComplexDim + 1>& e, int n, int k)
{
    SmallMatrix S{}, power{};
    for (int i = 0; i < n; ++i) power[static_cast<std::size_t>(i * n + i)] = 1.0;
    for (int j = 0; j < k; ++j) {
        const double coef = ((j % 2) ? -1.0 : 1.0) * e[static_cast<std::size_t>(k - 1 - j)];
        for (int i = 0; i < n * n; ++i) S[static_cast<std::size_t>(i)] += coef * power[static_cast<std::size_t>(i)];
        if (j + 1 < k) power = small_mul(power, g, n);
    }
    return S;
}

} // namespace detail

/// Pointwise state of sigma_k(g) - psi for one field.
struct Evaluation {
    TorusField residual;
    double residual_inf = 0.0;
    /// min over points and m <= k of sigma_m(lambda(g))
    double min_sigma_margin = std::numeric_limits<double>::infinity();
    double lambda1_max = -std::numeric_limits<double>::infinity();
    double psi_min = std::numeric_limits<double>::infinity();
    /// points where g is outside Gamma_k or within the cone margin of its boundary
    std::vector<std::size_t> violations;
    std::size_t violation_count = 0;
    HermitianField hessian;
    std::vector<std::vector<double>> gradient;
};

struct EvaluateOptions {
    /// sigma_m(lambda) must exceed margin * (1 + |lambda|_inf)^m
    double cone_margin = 1e-8;
    /// cap on the number of violating points recorded
    std::size_t max_reported = 64;
};

inline Evaluation evaluate(const TorusField& u, const ChiModel& chi, const RhsModel& rhs, int k, SpectralOps& ops,
                           const EvaluateOptions& opt = {})
{
    const TorusGrid& g = u.grid;
    const int n = g.n;
    if (k < 1 || k > n) throw domain_error("evaluate: k outside [1, n]");
    if (!u.finite()) throw domain_error("evaluate: field has non-finite values");
    ops.load(u.values);
    Evaluation ev;
    ev.hessian = complex_hessian_loaded(ops);
    ev.gradient = gradient_loaded(ops);
    ev.residual = TorusField(g);
    const std::size_t P = g.size();
    std::size_t violation_count = 0;
    for (std::size_t p = 0; p < P; ++p) {
        auto m = ev.hessian.dense(p);
        const double c = chi.value(u[p]);
        for (int a = 0; a < n; ++a) m[static_cast<std::size_t>(a * n + a)] += c;
        const auto lam = hermitian_eigenvalues(m.data(), n);
        const auto e = detail::small_esf(lam, n, k);
        const double lmax = std::max(std::abs(lam[0]), std::abs(lam[static_cast<std::size_t>(n - 1)]));
        bool inside = true;
        for (int j = 1; j <= k; ++j) {
            const double s = e[static_cast<std::size_t>(j)];
            ev.min_sigma_margin = std::min(ev.min_sigma_margin, s);
            if (!(s > opt.cone_margin * std::pow(1.0 + lmax, j))) inside = false;
        }
        if (!inside) {
            ++violation_count;
            if (ev.violations.size() < opt.max_reported) ev.violations.push_back(p);
        }
        ev.lambda1_max = std::max(ev.lambda1_max, lam[0]);
        const double psi = rhs.psi(p, gradient_norm2(ev.gradient, p), u[p]);
        ev.psi_min = std::min(ev.psi_min, psi);
        ev.residual[p] = e[static_cast<std::size_t>(k)] - psi;
        ev.residual_inf = std::max(ev.residual_inf, std::abs(ev.residual[p]));
    }
    ev.violation_count = violation_count;
    return ev;
}

/// sigma_k(lambda(chi + Hess u)) - psi(z, Du, u) at every grid point.
inline TorusField residual(const TorusField& u, const ChiModel& chi, const RhsModel& rhs, int k)
{
    SpectralOps ops(u.grid);
    Evaluation ev = evaluate(u, chi, rhs, k, ops);
    if (!ev.violations.empty())
        throw ConeViolation("residual: cone violation at " + std::to_string(ev.violation_count) + " points",
                            ev.violations);
    return std::move(ev.residual);
}

/// Band-limited test profile with a nondegenerate minimum at (5/6, ..., 5/6):
///   a [ sum_axes cos(2 pi w (s - c)) - 1/2 cos(x1') cos(x2') - 1/2 cos(x1') cos(y2') ]
/// for n = 2 (n = 1 uses the single product cos(x1') cos(y1')), c = 1/3.
inline TorusField manufactured_profile(const TorusGrid& g, double amplitude, int wavenumber = 1)
{
    const double c = 1.0 / 3.0;
    const double w = 2.0 * std::numbers::pi * wavenumber;
    return TorusField::from_function(g, [&](const auto& s) {
        std::array<double, kMaxRealDim> cs{};
        double sum = 0.0;
        for (int d = 0; d < g.dims(); ++d) {
            cs[static_cast<std::size_t>(d)] = std::cos(w * (s[static_cast<std::size_t>(d)] - c));
            sum += cs[static_cast<std::size_t>(d)];
        }
        if (g.n == 1)
            sum -= 0.5 * cs[0] * cs[1];
        else
            sum -= 0.5 * cs[0] * cs[2] + 0.5 * cs[0] * cs[3];
        return amplitude * sum;
    });
}

/// Right-hand side for which u_star is an exact discrete solution.
inline RhsModel manufacture(const TorusField& u_star, const ChiModel& chi, int k, double beta, double gamma)
{
    chi.validate();
    const TorusGrid& g = u_star.grid;
    SpectralOps ops(g);
    RhsModel zero;
    zero.P = TorusField(g);
    zero.q = TorusField(g);
    zero.r = TorusField(g);
    Evaluation ev = evaluate(u_star, chi, zero, k, ops);
    if (!ev.violations.empty())
        throw ConeViolation("manufacture: cone violation of chi + Hess u*; reduce the amplitude", ev.violations);
    RhsModel rhs;
    rhs.beta = beta;
    rhs.gamma = gamma;
    rhs.P = std::move(ev.residual); // sigma_k(g*) - 0
    rhs.q = TorusField(g);
    for (std::size_t p = 0; p < g.size(); ++p) rhs.q[p] = gradient_norm2(ev.gradient, p);
    rhs.r = u_star;
    rhs.r.mean_zero = false;
    return rhs;
}

/// Linearization of the residual at a field:
///   J v = tr(S Hess v) + c v + sum_axes b_d d_d v,
/// S = d sigma_k / d g, c = chi'(u) tr S - gamma, b_d = -beta u_d / 2.
class Jacobian {
public:
    Jacobian(const TorusField& u, const Evaluation& ev, const ChiModel& chi, const RhsModel& rhs, int k)
        : grid_(u.grid), S_(u.grid.n, u.grid.size()), c_(u.grid.size()), b_(ev.gradient)
    {
        const int n = grid_.n;
        const std::size_t P = grid_.size();
        std::array<double, kMaxComplexDim> sbar_diag{};
        std::array<cplx, kMaxComplexDim * kMaxComplexDim> sbar_up{};
        double cbar = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            auto g = ev.hessian.dense(p);
            const double cv = chi.value(u[p]);
            for (int a = 0; a < n; ++a) g[static_cast<std::size_t>(a * n + a)] += cv;
            const auto lam = hermitian_eigenvalues(g.data(), n);
            const auto e = detail::small_esf(lam, n, k);
            const auto S = detail::sigma_derivative(g, e, n, k);
            double tr = 0.0;
            for (int a = 0; a < n; ++a) {
                const double sa = S[static_cast<std::size_t>(a * n + a)].real();
                S_.diag[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] = sa;
                sbar_diag[static_cast<std::size_t>(a)] += sa;
                tr += sa;
            }
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) {
                    const cplx s = S[static_cast<std::size_t>(a * n + b)];
                    S_.upper[p * S_.pairs() + HermitianField::pair_index(n, a, b)] = s;
                    sbar_up[HermitianField::pair_index(n, a, b)] += s;
                }
            c_[p] = chi.slope(u[p]) * tr - rhs.gamma;
            cbar += c_[p];
        }
        for (auto& v : b_)
            for (double& x : v) x *= -0.5 * rhs.beta;
        const double inv = 1.0 / static_cast<double>(P);
        for (auto& x : sbar_diag) x *= inv;
        for (auto& x : sbar_up) x *= inv;
        sbar_diag_ = sbar_diag;
        sbar_up_ = sbar_up;
        cbar_ = cbar * inv;
        has_gradient_term_ = rhs.beta != 0.0;
    }

    const TorusGrid& grid() const noexcept { return grid_; }

    void apply(std::span<const double> v, std::span<double> out, SpectralOps& ops, std::vector<double>& buf) const
    {
        const int n = grid_.n;
        const std::size_t P = grid_.size();
        buf.resize(P);
        ops.load(v);
        for (std::size_t p = 0; p < P; ++p) out[p] = c_[p] * v[p];
        for (int a = 0; a < n; ++a) {
            ops.apply([&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, a).first, 0.0); },
                      buf);
            for (std::size_t p = 0; p < P; ++p) out[p] += S_.diag[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] * buf[p];
        }
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                const std::size_t pi = HermitianField::pair_index(n, a, b);
                ops.apply(
                    [&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, b).first, 0.0); },
                    buf);
                for (std::size_t p = 0; p < P; ++p) out[p] += 2.0 * S_.upper[p * S_.pairs() + pi].real() * buf[p];
                ops.apply(
                    [&](const auto& k, const auto& nyq) { return cplx(complex_hessian_symbol(k, nyq, a, b).second, 0.0); },
                    buf);
                for (std::size_t p = 0; p < P; ++p) out[p] += 2.0 * S_.upper[p * S_.pairs() + pi].imag() * buf[p];
            }
        if (has_gradient_term_)
            for (int d = 0; d < grid_.dims(); ++d) {
                ops.derivative(d, buf);
                const auto& bd = b_[static_cast<std::size_t>(d)];
                for (std::size_t p = 0; p < P; ++p) out[p] += bd[p] * buf[p];
            }
    }

    /// Inverse of the constant-coefficient operator with the mean S and mean c;
    /// modes where that symbol vanishes are mapped to zero.
    void precondition(std::span<const double> v, std::span<double> out, SpectralOps& ops) const
    {
        const int n = grid_.n;
        ops.load(v);
        double smax = 0.0;
        for (int a = 0; a < n; ++a) smax = std::max(smax, std::abs(sbar_diag_[static_cast<std::size_t>(a)]));
        const double floor = 1e-13 * std::max({smax, std::abs(cbar_), 1e-300});
        ops.apply(
            [&](const auto& k, const auto& nyq) {
                double s = cbar_;
                for (int a = 0; a < n; ++a)
                    s += sbar_diag_[static_cast<std::size_t>(a)] * complex_hessian_symbol(k, nyq, a, a).first;
                for (int a = 0; a < n; ++a)
                    for (int b = a + 1; b < n; ++b) {
                        const auto [re, im] = complex_hessian_symbol(k, nyq, a, b);
                        const cplx sb = sbar_up_[HermitianField::pair_index(n, a, b)];
                        s += 2.0 * (sb.real() * re + sb.imag() * im);
                    }
                return std::abs(s) > floor ? cplx(1.0 / s, 0.0) : cplx{};
            },
            out);
    }

private:
    TorusGrid grid_;
    HermitianField S_;
    std::vector<double> c_;
    std::vector<std::vector<double>> b_;
    std::array<double, kMaxComplexDim> sbar_diag_{};
    std::array<cplx, kMaxComplexDim * kMaxComplexDim> sbar_up_{};
    double cbar_ = 0.0;
    bool has_gradient_term_ = false;
};

struct LinearSolveResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void remove_mean(std::span<double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (double& x : v) x -= s;
}

} // namespace detail

/// Right-preconditioned BiCGSTAB for J x = b, x starting from zero.
inline LinearSolveResult bicgstab(const Jacobian& J, std::span<const double> b, std::span<double> x, SpectralOps& ops,
                                  double rel_tol, int max_iter, bool gauge)
{
    const std::size_t P = b.size();
    std::vector<double> r(b.begin(), b.end()), r0, p(P, 0.0), v(P, 0.0), t(P), ph(P), buf;
    if (gauge) detail::remove_mean(r);
    r0 = r;
    std::fill(x.begin(), x.end(), 0.0);
    const double bnorm = std::sqrt(detail::dot(r, r));
    LinearSolveResult res;
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const double rho_new = detail::dot(r0, r);
        if (rho_new == 0.0) break;
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < P; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        J.precondition(p, ph, ops);
        if (gauge) detail::remove_mean(ph);
        J.apply(ph, v, ops, buf);
        if (gauge) detail::remove_mean(v);
        const double r0v = detail::dot(r0, v);
        if (r0v == 0.0) break;
        alpha = rho / r0v;
        for (std::size_t i = 0; i < P; ++i) {
            x[i] += alpha * ph[i];
            r[i] -= alpha * v[i];
        }
        double rn = std::sqrt(detail::dot(r, r));
        res.iterations = it;
        res.relative_residual = rn / bnorm;
        if (res.relative_residual <= rel_tol) {
            res.converged = true;
            return res;
        }
        J.precondition(r, ph, ops);
        if (gauge) detail::remove_mean(ph);
        J.apply(ph, t, ops, buf);
        if (gauge) detail::remove_mean(t);
        const double tt = detail::dot(t, t);
        if (tt == 0.0) break;
        omega = detail::dot(t, r) / tt;
        for (std::size_t i = 0; i < P; ++i) {
            x[i] += omega * ph[i];
            r[i] -= omega * t[i];
        }
        rn = std::sqrt(detail::dot(r, r));
        res.relative_residual = rn / bnorm;
        if (res.relative_residual <= rel_tol) {
            res.converged = true;
            return res;
        }
        if (omega == 0.0) break;
    }
    return res;
}

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double backtrack = 0.5;
    double min_step = 1e-12;
    double cone_margin = 1e-8;
    /// inexact Newton forcing: linear rel. tol = clamp(residual_inf, lo, hi)
    double linear_tol_lo = 1e-12;
    double linear_tol_hi = 1e-2;
    int linear_max_iter = 300;
    /// keep u mean-zero and drop the constant mode (needed when gamma = 0)
    bool mean_zero_gauge = false;
};

struct IterationLog {
    int iteration = 0;
    double residual_inf = 0.0;
    double min_sigma_margin = 0.0;
    double lambda1_max = 0.0;
    double G_max = std::numeric_limits<double>::quiet_NaN();
    double step = 0.0;
    int linear_iterations = 0;
};

struct SolveReport {
    int iterations = 0;
    double final_residual_inf = 0.0;
    double min_sigma_margin = 0.0;
    double lambda1_max = 0.0;
    double G_max = std::numeric_limits<double>::quiet_NaN();
    double G_argmax_gradient_norm = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::string message;
    /// |u - u*|_inf when a reference is known
    std::optional<double> error_inf;
    std::vector<IterationLog> history;

    /// r_{j+1} / r_j^2 over accepted full steps
    std::vector<double> quadratic_ratios() const
    {
        std::vector<double> out;
        for (std::size_t j = 1; j < history.size(); ++j) {
            const double a = history[j - 1].residual_inf, b = history[j].residual_inf;
            if (a > 0.0 && history[j].step == 1.0) out.push_back(b / (a * a));
        }
        return out;
    }
};

inline std::pair<TorusField, SolveReport> newton_solve(TorusField u0, const ChiModel& chi, const RhsModel& rhs, int k,
                                                       const NewtonOptions& opts = {})
{
    chi.validate();
    const TorusGrid& g = u0.grid;
    if (!(rhs.P.grid == g && rhs.q.grid == g && rhs.r.grid == g))
        throw precondition_error("newton_solve: right-hand side lives on a different grid");
    if (!(rhs.gamma > 0.0) && !opts.mean_zero_gauge)
        throw precondition_error("newton_solve: gamma must be positive unless the mean-zero gauge is enabled");
    if (rhs.gamma < 0.0) throw precondition_error("newton_solve: gamma must be nonnegative");
    if (opts.mean_zero_gauge) {
        const double mu = u0.mean();
        for (double& v : u0.values) v -= mu;
        u0.mean_zero = true;
    }

    SpectralOps ops(g);
    EvaluateOptions eopt;
    eopt.cone_margin = opts.cone_margin;
    Evaluation ev = evaluate(u0, chi, rhs, k, ops, eopt);
    if (!ev.violations.empty()) throw ConeViolation("newton_solve: cone violation at the initial guess", ev.violations);

    SolveReport rep;
    auto log = [&](int it, double step, int lin) {
        IterationLog l;
        l.iteration = it;
        l.residual_inf = ev.residual_inf;
        l.min_sigma_margin = ev.min_sigma_margin;
        l.lambda1_max = ev.lambda1_max;
        l.step = step;
        l.linear_iterations = lin;
        rep.history.push_back(l);
    };
    log(0, 0.0, 0);

    TorusField u = std::move(u0);
    std::vector<double> rhs_vec(g.size()), v(g.size());
    int it = 0;
    for (; it < opts.max_iter && ev.residual_inf > opts.tol; ++it) {
        const Jacobian J(u, ev, chi, rhs, k);
        for (std::size_t p = 0; p < g.size(); ++p) rhs_vec[p] = -ev.residual[p];
        const double eta = std::clamp(ev.residual_inf, opts.linear_tol_lo, opts.linear_tol_hi);
        const LinearSolveResult lin = bicgstab(J, rhs_vec, v, ops, eta, opts.linear_max_iter, opts.mean_zero_gauge);

        double step = 1.0;
        bool accepted = false;
        TorusField trial(g);
        trial.mean_zero = u.mean_zero;
        while (step >= opts.min_step) {
            for (std::size_t p = 0; p < g.size(); ++p) trial[p] = u[p] + step * v[p];
            Evaluation te = evaluate(trial, chi, rhs, k, ops, eopt);
            if (te.violations.empty() && te.psi_min > rhs.psi_min && te.residual_inf < ev.residual_inf) {
                ev = std::move(te);
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted) {
            rep.message = "line search failed: step below " + std::to_string(opts.min_step);
            break;
        }
        u = std::move(trial);
        log(it + 1, step, lin.iterations);
    }
    rep.iterations = static_cast<int>(rep.history.size()) - 1;
    rep.final_residual_inf = ev.residual_inf;
    rep.min_sigma_margin = ev.min_sigma_margin;
    rep.lambda1_max = ev.lambda1_max;
    rep.converged = ev.residual_inf <= opts.tol;
    if (rep.message.empty()) rep.message = rep.converged ? "converged" : "iteration limit reached";
    return {std::move(u), std::move(rep)};
}

struct MonitorParams {
    int m = 7;
    double M = 1.0;
    /// coefficient N of |Du|^2 in G
    double Ncoef = 1.0;
};

struct MonitorReport {
    double lambda1_max = 0.0;
    double min_sigma_margin = 0.0;
    /// eigenvalue shift applied before log P_m (0 when g > 0 everywhere)
    double K0 = 0.0;
    double G_max = 0.0;
    std::size_t G_argmax = 0;
    std::array<double, kMaxRealDim> G_argmax_point{};
    /// spectral |grad G| at the argmax, the discrete critical-equation residual
    double G_argmax_gradient_norm = 0.0;
    /// min over points of (-tr(S Hess u) - (eps tr S - k sigma_k)) / (1 + |lambda|_inf)^k
    double trace_bound_min_margin = 0.0;
    std::vector<double> G;
};

/// Test-function and pointwise-inequality diagnostics at a field.
inline MonitorReport monitor(const TorusField& u, const ChiModel& chi, int k, const MonitorParams& params)
{
    const TorusGrid& g = u.grid;
    const int n = g.n;
    if (k < 1 || k > n) throw domain_error("monitor: k outside [1, n]");
    if (params.m < 1) throw domain_error("monitor: m must be positive");
    SpectralOps ops(g);
    ops.load(u.values);
    const HermitianField H = complex_hessian_loaded(ops);
    const auto grad = gradient_loaded(ops);
    const std::size_t P = g.size();

    MonitorReport rep;
    rep.lambda1_max = -std::numeric_limits<double>::infinity();
    rep.min_sigma_margin = std::numeric_limits<double>::infinity();
    rep.trace_bound_min_margin = std::numeric_limits<double>::infinity();
    std::vector<std::array<double, kMaxComplexDim>> lams(P);
    double lmin = std::numeric_limits<double>::infinity(), labs = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        auto m = H.dense(p);
        const double c = chi.value(u[p]);
        for (int a = 0; a < n; ++a) m[static_cast<std::size_t>(a * n + a)] += c;
        const auto lam = hermitian_eigenvalues(m.data(), n);
        lams[p] = lam;
        const auto e = detail::small_esf(lam, n, k);
        for (int j = 1; j <= k; ++j) rep.min_sigma_margin = std::min(rep.min_sigma_margin, e[static_cast<std::size_t>(j)]);
        rep.lambda1_max = std::max(rep.lambda1_max, lam[0]);
        lmin = std::min(lmin, lam[static_cast<std::size_t>(n - 1)]);
        const double la = std::max(std::abs(lam[0]), std::abs(lam[static_cast<std::size_t>(n - 1)]));
        labs = std::max(labs, la);

        // -tr(S u_{..}) >= eps tr S - k sigma_k, with S = d sigma_k / d g
        const auto S = detail::sigma_derivative(m, e, n, k);
        double trSH = 0.0, trS = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) trSH += (S[static_cast<std::size_t>(a * n + b)] * H.at(p, b, a)).real();
        for (int a = 0; a < n; ++a) trS += S[static_cast<std::size_t>(a * n + a)].real();
        const double margin = -trSH - (chi.epsilon * trS - k * e[static_cast<std::size_t>(k)]);
        rep.trace_bound_min_margin = std::min(rep.trace_bound_min_margin, margin / std::pow(1.0 + la, k));
    }
    rep.K0 = lmin > 0.0 ? 0.0 : -lmin + 1e-8 * std::max(1.0, labs);

    rep.G.resize(P);
    rep.G_max = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < P; ++p) {
        double pm = 0.0;
        for (int a = 0; a < n; ++a) pm += std::pow(lams[p][static_cast<std::size_t>(a)] + rep.K0, params.m);
        const double G = std::log(pm) + params.m * params.Ncoef * gradient_norm2(grad, p) - params.m * params.M * u[p];
        rep.G[p] = G;
        if (G > rep.G_max) {
            rep.G_max = G;
            rep.G_argmax = p;
        }
    }
    rep.G_argmax_point = g.point(rep.G_argmax);
    ops.load(rep.G);
    std::vector<double> buf(P);
    double s = 0.0;
    for (int d = 0; d < g.dims(); ++d) {
        ops.derivative(d, buf);
        s += buf[rep.G_argmax] * buf[rep.G_argmax];
    }
    rep.G_argmax_gradient_norm = std::sqrt(s);
    return rep;
}

/// A manufactured or explicit problem on one grid.
struct ProblemSpec {
    int n = 2;
    int k = 2;
    int N = 32;
    ChiModel chi;
    /// "manufactured" or "explicit"
    std::string rhs_mode = "manufactured";
    double amplitude = 0.05;
    int wavenumber = 1;
    double beta = 0.0;
    double gamma = 1.0;
    /// constant P for the explicit mode
    double P = 1.0;
    /// initial guess: initial_amplitude times the manufactured profile
    double initial_amplitude = 0.0;
    NewtonOptions newton;
    MonitorParams monitor;
    /// solve on 16, 32, ... first and interpolate up (0 = off)
    int coarse_N = 0;
};

struct ProblemResult {
    TorusField u;
    SolveReport report;
    MonitorReport monitor;
    std::vector<SolveReport> coarse_reports;
};

inline RhsModel build_rhs(const ProblemSpec& s, const TorusGrid& g)
{
    if (s.rhs_mode == "manufactured")
        return manufacture(manufactured_profile(g, s.amplitude, s.wavenumber), s.chi, s.k, s.beta, s.gamma);
    if (s.rhs_mode == "explicit") {
        RhsModel r;
        r.P = TorusField(g, s.P);
        r.q = TorusField(g);
        r.r = TorusField(g);
        r.beta = s.beta;
        r.gamma = s.gamma;
        return r;
    }
    throw domain_error("rhs mode must be 'manufactured' or 'explicit'");
}

inline ProblemResult solve_problem(const ProblemSpec& s)
{
    const TorusGrid fine(s.n, s.N);
    if (s.k < 1 || s.k > s.n) throw domain_error("k outside [1, n]");
    ProblemResult out;
    std::vector<int> levels;
    if (s.coarse_N > 0) {
        const TorusGrid check(s.n, s.coarse_N);
        for (int N = check.N; N < s.N; N *= 2) levels.push_back(N);
    }
    levels.push_back(s.N);

    TorusField u;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const TorusGrid g(s.n, levels[li]);
        const RhsModel rhs = build_rhs(s, g);
        TorusField u0 = li == 0 ? manufactured_profile(g, s.initial_amplitude, s.wavenumber) : prolong(u, g);
        auto [sol, rep] = newton_solve(std::move(u0), s.chi, rhs, s.k, s.newton);
        if (s.rhs_mode == "manufactured") {
            TorusField ref = manufactured_profile(g, s.amplitude, s.wavenumber);
            if (s.newton.mean_zero_gauge) {
                const double mu = ref.mean();
                for (double& v : ref.values) v -= mu;
            }
            rep.error_inf = max_abs_difference(sol, ref);
        }
        u = std::move(sol);
        if (li + 1 < levels.size()) {
            if (!rep.converged) {
                out.report = rep;
                out.report.message = "coarse level N=" + std::to_string(levels[li]) + ": " + rep.message;
                out.u = prolong(u, fine);
                return out;
            }
            out.coarse_reports.push_back(std::move(rep));
        } else {
            out.report = std::move(rep);
        }
    }
    out.monitor = monitor(u, s.chi, s.k, s.monitor);
    out.report.G_max = out.monitor.G_max;
    out.report.G_argmax_gradient_norm = out.monitor.G_argmax_gradient_norm;
    if (!out.report.history.empty()) out.report.history.back().G_max = out.monitor.G_max;
    out.u = std::move(u);
    return out;
}

struct RefinementRow {
    int N = 0;
    int iterations = 0;
    double error_inf = std::numeric_limits<double>::quiet_NaN();
    double residual_inf = 0.0;
    double G_argmax_gradient_norm = 0.0;
    double trace_bound_min_margin = 0.0;
    double lambda1_max = 0.0;
    bool converged = false;
};

/// Solves the same problem on each grid, each starting from the previous
/// solution interpolated up.
inline std::vector<RefinementRow> refinement_study(ProblemSpec base, const std::vector<int>& grids)
{
    for (std::size_t i = 1; i < grids.size(); ++i)
        if (grids[i] <= grids[i - 1]) throw domain_error("refinement_study: grids must increase");
    std::vector<RefinementRow> rows;
    TorusField u;
    for (std::size_t i = 0; i < grids.size(); ++i) {
        const TorusGrid g(base.n, grids[i]);
        const RhsModel rhs = build_rhs(base, g);
        TorusField u0 = i == 0 ? manufactured_profile(g, base.initial_amplitude, base.wavenumber) : prolong(u, g);
        auto [sol, rep] = newton_solve(std::move(u0), base.chi, rhs, base.k, base.newton);
        RefinementRow row;
        row.N = grids[i];
        row.iterations = rep.iterations;
        row.residual_inf = rep.final_residual_inf;
        row.converged = rep.converged;
        if (base.rhs_mode == "manufactured")
            row.error_inf = max_abs_difference(sol, manufactured_profile(g, base.amplitude, base.wavenumber));
        const MonitorReport mr = monitor(sol, base.chi, base.k, base.monitor);
        row.G_argmax_gradient_norm = mr.G_argmax_gradient_norm;
        row.trace_bound_min_margin = mr.trace_bound_min_margin;
        row.lambda1_max = mr.lambda1_max;
        rows.push_back(row);
        u = std::move(sol);
        if (!row.converged) break;
    }
    return rows;
}

} // namespace hklab
