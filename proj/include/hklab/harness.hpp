#pragma once

// Pointwise evaluation of the third-order inequalities behind the C^2
// estimate for sigma_k(chi + i ddbar u) = psi(z, Du, u).
//
// Everything here works at a single point where g is diagonal with spectrum
// lambda (sorted descending, 0-based: index 0 is lambda_1). Third-order data
// t(i, p, q) stands for D_i g_{q p}; the diagonal slice t(i, p, p) is the only
// part the A..E terms see.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "cone.hpp"
#include "symfun.hpp"

namespace hklab {

using cplx = std::complex<double>;

/// Complex tensor t[i][p][q] modelling D_i g_{q p}. No symmetry is imposed.
class ThirdOrderData {
public:
    ThirdOrderData() = default;
    explicit ThirdOrderData(std::size_t n) : n_(n), t_(n * n * n, cplx{}) {}

    std::size_t size() const noexcept { return n_; }

    cplx& operator()(std::size_t i, std::size_t p, std::size_t q) { return t_[(i * n_ + p) * n_ + q]; }
    const cplx& operator()(std::size_t i, std::size_t p, std::size_t q) const
    {
        return t_[(i * n_ + p) * n_ + q];
    }

    /// D_i g_{p p}
    cplx diag(std::size_t i, std::size_t p) const { return (*this)(i, p, p); }

    std::vector<cplx> diagonal_slice(std::size_t i) const
    {
        std::vector<cplx> w(n_);
        for (std::size_t p = 0; p < n_; ++p) w[p] = diag(i, p);
        return w;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (const cplx& z : t_) m = std::max(m, std::abs(z));
        return m;
    }

    std::span<const cplx> raw() const noexcept { return t_; }

    /// Consistent relabelling: out(i,p,q) = in(perm[i], perm[p], perm[q]).
    ThirdOrderData permuted(std::span<const std::size_t> perm) const
    {
        ThirdOrderData out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t p = 0; p < n_; ++p)
                for (std::size_t q = 0; q < n_; ++q) out(i, p, q) = (*this)(perm[i], perm[p], perm[q]);
        return out;
    }

private:
    std::size_t n_ = 0;
    std::vector<cplx> t_;
};

/// Complex Gaussian tensor; diagonal entries t(i,p,p) use `diag_scale`, the
/// rest `offdiag_scale`.
inline ThirdOrderData sample_third_order(std::size_t n, CounterRng& rng, double diag_scale = 1.0,
                                         double offdiag_scale = 1.0)
{
    ThirdOrderData t(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) {
                const double s = (p == q) ? diag_scale : offdiag_scale;
                const double re = rng.normal();
                const double im = rng.normal();
                t(i, p, q) = s * cplx(re, im);
            }
    return t;
}

struct EstimateParams {
    int m = 7;
    double M = 1.0;
    double N = 1.0;
    double K = 1.0;
    double tau = 0.5;
    double delta = 0.5;
    double delta_prime = 0.01;
    double epsilon = 1.0;
    int mu = 1;
    int ell = 1;
    double psi_inf = 1.0;

    void validate(int k) const
    {
        if (m < 2) throw domain_error("EstimateParams: m must be at least 2");
        if (ell < 1 || ell >= k) throw domain_error("EstimateParams: ell outside [1, k)");
        if (mu < 1 || mu > k - 1) throw domain_error("EstimateParams: mu outside [1, k-1]");
        if (!(tau > 0.0 && tau < 1.0)) throw domain_error("EstimateParams: tau outside (0, 1)");
        if (!(delta > 0.0 && delta <= 1.0)) throw domain_error("EstimateParams: delta outside (0, 1]");
        if (!(delta_prime > 0.0)) throw domain_error("EstimateParams: delta_prime must be positive");
        if (!(M > 0.0 && N > 0.0 && K > 0.0 && epsilon > 0.0 && psi_inf > 0.0))
            throw domain_error("EstimateParams: M, N, K, epsilon, psi_inf must be positive");
    }
};

/// One evaluated inequality lhs >= rhs, with everything needed to replay it.
struct SlackReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    EstimateParams params;
    std::uint64_t sample_id = 0;
    bool worst = false;

    int k = 0;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<double> lambda;
    ThirdOrderData data;

    /// (1 + |lambda|_inf)^{2k} (1 + |t|_inf)^2; slacks are homogeneous
    /// polynomials so tolerances are taken relative to this.
    double scale = 1.0;

    /// Sum of absolute values of the individual terms on both sides; slack
    /// divided by this is a scale-free relative slack in [-1, 1].
    double magnitude = 0.0;

    double normalized_slack() const { return slack / scale; }
    double relative_slack() const { return magnitude > 0.0 ? slack / magnitude : 0.0; }
};

inline double slack_scale(std::span<const double> lambda, int k, const ThirdOrderData& t)
{
    double lmax = 0.0;
    for (double v : lambda) lmax = std::max(lmax, std::abs(v));
    const double tmax = t.size() ? t.max_abs() : 0.0;
    return std::pow(1.0 + lmax, 2 * k) * (1.0 + tmax) * (1.0 + tmax);
}

inline constexpr double kSlackTolerance = 1e-9;

/// P_m = sum_j lambda_j^m
inline double p_power_sum(const Spectrum& lambda, int m)
{
    if (m < 1) throw domain_error("p_power_sum: m must be at least 1");
    double s = 0.0;
    for (double v : lambda.values()) s += std::pow(v, m);
    return s;
}

/// (a^{m-1} - b^{m-1}) / (a - b) in the division-free form
/// sum_{q=0}^{m-2} a^q b^{m-2-q}.
inline double power_quotient(double a, double b, int m)
{
    double s = 0.0;
    for (int q = 0; q <= m - 2; ++q) s += std::pow(a, q) * std::pow(b, m - 2 - q);
    return s;
}

/// m^2 <= (2m - 4)(m - 2), i.e. m >= 4 + 2 sqrt(2).
inline bool is_m_admissible(int m)
{
    if (m < 2) throw domain_error("is_m_admissible: m must be at least 2");
    const long long mm = m;
    return mm * mm <= (2 * mm - 4) * (mm - 2);
}

struct TermsABCDE {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D = 0.0;
    double E = 0.0;
};

namespace detail {

inline void require_positive(const Spectrum& lambda, const char* who)
{
    if (!(lambda.smallest() > 0.0))
        throw domain_error(std::string(who) + ": all eigenvalues must be positive (shift first)");
}

inline void require_index(const Spectrum& lambda, const ThirdOrderData& data, std::size_t i, const char* who)
{
    if (data.size() != lambda.size()) throw domain_error(std::string(who) + ": data dimension mismatch");
    if (i >= lambda.size()) throw domain_error(std::string(who) + ": index out of range");
}

/// sum_{p != q} h(p,q) Re(w_p conj(w_q))
inline double diag_quadratic(const RealMatrix& h, std::span<const cplx> w)
{
    double s = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p)
        for (std::size_t q = 0; q < w.size(); ++q)
            if (p != q) s += h(p, q) * std::real(w[p] * std::conj(w[q]));
    return s;
}

/// sum_p grad_p w_p
inline cplx linear_form(std::span<const double> grad, std::span<const cplx> w)
{
    cplx s{};
    for (std::size_t p = 0; p < w.size(); ++p) s += grad[p] * w[p];
    return s;
}

} // namespace detail

/// A_i..E_i with K = params.K and m = params.m.
inline TermsABCDE terms_ABCDE(const Spectrum& lambda, int k, const ThirdOrderData& data,
                              const EstimateParams& params, std::size_t i)
{
    detail::require_positive(lambda, "terms_ABCDE");
    detail::require_index(lambda, data, i, "terms_ABCDE");
    const int m = params.m;
    if (m < 2) throw domain_error("terms_ABCDE: m must be at least 2");

    const std::size_t n = lambda.size();
    const SymJet j = jet(lambda, k);
    const std::vector<cplx> w = data.diagonal_slice(i);
    const double pm = p_power_sum(lambda, m);
    const double li = lambda[i];

    TermsABCDE out;
    const double d_sigma = std::norm(detail::linear_form(j.grad, w));
    out.A = std::pow(li, m - 1) / pm * (params.K * d_sigma - detail::diag_quadratic(j.hess_diag, w));

    double b = 0.0, c = 0.0, d = 0.0;
    cplx e{};
    for (std::size_t p = 0; p < n; ++p) {
        const double lp = lambda[p];
        const double w2 = std::norm(w[p]);
        b += j.hess_diag(p, i) * std::pow(lp, m - 1) * w2;
        c += std::pow(lp, m - 2) * w2;
        if (p != i) d += j.grad[p] * power_quotient(lp, li, m) * w2;
        e += std::pow(lp, m - 1) * w[p];
    }
    out.B = b / pm;
    out.C = (m - 1) * j.grad[i] * c / pm;
    out.D = d / pm;
    out.E = m * j.grad[i] * std::norm(e) / (pm * pm);
    return out;
}

namespace detail {

inline SlackReport make_report(std::string name, double lhs, double rhs, double magnitude, const Spectrum& lambda,
                               int k, const ThirdOrderData& data, const EstimateParams& params, std::size_t i)
{
    SlackReport r;
    r.magnitude = magnitude;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = lhs - rhs;
    r.params = params;
    r.k = k;
    r.index = i;
    r.lambda.assign(lambda.values().begin(), lambda.values().end());
    r.data = data;
    r.scale = slack_scale(lambda.values(), k, data);
    return r;
}

} // namespace detail

/// Quotient-concavity inequality for sigma_k / sigma_ell, alpha = 1/(k - ell):
///   -sigma_k^{pp,qq} w_p conj(w_q) + (1 - alpha + alpha/delta) |D sigma_k|^2 / sigma_k
///     >= sigma_k (alpha + 1 - delta alpha) |D sigma_ell / sigma_ell|^2
///        - (sigma_k / sigma_ell) sigma_ell^{pp,qq} w_p conj(w_q)
/// with w_p = t(i, p, p).
inline SlackReport lemma1_slack(const Spectrum& W, int k, int ell, double delta, std::size_t i,
                                const ThirdOrderData& data)
{
    detail::require_index(W, data, i, "lemma1_slack");
    if (!(ell >= 1 && k > ell)) throw precondition_error("lemma1_slack: need k > ell >= 1");
    if (!(delta > 0.0)) throw precondition_error("lemma1_slack: delta must be positive");
    if (!in_cone(W, k)) throw precondition_error("lemma1_slack: W is not in Gamma_k");

    const double alpha = 1.0 / (k - ell);
    const SymJet jk = jet(W, k);
    const SymJet jl = jet(W, ell);
    const std::vector<cplx> w = data.diagonal_slice(i);
    const double sk = jk.value;
    const double sl = jl.value;

    const double qk = detail::diag_quadratic(jk.hess_diag, w);
    const double gk = (1.0 - alpha + alpha / delta) * std::norm(detail::linear_form(jk.grad, w)) / sk;
    const double gl = sk * (alpha + 1.0 - delta * alpha) * std::norm(detail::linear_form(jl.grad, w) / sl);
    const double ql = (sk / sl) * detail::diag_quadratic(jl.hess_diag, w);
    const double lhs = -qk + gk;
    const double rhs = gl - ql;
    const double mag = std::abs(qk) + std::abs(gk) + std::abs(gl) + std::abs(ql);

    EstimateParams p;
    p.ell = ell;
    p.delta = delta;
    return detail::make_report("lemma1", lhs, rhs, mag, W, k, data, p, i);
}

/// (1 - alpha + alpha/delta) / psi_inf with alpha = 1/(k - ell).
inline double gain_threshold(int k, int ell, double delta, double psi_inf)
{
    const double alpha = 1.0 / (k - ell);
    return (1.0 - alpha + alpha / delta) / psi_inf;
}

/// -sigma_k^{pp,qq} D_i g_pp conj(D_i g_qq) + K |D_i sigma_k|^2 >= 0 for K above
/// the ell = 1 gain threshold and sigma_k(W) >= psi_inf.
inline SlackReport corollary17_slack(const Spectrum& W, int k, double K, std::size_t i, const ThirdOrderData& data,
                                     double psi_inf, double delta)
{
    detail::require_index(W, data, i, "corollary17_slack");
    if (k < 2) throw precondition_error("corollary17_slack: need k >= 2");
    if (!in_cone(W, k)) throw precondition_error("corollary17_slack: W is not in Gamma_k");
    if (!(delta > 0.0 && delta <= k))
        throw precondition_error("corollary17_slack: delta must lie in (0, k] so the ell = 1 right side is nonnegative");
    if (!(psi_inf > 0.0)) throw precondition_error("corollary17_slack: psi_inf must be positive");
    const SymJet jk = jet(W, k);
    if (jk.value < psi_inf) throw precondition_error("corollary17_slack: sigma_k(W) < psi_inf");
    if (!(K > gain_threshold(k, 1, delta, psi_inf)))
        throw precondition_error("corollary17_slack: K is not above the gain threshold");

    const std::vector<cplx> w = data.diagonal_slice(i);
    const double qk = detail::diag_quadratic(jk.hess_diag, w);
    const double gk = K * std::norm(detail::linear_form(jk.grad, w));
    const double lhs = -qk + gk;

    EstimateParams p;
    p.K = K;
    p.psi_inf = psi_inf;
    p.delta = delta;
    return detail::make_report("corollary17", lhs, 0.0, std::abs(qk) + std::abs(gk), W, k, data, p, i);
}

/// P_m^2 (B_i + C_i + D_i - E_i) against its lower bound: 0 for i != 0, and
///   P_m lambda_1^{m-2} sum_{p != 1} sigma_k^{pp} |D_1 g_pp|^2
///     - lambda_1^{2m-2} sigma_k^{11} |D_1 g_11|^2
/// for i = 0 (the largest eigenvalue).
inline SlackReport lemma2_slack(const Spectrum& lambda, int k, const ThirdOrderData& data,
                                const EstimateParams& params, std::size_t i)
{
    detail::require_positive(lambda, "lemma2_slack");
    detail::require_index(lambda, data, i, "lemma2_slack");
    if (!is_m_admissible(params.m))
        throw precondition_error("lemma2_slack: m not admissible (m=" + std::to_string(params.m) + ")");

    const int m = params.m;
    const TermsABCDE t = terms_ABCDE(lambda, k, data, params, i);
    const double pm = p_power_sum(lambda, m);
    const double lhs = pm * pm * (t.B + t.C + t.D - t.E);
    double rhs = 0.0;
    double mag = pm * pm * (std::abs(t.B) + std::abs(t.C) + std::abs(t.D) + std::abs(t.E));
    std::string name = "lemma2_genesisi";
    if (i == 0) {
        name = "lemma2_genesis2";
        const SymJet j = jet(lambda, k);
        const double l1 = lambda[0];
        double s = 0.0;
        for (std::size_t p = 1; p < lambda.size(); ++p) s += j.grad[p] * std::norm(data.diag(0, p));
        const double good = pm * std::pow(l1, m - 2) * s;
        const double bad = std::pow(l1, 2 * m - 2) * j.grad[0] * std::norm(data.diag(0, 0));
        rhs = good - bad;
        mag += std::abs(good) + std::abs(bad);
    }
    return detail::make_report(std::move(name), lhs, rhs, mag, lambda, k, data, params, i);
}

/// Gain K needed when the quotient inequality is applied with ell = mu and
/// delta = 1/2: (1 + 1/(k - mu)) / psi_inf. It dominates the ell = 1
/// threshold at the same delta.
inline double lemma3_gain_threshold(int k, int mu, double psi_inf) { return gain_threshold(k, mu, 0.5, psi_inf); }

/// A_1 + B_1 + C_1 + D_1 - E_1 >= 0 when lambda_mu >= delta lambda_1 and
/// lambda_{mu+1} <= delta' lambda_1 (mu counted 1-based, as in the pinching).
inline SlackReport lemma3_slack(const Spectrum& lambda, int k, const ThirdOrderData& data,
                                const EstimateParams& params)
{
    detail::require_positive(lambda, "lemma3_slack");
    detail::require_index(lambda, data, 0, "lemma3_slack");
    params.validate(k);
    const auto mu = static_cast<std::size_t>(params.mu);
    if (mu >= lambda.size()) throw precondition_error("lemma3_slack: mu must be below n");
    const double l1 = lambda[0];
    if (!(lambda[mu - 1] >= params.delta * l1))
        throw precondition_error("lemma3_slack: pinching lambda_mu >= delta lambda_1 violated");
    if (!(lambda[mu] <= params.delta_prime * l1))
        throw precondition_error("lemma3_slack: separation lambda_{mu+1} <= delta' lambda_1 violated");
    if (!is_m_admissible(params.m)) throw precondition_error("lemma3_slack: m not admissible");
    if (sigma(lambda, k) < params.psi_inf) throw precondition_error("lemma3_slack: sigma_k(lambda) < psi_inf");
    if (!(params.K > lemma3_gain_threshold(k, params.mu, params.psi_inf)))
        throw precondition_error("lemma3_slack: K is not above the gain threshold");

    const TermsABCDE t = terms_ABCDE(lambda, k, data, params, 0);
    const double mag = std::abs(t.A) + std::abs(t.B) + std::abs(t.C) + std::abs(t.D) + std::abs(t.E);
    return detail::make_report("lemma3", t.A + t.B + t.C + t.D - t.E, 0.0, mag, lambda, k, data, params, 0);
}

/// Measured quantities from the proof of the separated case:
///   F_min              min_{p != q} sigma_mu^{pp} sigma_mu^{qq} - sigma_mu sigma_mu^{pp,qq}
///   F_identity_gap     max |F^{pq} - (sigma_{mu-1}^2(l|pq) - sigma_mu(l|pq) sigma_{mu-2}(l|pq))|
///   F_max_deviation_from_one   (mu = 1 only) max |F^{pq} - 1|
///   mu1_constant_max   (mu >= 2) max_{p != q <= mu} sigma_{mu-1}(l|pq) l_p l_q / (l_1 ... l_{mu+1})
///   leftover_ratio_min min_{p > mu} sigma_k^{pp} sigma_mu^2 / (l_1 sigma_k (sigma_mu^{pp})^2)
inline std::map<std::string, double> lemma3_subchecks(const Spectrum& lambda, int k, int mu)
{
    detail::require_positive(lambda, "lemma3_subchecks");
    const std::size_t n = lambda.size();
    if (!in_cone(lambda, k)) throw precondition_error("lemma3_subchecks: lambda not in Gamma_k");
    if (mu < 1 || mu > k - 1) throw precondition_error("lemma3_subchecks: mu outside [1, k-1]");

    const auto l = lambda.values();
    const SymJet jm = jet(lambda, mu);
    const SymJet jk = jet(lambda, k);
    double f_min = std::numeric_limits<double>::infinity();
    double gap = 0.0;
    double dev_one = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            const double f = jm.grad[p] * jm.grad[q] - jm.value * jm.hess_diag(p, q);
            const double a = detail::esf_value(l, mu - 1, p, q);
            const double pq = a * a - detail::esf_value(l, mu, p, q) * detail::esf_value(l, mu - 2, p, q);
            f_min = std::min(f_min, f);
            gap = std::max(gap, std::abs(f - pq));
            dev_one = std::max(dev_one, std::abs(f - 1.0));
        }
    }
    std::map<std::string, double> out;
    out["F_min"] = f_min;
    out["F_identity_gap"] = gap;
    if (mu == 1) out["F_max_deviation_from_one"] = dev_one;

    if (mu >= 2) {
        double prod = 1.0;
        for (int j = 0; j <= mu; ++j) prod *= l[static_cast<std::size_t>(j)];
        double cmax = 0.0;
        for (std::size_t p = 0; p < static_cast<std::size_t>(mu); ++p)
            for (std::size_t q = 0; q < static_cast<std::size_t>(mu); ++q)
                if (p != q) cmax = std::max(cmax, detail::esf_value(l, mu - 1, p, q) * l[p] * l[q] / prod);
        out["mu1_constant_max"] = cmax;
    }
    if (static_cast<std::size_t>(mu) < n) {
        double rmin = std::numeric_limits<double>::infinity();
        for (std::size_t p = static_cast<std::size_t>(mu); p < n; ++p) {
            const double num = jk.grad[p] * jm.value * jm.value;
            const double den = l[0] * jk.value * jm.grad[p] * jm.grad[p];
            rmin = std::min(rmin, num / den);
        }
        out["leftover_ratio_min"] = rmin;
    }
    return out;
}

struct CascadeDiagnosis {
    bool all_pinched = false;
    /// 1-based pinching index handed to the separated-case lemma (0 when all pinched)
    int mu = 0;
    /// lambda_1 <= sigma_bound / delta_k^{k-1}, the form valid once lambda_1 >= 1
    double lambda1_bound = 0.0;
    /// (sigma_bound / delta_k^{k-1})^{1/k}, valid without assuming lambda_1 >= 1
    double lambda1_bound_sharp = 0.0;
    /// lambda_1 ... lambda_k
    double leading_product = 0.0;
    double delta = 1.0;
    double delta_prime = 0.0;
};

/// Walks j = 2..k and stops at the first lambda_j < delta_j lambda_1. deltas
/// holds (delta_2, ..., delta_k).
inline CascadeDiagnosis pinching_cascade(const Spectrum& lambda, int k, double sigma_bound,
                                         std::span<const double> deltas)
{
    detail::require_positive(lambda, "pinching_cascade");
    if (k < 2 || k > static_cast<int>(lambda.size())) throw domain_error("pinching_cascade: k outside [2, n]");
    if (deltas.size() != static_cast<std::size_t>(k - 1))
        throw domain_error("pinching_cascade: need k-1 thresholds");
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        if (!(deltas[j] > 0.0 && deltas[j] < 1.0)) throw domain_error("pinching_cascade: thresholds must be in (0,1)");
        if (j > 0 && !(deltas[j] <= deltas[j - 1])) throw domain_error("pinching_cascade: thresholds must decrease");
    }

    CascadeDiagnosis d;
    d.leading_product = 1.0;
    for (int j = 0; j < k; ++j) d.leading_product *= lambda[static_cast<std::size_t>(j)];
    const double l1 = lambda[0];
    for (std::size_t idx = 1; idx < static_cast<std::size_t>(k); ++idx) {
        const double dj = deltas[idx - 1];
        if (lambda[idx] < dj * l1) {
            d.mu = static_cast<int>(idx);
            d.delta = idx >= 2 ? deltas[idx - 2] : 1.0;
            d.delta_prime = dj;
            return d;
        }
    }
    d.all_pinched = true;
    const double dk = deltas.back();
    const double denom = std::pow(dk, k - 1);
    d.lambda1_bound = sigma_bound / denom;
    d.lambda1_bound_sharp = std::pow(sigma_bound / denom, 1.0 / k);
    return d;
}

} // namespace hklab
