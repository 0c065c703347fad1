#pragma once

// Elementary symmetric functions of eigenvalue vectors and their derivatives
// at a diagonal point.
//
// Indices are 0-based throughout: index 0 is the largest eigenvalue.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "matrix.hpp"

namespace hklab {

/// Eigenvalues sorted descending, with the permutation back to input order.
class Spectrum {
public:
    explicit Spectrum(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.size() < 2) throw domain_error("Spectrum: dimension must be at least 2");
        for (double v : values_) {
            if (!std::isfinite(v)) throw domain_error("Spectrum: non-finite eigenvalue");
        }
        perm_.resize(values_.size());
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        std::stable_sort(perm_.begin(), perm_.end(),
                         [this](std::size_t a, std::size_t b) { return values_[a] > values_[b]; });
        std::vector<double> sorted(values_.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) sorted[i] = values_[perm_[i]];
        values_ = std::move(sorted);
    }

    Spectrum(std::initializer_list<double> values) : Spectrum(std::vector<double>(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    /// permutation()[i] is the input position of sorted entry i.
    std::span<const std::size_t> permutation() const noexcept { return perm_; }

    double max_abs() const noexcept
    {
        return std::max(std::abs(values_.front()), std::abs(values_.back()));
    }
    double largest() const noexcept { return values_.front(); }
    double smallest() const noexcept { return values_.back(); }

private:
    std::vector<double> values_;
    std::vector<std::size_t> perm_;
};

namespace detail {

/// e_0..e_kmax of the entries of lambda not flagged in `skip`, by the
/// prefix-polynomial recurrence e_j += x * e_{j-1}. O(n * kmax).
inline std::vector<double> esf_prefix(std::span<const double> lambda, int kmax,
                                      std::size_t skip_a = std::size_t(-1),
                                      std::size_t skip_b = std::size_t(-1))
{
    std::vector<double> e(static_cast<std::size_t>(std::max(kmax, 0)) + 1, 0.0);
    e[0] = 1.0;
    int used = 0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (i == skip_a || i == skip_b) continue;
        ++used;
        const int top = std::min(used, kmax);
        for (int j = top; j >= 1; --j) e[j] += lambda[i] * e[j - 1];
    }
    return e;
}

/// sigma_m with the hard conventions sigma_0 = 1 and sigma_m = 0 for m < 0
/// or m larger than the number of remaining entries.
inline double esf_value(std::span<const double> lambda, int m,
                        std::size_t skip_a = std::size_t(-1), std::size_t skip_b = std::size_t(-1))
{
    if (m < 0) return 0.0;
    if (m == 0) return 1.0;
    return esf_prefix(lambda, m, skip_a, skip_b)[static_cast<std::size_t>(m)];
}

} // namespace detail

/// k-th elementary symmetric function of an arbitrary real vector.
inline double sigma(std::span<const double> lambda, int k)
{
    if (k < 0 || k > static_cast<int>(lambda.size()))
        throw domain_error("sigma: order k=" + std::to_string(k) + " outside [0, n]");
    return detail::esf_value(lambda, k);
}

inline double sigma(const Spectrum& lambda, int k) { return sigma(lambda.values(), k); }

/// sigma_k of lambda with the listed entries removed.
inline double sigma_excluding(const Spectrum& lambda, int k, std::span<const std::size_t> excluded)
{
    const std::size_t n = lambda.size();
    std::vector<bool> drop(n, false);
    for (std::size_t idx : excluded) {
        if (idx >= n) throw domain_error("sigma_excluding: index out of range");
        if (drop[idx]) throw domain_error("sigma_excluding: repeated index");
        drop[idx] = true;
    }
    const int remaining = static_cast<int>(n - excluded.size());
    if (k < 0 || k > remaining)
        throw domain_error("sigma_excluding: order k outside [0, n - |excluded|]");
    std::vector<double> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!drop[i]) kept.push_back(lambda[i]);
    return detail::esf_value(kept, k);
}

inline double sigma_excluding(const Spectrum& lambda, int k, std::initializer_list<std::size_t> excluded)
{
    return sigma_excluding(lambda, k, std::span<const std::size_t>(excluded.begin(), excluded.size()));
}

/// sigma_k and its derivatives in the eigenvalues at a diagonal point.
struct SymJet {
    int k = 0;
    double value = 0.0;
    /// grad[p] = sigma_{k-1}(lambda|p)
    std::vector<double> grad;
    /// (p,q) -> sigma_{k-2}(lambda|pq) for p != q, zero diagonal
    RealMatrix hess_diag;
    /// (p,q) -> (grad[p] - grad[q]) / (lambda_p - lambda_q), stored in the
    /// closed form -sigma_{k-2}(lambda|pq) so coincident eigenvalues are fine
    RealMatrix quotient;

    std::size_t size() const noexcept { return grad.size(); }

    /// Sum of the first derivatives, the trace of the linearized operator.
    double trace_grad() const { return std::accumulate(grad.begin(), grad.end(), 0.0); }
};

inline SymJet jet(std::span<const double> lambda, int k)
{
    const std::size_t n = lambda.size();
    if (k < 1 || k > static_cast<int>(n)) throw domain_error("jet: order k outside [1, n]");
    SymJet j;
    j.k = k;
    j.value = detail::esf_value(lambda, k);
    j.grad.resize(n);
    for (std::size_t p = 0; p < n; ++p) j.grad[p] = detail::esf_value(lambda, k - 1, p);
    j.hess_diag = RealMatrix::square(n);
    j.quotient = RealMatrix::square(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            const double h = detail::esf_value(lambda, k - 2, p, q);
            j.hess_diag(p, q) = j.hess_diag(q, p) = h;
            j.quotient(p, q) = j.quotient(q, p) = -h;
        }
    }
    return j;
}

inline SymJet jet(const Spectrum& lambda, int k) { return jet(lambda.values(), k); }

/// sigma_k^{pq,rs} w_{qp} conj(w_{sr}) at the diagonal point:
///   sum_{p!=q} hess_diag[p][q] w_pp conj(w_qq) + sum_{p!=q} quotient[p][q] |w_pq|^2.
/// For Hermitian w this is d^2/dt^2 sigma_k(diag(lambda) + t w) at t = 0.
inline double second_form_contraction(const SymJet& j, const ComplexMatrix& w)
{
    if (!w.is_square()) throw domain_error("second_form_contraction: w must be square");
    const std::size_t n = j.size();
    if (w.rows() != n) throw domain_error("second_form_contraction: size mismatch with jet");
    double diag_part = 0.0;
    double off_part = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            diag_part += j.hess_diag(p, q) * std::real(w(p, p) * std::conj(w(q, q)));
            off_part += j.quotient(p, q) * std::norm(w(p, q));
        }
    }
    return diag_part + off_part;
}

/// |sum_p lambda_p sigma_k^{pp} - k sigma_k|; zero up to rounding.
inline double euler_check(const Spectrum& lambda, int k)
{
    const SymJet j = jet(lambda, k);
    double s = 0.0;
    for (std::size_t p = 0; p < lambda.size(); ++p) s += lambda[p] * j.grad[p];
    return std::abs(s - k * j.value);
}

} // namespace hklab
