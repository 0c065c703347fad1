#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's recurrences.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include <hklab/harness.hpp>

namespace oracle {

using cplx = std::complex<double>;

/// sigma_k by enumerating all k-subsets of the entries not in `skip`.
inline double sigma_brute(const std::vector<double>& l, int k, std::vector<std::size_t> skip = {})
{
    std::vector<double> v;
    for (std::size_t i = 0; i < l.size(); ++i) {
        bool drop = false;
        for (std::size_t s : skip) drop = drop || s == i;
        if (!drop) v.push_back(l[i]);
    }
    if (k < 0 || k > static_cast<int>(v.size())) return 0.0;
    const std::size_t n = v.size();
    double total = 0.0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        if (__builtin_popcountl(mask) != k) continue;
        double prod = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1ul << i)) prod *= v[i];
        total += prod;
    }
    return total;
}

/// sigma_k of the eigenvalues of a Hermitian matrix as the sum of its
/// principal k x k minors.
inline double sigma_of_matrix(const Eigen::MatrixXcd& A, int k)
{
    const auto n = static_cast<std::size_t>(A.rows());
    if (k == 0) return 1.0;
    double total = 0.0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        if (__builtin_popcountl(mask) != k) continue;
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1ul << i)) idx.push_back(static_cast<Eigen::Index>(i));
        Eigen::MatrixXcd sub(k, k);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) sub(r, c) = A(idx[r], idx[c]);
        total += sub.determinant().real();
    }
    return total;
}

inline std::vector<double> values(const hklab::Spectrum& s) { return {s.values().begin(), s.values().end()}; }

/// A..E by the defining sums, with every sigma from sigma_brute.
inline hklab::TermsABCDE terms(const std::vector<double>& l, int k, const hklab::ThirdOrderData& t, int m, double K,
                               std::size_t i)
{
    const std::size_t n = l.size();
    double pm = 0.0;
    for (double v : l) pm += std::pow(v, m);
    auto s1 = [&](std::size_t p) { return sigma_brute(l, k - 1, {p}); };
    auto s2 = [&](std::size_t p, std::size_t q) { return p == q ? 0.0 : sigma_brute(l, k - 2, {p, q}); };

    cplx dsig{};
    double quad = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        dsig += s1(p) * t(i, p, p);
        for (std::size_t q = 0; q < n; ++q) quad += s2(p, q) * (t(i, p, p) * std::conj(t(i, q, q))).real();
    }
    hklab::TermsABCDE out;
    out.A = std::pow(l[i], m - 1) / pm * (K * std::norm(dsig) - quad);
    double E_re = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double w2 = std::norm(t(i, p, p));
        out.B += s2(p, i) * std::pow(l[p], m - 1) * w2 / pm;
        out.C += (m - 1) * s1(i) * std::pow(l[p], m - 2) * w2 / pm;
        if (p != i) out.D += s1(p) * (std::pow(l[p], m - 1) - std::pow(l[i], m - 1)) / (l[p] - l[i]) * w2 / pm;
        // E expanded as a double sum instead of a squared modulus
        for (std::size_t q = 0; q < n; ++q)
            E_re += std::pow(l[p], m - 1) * std::pow(l[q], m - 1) * (t(i, p, p) * std::conj(t(i, q, q))).real();
    }
    out.E = m * s1(i) * E_re / (pm * pm);
    return out;
}

/// Quotient inequality slack (lhs - rhs) from the defining formulas.
inline double lemma1(const std::vector<double>& l, int k, int ell, double delta, const hklab::ThirdOrderData& t,
                     std::size_t i)
{
    const std::size_t n = l.size();
    const double alpha = 1.0 / (k - ell);
    const double sk = sigma_brute(l, k), sl = sigma_brute(l, ell);
    cplx dk{}, dl{};
    double qk = 0.0, ql = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        dk += sigma_brute(l, k - 1, {p}) * t(i, p, p);
        dl += sigma_brute(l, ell - 1, {p}) * t(i, p, p);
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            const double re = (t(i, p, p) * std::conj(t(i, q, q))).real();
            qk += sigma_brute(l, k - 2, {p, q}) * re;
            ql += sigma_brute(l, ell - 2, {p, q}) * re;
        }
    }
    const double lhs = -qk + (1.0 - alpha + alpha / delta) * std::norm(dk) / sk;
    const double rhs = sk * (alpha + 1.0 - delta * alpha) * std::norm(dl) / (sl * sl) - sk / sl * ql;
    return lhs - rhs;
}

} // namespace oracle
