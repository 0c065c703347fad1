#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace hklab {

struct NelderMeadOptions {
    double initial_step = 0.3;
    int max_evals = 2000;
    double ftol = 1e-14;
    double xtol = 1e-10;
    // reflection, expansion, contraction, shrink
    double alpha = 1.0;
    double gamma = 2.0;
    double rho = 0.5;
    double sigma = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    int evals = 0;
};

/// Derivative-free simplex minimizer. Non-finite objective values are treated
/// as +infinity, so infeasible points can simply return NaN or inf.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const NelderMeadOptions& opt = {})
{
    const std::size_t d = x0.size();
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> pts(d + 1, x0);
    for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += (x0[i] != 0.0 ? opt.initial_step * std::abs(x0[i]) : opt.initial_step);
    std::vector<double> fx(d + 1);
    for (std::size_t i = 0; i <= d; ++i) fx[i] = eval(pts[i]);

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    auto affine = [&](std::vector<double>& out, const std::vector<double>& base, const std::vector<double>& to,
                      double t) {
        for (std::size_t i = 0; i < d; ++i) out[i] = base[i] + t * (to[i] - base[i]);
    };

    while (evals < opt.max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= d; ++i)
            for (std::size_t c = 0; c < d; ++c) size = std::max(size, std::abs(pts[i][c] - pts[best][c]));
        if (std::isfinite(fx[worst]) && std::abs(fx[worst] - fx[best]) <= opt.ftol && size <= opt.xtol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i)
            if (i != worst)
                for (std::size_t c = 0; c < d; ++c) centroid[c] += pts[i][c] / static_cast<double>(d);

        affine(xr, centroid, pts[worst], -opt.alpha);
        const double fr = eval(xr);
        if (fr < fx[best]) {
            affine(xe, centroid, pts[worst], -opt.alpha * opt.gamma);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fx[worst] = fe;
            } else {
                pts[worst] = xr;
                fx[worst] = fr;
            }
            continue;
        }
        if (fr < fx[second]) {
            pts[worst] = xr;
            fx[worst] = fr;
            continue;
        }
        const bool outside = fr < fx[worst];
        if (outside)
            affine(xc, centroid, xr, opt.rho);
        else
            affine(xc, centroid, pts[worst], opt.rho);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fx[worst])) {
            pts[worst] = xc;
            fx[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            affine(pts[i], pts[best], pts[i], opt.sigma);
            fx[i] = eval(pts[i]);
        }
    }

    const auto it = std::min_element(fx.begin(), fx.end());
    NelderMeadResult r;
    r.x = pts[static_cast<std::size_t>(it - fx.begin())];
    r.f = *it;
    r.evals = evals;
    return r;
}

} // namespace hklab
