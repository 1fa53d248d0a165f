#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace compindex {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
};

/// Downhill simplex with standard coefficients (reflect 1, expand 2,
/// contract 0.5, shrink 0.5); stops when the simplex function spread falls
/// below tolerance or max_iterations is hit.
inline NelderMeadResult
nelder_mead(const std::function<double(const std::vector<double>&)>& f,
            const std::vector<double>& x0, double step, double tolerance, int max_iterations) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += step;
    }
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        fx[i] = f(simplex[i]);
    }
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), 0);

    NelderMeadResult result;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        std::sort(order.begin(), order.end(),
                  [&fx](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order[0];
        const std::size_t worst = order[n];
        const std::size_t second_worst = order[n - 1];
        if (fx[worst] - fx[best] <= tolerance) {
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                centroid[j] += simplex[i][j];
            }
        }
        for (double& c : centroid) {
            c /= static_cast<double>(n);
        }

        std::vector<double> reflected(n);
        for (std::size_t j = 0; j < n; ++j) {
            reflected[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        }
        const double fr = f(reflected);

        if (fr < fx[best]) {
            std::vector<double> expanded(n);
            for (std::size_t j = 0; j < n; ++j) {
                expanded[j] = centroid[j] + 2.0 * (reflected[j] - centroid[j]);
            }
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                fx[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                fx[worst] = fr;
            }
            continue;
        }
        if (fr < fx[second_worst]) {
            simplex[worst] = std::move(reflected);
            fx[worst] = fr;
            continue;
        }

        std::vector<double> contracted(n);
        for (std::size_t j = 0; j < n; ++j) {
            contracted[j] = centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
        }
        const double fc = f(contracted);
        if (fc < fx[worst]) {
            simplex[worst] = std::move(contracted);
            fx[worst] = fc;
            continue;
        }

        for (std::size_t i = 0; i <= n; ++i) {
            if (i == order[0]) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                simplex[i][j] = simplex[order[0]][j] + 0.5 * (simplex[i][j] - simplex[order[0]][j]);
            }
            fx[i] = f(simplex[i]);
        }
    }

    const auto best_it = std::min_element(fx.begin(), fx.end());
    result.x = simplex[static_cast<std::size_t>(best_it - fx.begin())];
    result.fx = *best_it;
    result.iterations = iter;
    return result;
}

} // namespace compindex
