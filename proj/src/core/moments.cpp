#include "core/moments.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace compindex {

double quantile(std::span<const double> sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 0) {
        throw NumericError("quantile of empty series");
    }
    if (n == 1) {
        return sorted[0];
    }
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MomentSummary moments(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 4) {
        throw NumericError("moments require at least 4 observations, got " + std::to_string(n));
    }
    double mean = 0.0;
    for (const double x : series) {
        if (!std::isfinite(x)) {
            throw NumericError("moments require finite values");
        }
        mean += x;
    }
    mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const double x : series) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double nn = static_cast<double>(n);
    m2 /= nn;
    m3 /= nn;
    m4 /= nn;
    if (!(m2 > 0.0)) {
        throw NumericError("undefined moments: series has zero variance");
    }

    const double g1 = m3 / std::pow(m2, 1.5);
    const double g2 = m4 / (m2 * m2) - 3.0;

    MomentSummary out;
    out.skewness = g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
    out.excess_kurtosis = ((nn + 1.0) * g2 + 6.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));

    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    out.median = quantile(sorted, 0.5);
    out.iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    return out;
}

} // namespace compindex
