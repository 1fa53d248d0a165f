#pragma once

#include <cmath>
#include <span>

namespace compindex {

/// Sample distribution summary. Skewness is the bias-adjusted
/// Fisher-Pearson coefficient G1 = g1 * sqrt(n(n-1))/(n-2); kurtosis is the
/// bias-adjusted excess kurtosis G2 = ((n+1)g2 + 6)(n-1)/((n-2)(n-3)).
struct MomentSummary {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double median = 0.0;
    double iqr = 0.0;
};

/// Requires length >= 4 and positive variance; throws NumericError otherwise.
MomentSummary moments(std::span<const double> series);

/// Linear-interpolation quantile (R type 7); q in [0, 1].
double quantile(std::span<const double> sorted, double q);

inline bool within_treatment_limits(const MomentSummary& m) {
    return std::abs(m.skewness) <= 2.0 && std::abs(m.excess_kurtosis) <= 3.5;
}

} // namespace compindex
