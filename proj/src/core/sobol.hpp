#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace compindex {

/// A model over independent discrete-uniform factors; the argument holds one
/// level index per factor.
using DiscreteModel = std::function<double(std::span<const int>)>;

/// Full-factorial variance decomposition. components[mask] is the ANOVA
/// contribution of the factor subset encoded by mask; they sum to the total
/// variance up to floating-point error. s_total follows from the subset
/// sums, so s_first <= s_total by construction.
struct ExactSobol {
    double variance = 0.0;
    std::vector<double> s_first;
    std::vector<double> s_total;
    std::vector<double> components; // indexed by subset bitmask, [0] == 0
    bool defined = false;           // false when the model output is constant
};

ExactSobol exact_sobol(std::span<const int> cardinalities, const DiscreteModel& model);

struct McSobolFactor {
    double s_first = 0.0;
    double s_total = 0.0;
    double ci_first_lo = 0.0;
    double ci_first_hi = 0.0;
    double ci_total_lo = 0.0;
    double ci_total_hi = 0.0;
};

/// Saltelli paired-matrix estimate: the 2010 estimator for first-order
/// indices, the Jansen formula for total order, percentile bootstrap
/// confidence intervals over the sample rows. n_evaluations = n_base * (k+2);
/// rows are derived from (seed, row) so evaluation order cannot change the
/// result.
struct McSobol {
    std::vector<McSobolFactor> factors;
    double variance = 0.0;
    int n_evaluations = 0;
    bool defined = false;
};

McSobol mc_sobol(std::span<const int> cardinalities, const DiscreteModel& model, int n_base,
                 std::uint64_t seed, int n_bootstrap = 1000);

/// Paired level matrices A and B for the Saltelli design; row r is drawn
/// from the stream (seed, r).
struct SaltelliDesign {
    std::vector<std::vector<int>> a;
    std::vector<std::vector<int>> b;
};

SaltelliDesign saltelli_design(std::span<const int> cardinalities, int n_base,
                               std::uint64_t seed);

struct SaltelliRowEstimate {
    double s_first = 0.0;
    double s_total = 0.0;
    bool defined = false;
};

/// Saltelli-2010 first-order and Jansen total-order estimators for one
/// factor over a row subset; f_ab_i holds the model values on A with column
/// i replaced from B.
SaltelliRowEstimate saltelli_jansen(std::span<const double> f_a, std::span<const double> f_b,
                                    std::span<const double> f_ab_i,
                                    std::span<const std::size_t> rows);

/// Bootstrap resample row sets shared by every output of a multi-output
/// analysis; replicate b is drawn from the stream (seed', b).
std::vector<std::vector<std::size_t>> bootstrap_rows(std::size_t n, int n_bootstrap,
                                                     std::uint64_t seed);

} // namespace compindex
