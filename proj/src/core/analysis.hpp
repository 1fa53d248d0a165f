#pragma once

#include "core/pipeline.hpp"
#include "core/sobol.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace compindex {

enum class ScreenLevel { indicator, subdomain, domain, indicator_vs_subdomain };

ScreenLevel screen_level_from_string(const std::string& name);

struct CorrelationFlag {
    std::string a;
    std::string b;
    double rho = 0.0;
    std::string kind; // redundant | negative | weak
};

/// Pearson correlations over pooled unit-year observations. Rows are grouped
/// by their parent node. Square screens flag upper-triangle pairs; the
/// cross-level screen correlates indicators against foreign subdomains.
struct CorrelationScreen {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::vector<std::string> row_groups;
    Eigen::MatrixXd rho;
    std::vector<CorrelationFlag> flags;
    std::vector<std::string> excluded; // zero-variance series, dropped
};

/// Aggregates above indicator level use equal weights, matching the modified
/// index the screening is defined on.
CorrelationScreen correlation_screen(const PanelTensor& z, const Hierarchy& hierarchy,
                                     ScreenLevel level);

std::string correlation_csv(const CorrelationScreen& screen);
std::string correlation_flags_json(const CorrelationScreen& screen);

enum class SaMode { exact, montecarlo };

struct OutputSelector {
    bool overall = true;
    std::string domain_id; // used when overall is false
};

OutputSelector output_selector_from_string(const std::string& text);

struct SaOptions {
    SaMode mode = SaMode::exact;
    int iterations = 10000; // Monte Carlo base sample size
    std::uint64_t seed = 1;
    int bootstrap = 1000;
    OutputSelector output;
};

struct SaFactor {
    std::string name;
    double s_first = 0.0;
    double s_total = 0.0;
    double ci_first_lo = 0.0;
    double ci_first_hi = 0.0;
    double ci_total_lo = 0.0;
    double ci_total_hi = 0.0;
    bool defined = false;
};

struct SaResult {
    SaMode mode = SaMode::exact;
    std::vector<SaFactor> factors; // averaged over units with defined output
    std::vector<std::string> units;
    std::vector<std::vector<SaFactor>> per_unit;
    int n_evaluations = 0;
    int units_defined = 0;
    double max_anova_residual = 0.0; // exact mode: |sum components - V| worst case
};

/// Variance-based sensitivity of the unit ranking to the methodological
/// choices. The model output is one unit's rank; indices are computed per
/// unit and averaged with equal weight.
SaResult sobol_sa(PipelineEvaluator& evaluator, const SaOptions& options);

std::string sa_csv(const SaResult& result);
std::string sa_per_unit_csv(const SaResult& result);

struct RankBand {
    std::string unit;
    int reference = 0;
    double median = 0.0;
    double p5 = 0.0;
    double p95 = 0.0;
};

/// Rank distribution per unit over uniformly sampled method configurations;
/// the reference column is the rank under the given configuration.
std::vector<RankBand> uncertainty_bands(PipelineEvaluator& evaluator, int iterations,
                                        std::uint64_t seed, const MethodConfig& reference);

std::string bands_csv(const std::vector<RankBand>& bands);

enum class RemovalLevel { indicator, subdomain };

struct RankShift {
    std::string node;
    double mean_abs_shift = 0.0;
};

/// Mean absolute change in unit ranks when one node is removed and the index
/// rebuilt (weights renormalised through the alpha constants; a parent left
/// empty is removed with its last child).
std::vector<RankShift> rank_shift_removal(const PanelTensor& raw, const Hierarchy& hierarchy,
                                          const PopulationWeights& population,
                                          const MethodConfig& config, RemovalLevel level,
                                          const PipelineOptions& options = {});

std::string rank_shift_csv(const std::vector<RankShift>& shifts);

} // namespace compindex
