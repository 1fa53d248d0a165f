#pragma once

#include "core/aggregate.hpp"
#include "core/importance.hpp"
#include "core/normalize.hpp"
#include "core/panel.hpp"
#include "core/weights.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace compindex {

enum class IndicatorWeighting { equal, pca };
enum class DomainWeighting { equal, optimized };

/// One point of the discrete methodological space explored by the
/// sensitivity and uncertainty analyses: winsorization level x normalization
/// x indicator weights x domain weights, 3*2*2*2 = 24 combinations.
struct MethodConfig {
    int winsor_level = 2; // {2, 5, 10}
    NormMethod normalization = NormMethod::weighted_zscore;
    IndicatorWeighting indicator_weights = IndicatorWeighting::equal;
    DomainWeighting domain_weights = DomainWeighting::equal;

    std::string label() const;
    bool operator==(const MethodConfig&) const = default;
};

struct MethodSpace {
    static constexpr std::array<int, 3> winsor_levels{2, 5, 10};
    static constexpr std::array<int, 4> cardinalities{3, 2, 2, 2};
    static constexpr int size = 24;
    static const std::array<const char*, 4> factor_names; // table-5 style steps

    static MethodConfig from_levels(std::span<const int> levels);
    static std::array<int, 4> to_levels(const MethodConfig& config);
    static std::vector<MethodConfig> all();
};

struct PipelineOptions {
    int baseline_year = 0;  // 0 = first year of the data
    int analysis_year = 0;  // 0 = baseline year
    std::uint64_t seed = 1; // optimizer restarts
    Estimator estimator = Estimator::linear;
    std::vector<double> targets; // optimized-weights targets; empty = equal
};

/// Result of one full pipeline evaluation at the analysis year.
struct PipelineOutput {
    std::vector<std::string> units;
    std::vector<std::string> domain_ids;
    std::vector<double> overall;        // normalized scale at analysis year
    std::vector<int> ranks;             // 1 = lowest overall value
    Eigen::MatrixXd domain_scores;      // units x domains at analysis year
    std::vector<std::vector<int>> domain_ranks; // per domain, 1 = lowest
    WeightSystem weights;
    HierarchyAggregates aggregates;     // all years
};

/// Ranks 1..n ascending by value; ties broken by id order (ids are sorted,
/// so equal values rank by lexicographic id).
std::vector<int> rank_ascending(std::span<const double> values);

/// Evaluates method-space configurations over one dataset, caching shared
/// stage results (imputation once, treatment per winsorization level,
/// normalization per level x method, weights per upstream combination).
class PipelineEvaluator {
  public:
    PipelineEvaluator(const PanelTensor& raw, const Hierarchy& hierarchy,
                      const PopulationWeights& population, PipelineOptions options);
    ~PipelineEvaluator();

    PipelineEvaluator(const PipelineEvaluator&) = delete;
    PipelineEvaluator& operator=(const PipelineEvaluator&) = delete;

    const PipelineOutput& evaluate(const MethodConfig& config);
    const PipelineOptions& options() const;
    const Hierarchy& hierarchy() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience single-shot evaluation.
PipelineOutput run_pipeline(const MethodConfig& config, const PanelTensor& raw,
                            const Hierarchy& hierarchy, const PopulationWeights& population,
                            const PipelineOptions& options = {});

} // namespace compindex
