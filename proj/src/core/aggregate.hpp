#pragma once

#include "core/panel.hpp"
#include "core/weights.hpp"

#include <string>
#include <vector>

namespace compindex {

/// Dense rows x columns x years score block; rows are units or regions (or
/// the single nation row), columns are hierarchy nodes at one level.
struct ScoreGrid {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<int> years;
    std::vector<double> values;

    ScoreGrid() = default;
    ScoreGrid(std::vector<std::string> rows_, std::vector<std::string> columns_,
              std::vector<int> years_);

    double at(int r, int c, int t) const { return values[offset(r, c, t)]; }
    void set(int r, int c, int t, double v) { values[offset(r, c, t)] = v; }

    int row_index(const std::string& id) const;
    int column_index(const std::string& id) const;
    int year_index(int year) const;

  private:
    std::size_t offset(int r, int c, int t) const {
        return (static_cast<std::size_t>(r) * columns.size() + static_cast<std::size_t>(c)) *
                   years.size() +
               static_cast<std::size_t>(t);
    }
};

/// Indicator-level view of a complete normalized tensor.
ScoreGrid to_grid(const PanelTensor& z);

struct HierarchyAggregates {
    ScoreGrid subdomain; // z_cst
    ScoreGrid domain;    // z_cdt
    ScoreGrid overall;   // z_ct, single column "overall"
};

/// Geometric aggregation is experimental: it needs strictly positive scores
/// (e.g. min-max normalized data) and stays outside the sensitivity method
/// space.
enum class Aggregation { linear, geometric };

/// Linear aggregation z_cst = alpha_s sum w_i z_cit and upwards; geometric
/// mode computes the weighted geometric mean exp(alpha_s sum w_i ln z_cit)
/// at each step instead.
HierarchyAggregates aggregate_hierarchy(const PanelTensor& z, const Hierarchy& hierarchy,
                                        const WeightSystem& weights,
                                        Aggregation kind = Aggregation::linear);

/// Regional aggregation with national population shares as written in the
/// index definition (a share-weighted sum). With renormalize the shares are
/// divided by their regional total, turning the values into regional means.
ScoreGrid aggregate_regions(const ScoreGrid& grid, const PopulationWeights& population,
                            const Hierarchy& hierarchy, bool renormalize = false);

/// National aggregation: population-share weighted sum over all units.
ScoreGrid aggregate_national(const ScoreGrid& grid, const PopulationWeights& population);

/// Computes the regional-subdomain block both ways (indicators first vs
/// geography first) and returns the largest absolute discrepancy.
double verify_commutativity(const PanelTensor& z, const Hierarchy& hierarchy,
                            const WeightSystem& weights, const PopulationWeights& population);

inline constexpr const char* kOverallColumn = "overall";
inline constexpr const char* kNationRow = "nation";

} // namespace compindex
