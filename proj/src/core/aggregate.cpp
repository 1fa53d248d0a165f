#include "core/aggregate.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace compindex {

ScoreGrid::ScoreGrid(std::vector<std::string> rows_, std::vector<std::string> columns_,
                     std::vector<int> years_)
    : rows(std::move(rows_)), columns(std::move(columns_)), years(std::move(years_)) {
    values.assign(rows.size() * columns.size() * years.size(), 0.0);
}

int ScoreGrid::row_index(const std::string& id) const {
    const auto it = std::find(rows.begin(), rows.end(), id);
    if (it == rows.end()) {
        throw DataError("unknown row: " + id);
    }
    return static_cast<int>(it - rows.begin());
}

int ScoreGrid::column_index(const std::string& id) const {
    const auto it = std::find(columns.begin(), columns.end(), id);
    if (it == columns.end()) {
        throw DataError("unknown column: " + id);
    }
    return static_cast<int>(it - columns.begin());
}

int ScoreGrid::year_index(int year) const {
    const auto it = std::find(years.begin(), years.end(), year);
    if (it == years.end()) {
        throw DataError("unknown year: " + std::to_string(year));
    }
    return static_cast<int>(it - years.begin());
}

ScoreGrid to_grid(const PanelTensor& z) {
    if (z.missing_count() > 0) {
        throw DataError("aggregation requires a complete tensor");
    }
    ScoreGrid grid(z.units(), z.indicators(), z.years());
    for (std::size_t u = 0; u < z.unit_count(); ++u) {
        for (std::size_t i = 0; i < z.indicator_count(); ++i) {
            for (std::size_t t = 0; t < z.year_count(); ++t) {
                grid.set(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t),
                         z.value(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t)));
            }
        }
    }
    return grid;
}

namespace {

/// One weighted-average step from child columns to parent columns.
ScoreGrid aggregate_level(const ScoreGrid& child, const std::vector<std::string>& parents,
                          const std::map<std::string, std::vector<std::string>>& members,
                          const std::map<std::string, double>& weights, Aggregation kind) {
    ScoreGrid out(child.rows, parents, child.years);
    for (std::size_t p = 0; p < parents.size(); ++p) {
        const auto& ids = members.at(parents[p]);
        double wsum = 0.0;
        std::vector<std::pair<int, double>> cols;
        cols.reserve(ids.size());
        for (const auto& id : ids) {
            const auto it = weights.find(id);
            if (it == weights.end()) {
                throw DataError("missing weight for node: " + id);
            }
            cols.emplace_back(child.column_index(id), it->second);
            wsum += it->second;
        }
        const double alpha = 1.0 / wsum;
        for (std::size_t r = 0; r < child.rows.size(); ++r) {
            for (std::size_t t = 0; t < child.years.size(); ++t) {
                double acc = 0.0;
                for (const auto& [c, w] : cols) {
                    const double v = child.at(static_cast<int>(r), c, static_cast<int>(t));
                    if (kind == Aggregation::linear) {
                        acc += w * v;
                    } else {
                        if (!(v > 0.0)) {
                            throw NumericError(
                                "geometric aggregation requires strictly positive scores; " +
                                parents[p] + " has a non-positive child value");
                        }
                        acc += w * std::log(v);
                    }
                }
                out.set(static_cast<int>(r), static_cast<int>(p), static_cast<int>(t),
                        kind == Aggregation::linear ? alpha * acc : std::exp(alpha * acc));
            }
        }
    }
    return out;
}

} // namespace

HierarchyAggregates aggregate_hierarchy(const PanelTensor& z, const Hierarchy& hierarchy,
                                        const WeightSystem& weights, Aggregation kind) {
    const ScoreGrid indicator_grid = to_grid(z);
    for (const auto& id : hierarchy.indicators) {
        // Surfaces a tensor/hierarchy mismatch before any arithmetic.
        indicator_grid.column_index(id);
    }

    HierarchyAggregates out;
    out.subdomain = aggregate_level(indicator_grid, hierarchy.subdomains,
                                    hierarchy.subdomain_indicators, weights.indicator, kind);
    out.domain = aggregate_level(out.subdomain, hierarchy.domains, hierarchy.domain_subdomains,
                                 weights.subdomain, kind);

    std::map<std::string, std::vector<std::string>> all{{kOverallColumn, hierarchy.domains}};
    out.overall = aggregate_level(out.domain, {kOverallColumn}, all, weights.domain, kind);
    return out;
}

namespace {

int population_year_index(const PopulationWeights& population, int year) {
    const auto it = std::lower_bound(population.years.begin(), population.years.end(), year);
    if (it == population.years.end() || *it != year) {
        throw DataError("population weights missing year " + std::to_string(year));
    }
    return static_cast<int>(it - population.years.begin());
}

} // namespace

ScoreGrid aggregate_regions(const ScoreGrid& grid, const PopulationWeights& population,
                            const Hierarchy& hierarchy, bool renormalize) {
    ScoreGrid out(hierarchy.regions, grid.columns, grid.years);
    for (std::size_t g = 0; g < hierarchy.regions.size(); ++g) {
        const auto& members = hierarchy.region_units.at(hierarchy.regions[g]);
        std::vector<int> unit_rows;
        std::vector<int> pop_rows;
        unit_rows.reserve(members.size());
        for (const auto& unit : members) {
            unit_rows.push_back(grid.row_index(unit));
            const auto it =
                std::lower_bound(population.units.begin(), population.units.end(), unit);
            if (it == population.units.end() || *it != unit) {
                throw DataError("population weights missing unit " + unit);
            }
            pop_rows.push_back(static_cast<int>(it - population.units.begin()));
        }
        for (std::size_t t = 0; t < grid.years.size(); ++t) {
            const int pt = population_year_index(population, grid.years[t]);
            double share = 0.0;
            for (const int pr : pop_rows) {
                share += population.at(pr, pt);
            }
            const double scale = renormalize ? 1.0 / share : 1.0;
            for (std::size_t c = 0; c < grid.columns.size(); ++c) {
                double acc = 0.0;
                for (std::size_t m = 0; m < members.size(); ++m) {
                    acc += population.at(pop_rows[m], pt) *
                           grid.at(unit_rows[m], static_cast<int>(c), static_cast<int>(t));
                }
                out.set(static_cast<int>(g), static_cast<int>(c), static_cast<int>(t),
                        scale * acc);
            }
        }
    }
    return out;
}

ScoreGrid aggregate_national(const ScoreGrid& grid, const PopulationWeights& population) {
    ScoreGrid out({kNationRow}, grid.columns, grid.years);
    std::vector<int> pop_rows;
    pop_rows.reserve(grid.rows.size());
    for (const auto& unit : grid.rows) {
        const auto it = std::lower_bound(population.units.begin(), population.units.end(), unit);
        if (it == population.units.end() || *it != unit) {
            throw DataError("population weights missing unit " + unit);
        }
        pop_rows.push_back(static_cast<int>(it - population.units.begin()));
    }
    for (std::size_t t = 0; t < grid.years.size(); ++t) {
        const int pt = population_year_index(population, grid.years[t]);
        for (std::size_t c = 0; c < grid.columns.size(); ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < grid.rows.size(); ++r) {
                acc += population.at(pop_rows[r], pt) *
                       grid.at(static_cast<int>(r), static_cast<int>(c), static_cast<int>(t));
            }
            out.set(0, static_cast<int>(c), static_cast<int>(t), acc);
        }
    }
    return out;
}

double verify_commutativity(const PanelTensor& z, const Hierarchy& hierarchy,
                            const WeightSystem& weights, const PopulationWeights& population) {
    // Route 1: indicators -> subdomains, then units -> regions.
    const auto aggregates = aggregate_hierarchy(z, hierarchy, weights);
    const ScoreGrid route1 = aggregate_regions(aggregates.subdomain, population, hierarchy);

    // Route 2: units -> regions at indicator level, then indicators ->
    // subdomains on the regional rows.
    const ScoreGrid regional_indicators =
        aggregate_regions(to_grid(z), population, hierarchy);
    ScoreGrid route2(regional_indicators.rows, hierarchy.subdomains, regional_indicators.years);
    for (std::size_t s = 0; s < hierarchy.subdomains.size(); ++s) {
        const auto& ids = hierarchy.subdomain_indicators.at(hierarchy.subdomains[s]);
        double wsum = 0.0;
        std::vector<std::pair<int, double>> cols;
        for (const auto& id : ids) {
            cols.emplace_back(regional_indicators.column_index(id),
                              weights.indicator_weight(id));
            wsum += weights.indicator_weight(id);
        }
        const double alpha = 1.0 / wsum;
        for (std::size_t r = 0; r < route2.rows.size(); ++r) {
            for (std::size_t t = 0; t < route2.years.size(); ++t) {
                double acc = 0.0;
                for (const auto& [c, w] : cols) {
                    acc += w * regional_indicators.at(static_cast<int>(r), c, static_cast<int>(t));
                }
                route2.set(static_cast<int>(r), static_cast<int>(s), static_cast<int>(t),
                           alpha * acc);
            }
        }
    }

    double max_diff = 0.0;
    for (std::size_t k = 0; k < route1.values.size(); ++k) {
        max_diff = std::max(max_diff, std::abs(route1.values[k] - route2.values[k]));
    }
    return max_diff;
}

} // namespace compindex
