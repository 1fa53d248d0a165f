#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace compindex {

enum class Stage { raw, imputed, treated, normalized };

enum class CellFlag : std::uint8_t { none = 0, suppressed_numerator, suppressed_denominator };

std::string to_string(Stage stage);

/// Dense unit x indicator x year data cube. Axis sets are fixed at
/// construction, lexicographically ordered and immutable; cells are optional
/// while the stage is raw and must all be present afterwards.
class PanelTensor {
  public:
    PanelTensor(std::vector<std::string> units, std::vector<std::string> indicators,
                std::vector<int> years, Stage stage);

    const std::vector<std::string>& units() const { return units_; }
    const std::vector<std::string>& indicators() const { return indicators_; }
    const std::vector<int>& years() const { return years_; }
    Stage stage() const { return stage_; }

    std::size_t unit_count() const { return units_.size(); }
    std::size_t indicator_count() const { return indicators_.size(); }
    std::size_t year_count() const { return years_.size(); }

    int unit_index(const std::string& id) const;      // throws DataError when absent
    int indicator_index(const std::string& id) const; // throws DataError when absent
    int year_index(int year) const;                   // throws DataError when absent

    bool present(int u, int i, int t) const { return present_[offset(u, i, t)]; }
    double value(int u, int i, int t) const;
    std::optional<double> maybe_value(int u, int i, int t) const;
    void set(int u, int i, int t, double v);
    void clear(int u, int i, int t);

    CellFlag flag(int u, int i, int t) const { return flags_[offset(u, i, t)]; }
    void set_flag(int u, int i, int t, CellFlag f) { flags_[offset(u, i, t)] = f; }

    std::size_t missing_count() const;

    /// Re-tags the tensor; any stage other than raw requires completeness.
    void set_stage(Stage stage);

    /// All years of one (unit, indicator) series, missing cells as nullopt.
    std::vector<std::optional<double>> series(int u, int i) const;

    /// Values of one indicator across all units and years (row-major by unit);
    /// requires a complete tensor.
    std::vector<double> indicator_values(int i) const;

    /// Values of one indicator for a single year across all units.
    std::vector<double> indicator_year_values(int i, int t) const;

    /// Copy restricted to the given indicators (order re-sorted internally).
    PanelTensor subset_indicators(const std::vector<std::string>& keep) const;

    bool identical_to(const PanelTensor& other) const;

  private:
    std::size_t offset(int u, int i, int t) const {
        return (static_cast<std::size_t>(u) * indicators_.size() + static_cast<std::size_t>(i)) *
                   years_.size() +
               static_cast<std::size_t>(t);
    }

    std::vector<std::string> units_;
    std::vector<std::string> indicators_;
    std::vector<int> years_;
    Stage stage_;
    std::vector<double> values_;
    std::vector<std::uint8_t> present_;
    std::vector<CellFlag> flags_;
};

/// Indicator -> subdomain -> domain tree plus the unit -> region partition.
/// Validated on construction: partitions are exact and no group is empty.
struct Hierarchy {
    std::vector<std::string> domains;
    std::vector<std::string> subdomains;
    std::vector<std::string> indicators;
    std::vector<std::string> regions;

    std::map<std::string, std::string> indicator_subdomain;
    std::map<std::string, std::string> subdomain_domain;
    std::map<std::string, int> polarity; // delta in {0, 1}; 1 flips the sign
    std::map<std::string, std::string> unit_region;

    std::map<std::string, std::vector<std::string>> subdomain_indicators;
    std::map<std::string, std::vector<std::string>> domain_subdomains;
    std::map<std::string, std::vector<std::string>> region_units;

    /// Rebuilds the derived lookup maps and checks partition invariants
    /// against the given unit set.
    void finalize(const std::vector<std::string>& units);

    Hierarchy without_indicator(const std::string& id) const;
    Hierarchy without_subdomain(const std::string& id) const;
};

/// Per (unit, year) national population shares; each year sums to one.
struct PopulationWeights {
    std::vector<std::string> units;
    std::vector<int> years;
    std::vector<double> weights; // units x years

    double at(int u, int t) const { return weights[static_cast<std::size_t>(u) * years.size() + t]; }
    void validate() const;
};

enum class GapClass {
    interior_gap,
    edge_gap,
    all_years_missing,
    suppressed_numerator,
    suppressed_denominator,
};

std::string to_string(GapClass cls);

struct MissingCell {
    std::string unit;
    std::string indicator;
    int year = 0;
    GapClass cls = GapClass::interior_gap;
};

struct MissingnessReport {
    std::vector<MissingCell> cells; // sorted by (indicator, unit, year)

    std::size_t count(GapClass cls) const;
};

/// Assigns every missing cell the imputation rule that will fire for it.
/// Suppression wins over gap classes; interior/edge anchors are
/// originally-present values only.
MissingnessReport classify_missing(const PanelTensor& tensor);

} // namespace compindex
