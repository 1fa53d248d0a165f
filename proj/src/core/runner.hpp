#pragma once

#include "core/analysis.hpp"
#include "core/panel_io.hpp"
#include "core/pipeline.hpp"
#include "core/treatment.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace compindex {

/// Fully materialised run configuration; every field that has a default is
/// filled in before execution so the manifest records the exact settings.
struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path hierarchy;
    std::filesystem::path population;

    int baseline_year = 0; // 0 = first year in the data
    int analysis_year = 0; // 0 = baseline year
    std::uint64_t seed = 1;

    TreatmentMode treatment = TreatmentMode::modified;
    std::optional<int> winsor_kmax;
    NormMethod normalization = NormMethod::weighted_zscore;
    std::string indicator_weights = "fa"; // equal | fa | pca
    DomainWeighting domain_weights = DomainWeighting::equal;
    int pca_year = 0; // 0 = baseline year
    Estimator estimator = Estimator::linear;
    std::vector<double> targets; // empty = equal importances
    bool renormalize_regions = false;

    bool run_correlation = true;
    ScreenLevel correlation_level = ScreenLevel::indicator;
    bool run_sa = true;
    SaMode sa_mode = SaMode::exact;
    int iterations = 10000;
    int bootstrap = 1000;
    OutputSelector output;
    bool run_ua = true;
    bool run_rank_shift = true;
    RemovalLevel rank_shift_level = RemovalLevel::subdomain;
    MethodConfig reference_config; // UA reference point

    static RunConfig from_file(const std::filesystem::path& path);
    std::string manifest_settings_json() const;
};

struct RunSummary {
    std::filesystem::path directory;
    std::vector<std::string> outputs; // file names written, manifest last
};

/// Executes the full pipeline and audit per the config, writing every stage
/// artifact plus a manifest with input and output checksums.
RunSummary run_all(const RunConfig& config, const std::filesystem::path& out_dir);

RunSummary run_all_file(const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir);

/// index.csv rows across the selected hierarchy levels (indicator,
/// subdomain, domain, overall) and geographies (utla, region, nation). The
/// presentation column holds 100 + 10z for z-scores and the aggregate itself
/// for min-max.
std::string index_csv(const HierarchyAggregates& aggregates, const ScoreGrid& indicator_grid,
                      const Hierarchy& hierarchy, const PopulationWeights& population,
                      NormMethod method, bool renormalize_regions,
                      const std::vector<std::string>& levels = {},
                      const std::vector<std::string>& geos = {});

struct CompareBands {
    double within_10 = 0.0;  // share of units with |rank shift| <= 10
    double within_30 = 0.0;  // 11..30
    double beyond_30 = 0.0;  // >= 31
};

/// Per-unit rank and index comparison of two run directories; also writes
/// <out>.summary.json with the shift bands.
CompareBands compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                          const std::filesystem::path& out_csv);

} // namespace compindex
