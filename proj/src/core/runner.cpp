#include "core/runner.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/impute.hpp"
#include "core/normalize.hpp"
#include "core/sha256.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace compindex {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config: " + path.string());
    }
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, unused] : obj.items()) {
        bool found = false;
        for (const char* k : known) {
            found = found || key == k;
        }
        if (!found) {
            throw ConfigError("unknown field '" + key + "' in " + where);
        }
    }
}

MethodConfig method_config_from_json(const json& j) {
    reject_unknown_keys(j, {"winsor_level", "normalization", "indicator_weights",
                            "domain_weights"},
                        "reference config");
    MethodConfig c;
    if (j.contains("winsor_level")) {
        c.winsor_level = j.at("winsor_level").get<int>();
    }
    if (j.contains("normalization")) {
        c.normalization = norm_method_from_string(j.at("normalization").get<std::string>());
    }
    if (j.contains("indicator_weights")) {
        const std::string iw = j.at("indicator_weights").get<std::string>();
        if (iw == "equal") {
            c.indicator_weights = IndicatorWeighting::equal;
        } else if (iw == "pca") {
            c.indicator_weights = IndicatorWeighting::pca;
        } else {
            throw ConfigError("reference config indicator_weights must be equal or pca");
        }
    }
    if (j.contains("domain_weights")) {
        const std::string dw = j.at("domain_weights").get<std::string>();
        if (dw == "equal") {
            c.domain_weights = DomainWeighting::equal;
        } else if (dw == "optimized") {
            c.domain_weights = DomainWeighting::optimized;
        } else {
            throw ConfigError("reference config domain_weights must be equal or optimized");
        }
    }
    MethodSpace::to_levels(c); // validates the winsor level
    return c;
}

json method_config_to_json(const MethodConfig& c) {
    return {{"winsor_level", c.winsor_level},
            {"normalization", to_string(c.normalization)},
            {"indicator_weights",
             c.indicator_weights == IndicatorWeighting::equal ? "equal" : "pca"},
            {"domain_weights",
             c.domain_weights == DomainWeighting::equal ? "equal" : "optimized"}};
}

} // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    RunConfig c;
    try {
        reject_unknown_keys(doc,
                            {"data", "hierarchy", "population", "baseline_year",
                             "analysis_year", "seed", "pipeline", "analysis"},
                            "run config");
        c.data = doc.at("data").get<std::string>();
        c.hierarchy = doc.at("hierarchy").get<std::string>();
        c.population = doc.at("population").get<std::string>();

        c.baseline_year = doc.value("baseline_year", 0);
        c.analysis_year = doc.value("analysis_year", 0);
        c.seed = doc.value("seed", std::uint64_t{1});

        if (doc.contains("pipeline")) {
            const json& p = doc.at("pipeline");
            reject_unknown_keys(p,
                                {"treatment", "winsor_kmax", "normalization",
                                 "indicator_weights", "domain_weights", "pca_year",
                                 "estimator", "targets", "renormalize_regions"},
                                "pipeline config");
            const std::string mode = p.value("treatment", "modified");
            if (mode == "ons") {
                c.treatment = TreatmentMode::ons;
            } else if (mode == "modified") {
                c.treatment = TreatmentMode::modified;
            } else {
                throw ConfigError("pipeline.treatment must be 'ons' or 'modified'");
            }
            if (p.contains("winsor_kmax") && !p.at("winsor_kmax").is_null()) {
                c.winsor_kmax = p.at("winsor_kmax").get<int>();
            }
            c.normalization =
                norm_method_from_string(p.value("normalization", "weighted-zscore"));
            c.indicator_weights = p.value("indicator_weights", "fa");
            if (c.indicator_weights != "equal" && c.indicator_weights != "fa" &&
                c.indicator_weights != "pca") {
                throw ConfigError("pipeline.indicator_weights must be equal, fa or pca");
            }
            const std::string dw = p.value("domain_weights", "equal");
            if (dw == "equal") {
                c.domain_weights = DomainWeighting::equal;
            } else if (dw == "optimized") {
                c.domain_weights = DomainWeighting::optimized;
            } else {
                throw ConfigError("pipeline.domain_weights must be equal or optimized");
            }
            c.pca_year = p.value("pca_year", 0);
            c.estimator = estimator_from_string(p.value("estimator", "linear"));
            if (p.contains("targets") && !p.at("targets").is_null()) {
                c.targets = p.at("targets").get<std::vector<double>>();
            }
            c.renormalize_regions = p.value("renormalize_regions", false);
        }

        if (doc.contains("analysis")) {
            const json& a = doc.at("analysis");
            reject_unknown_keys(a,
                                {"run_correlation", "correlation_level", "run_sa", "sa_mode",
                                 "iterations", "bootstrap", "output_level", "run_ua",
                                 "run_rank_shift", "rank_shift_level", "reference_config"},
                                "analysis config");
            c.run_correlation = a.value("run_correlation", true);
            c.correlation_level =
                screen_level_from_string(a.value("correlation_level", "indicator"));
            c.run_sa = a.value("run_sa", true);
            const std::string mode = a.value("sa_mode", "exact");
            if (mode == "exact") {
                c.sa_mode = SaMode::exact;
            } else if (mode == "mc" || mode == "montecarlo") {
                c.sa_mode = SaMode::montecarlo;
            } else {
                throw ConfigError("analysis.sa_mode must be 'exact' or 'mc'");
            }
            c.iterations = a.value("iterations", 10000);
            c.bootstrap = a.value("bootstrap", 1000);
            c.output = output_selector_from_string(a.value("output_level", "overall"));
            c.run_ua = a.value("run_ua", true);
            c.run_rank_shift = a.value("run_rank_shift", true);
            const std::string level = a.value("rank_shift_level", "subdomain");
            if (level == "indicator") {
                c.rank_shift_level = RemovalLevel::indicator;
            } else if (level == "subdomain") {
                c.rank_shift_level = RemovalLevel::subdomain;
            } else {
                throw ConfigError("analysis.rank_shift_level must be indicator or subdomain");
            }
            if (a.contains("reference_config")) {
                c.reference_config = method_config_from_json(a.at("reference_config"));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("run config " + path.string() + ": " + e.what());
    }
    if (c.iterations < 1) {
        throw ConfigError("analysis.iterations must be positive");
    }
    return c;
}

std::string RunConfig::manifest_settings_json() const {
    json doc;
    doc["data"] = data.string();
    doc["hierarchy"] = hierarchy.string();
    doc["population"] = population.string();
    doc["baseline_year"] = baseline_year;
    doc["analysis_year"] = analysis_year;
    doc["seed"] = seed;
    doc["pipeline"] = {
        {"treatment", treatment == TreatmentMode::ons ? "ons" : "modified"},
        {"winsor_kmax", winsor_kmax ? json(*winsor_kmax) : json(nullptr)},
        {"normalization", to_string(normalization)},
        {"indicator_weights", indicator_weights},
        {"domain_weights", domain_weights == DomainWeighting::equal ? "equal" : "optimized"},
        {"pca_year", pca_year},
        {"estimator", to_string(estimator)},
        {"targets", targets},
        {"renormalize_regions", renormalize_regions},
    };
    doc["analysis"] = {
        {"run_correlation", run_correlation},
        {"correlation_level",
         correlation_level == ScreenLevel::indicator            ? "indicator"
         : correlation_level == ScreenLevel::subdomain          ? "subdomain"
         : correlation_level == ScreenLevel::domain             ? "domain"
                                                                : "indicator-x-subdomain"},
        {"run_sa", run_sa},
        {"sa_mode", sa_mode == SaMode::exact ? "exact" : "mc"},
        {"iterations", iterations},
        {"bootstrap", bootstrap},
        {"output_level", output.overall ? "overall" : "domain:" + output.domain_id},
        {"run_ua", run_ua},
        {"run_rank_shift", run_rank_shift},
        {"rank_shift_level",
         rank_shift_level == RemovalLevel::indicator ? "indicator" : "subdomain"},
        {"reference_config", method_config_to_json(reference_config)},
    };
    return doc.dump(2);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << text;
}

std::string ranks_csv(const std::vector<std::string>& units, const std::vector<double>& values,
                      const std::vector<int>& ranks, NormMethod method) {
    csv::Table table;
    table.header = {"unit", "rank", "value", "index"};
    for (std::size_t u = 0; u < units.size(); ++u) {
        const double h = method == NormMethod::weighted_zscore ? to_index_scale(values[u])
                                                               : values[u];
        table.rows.push_back({units[u], std::to_string(ranks[u]),
                              csv::format_double(values[u]), csv::format_double(h)});
    }
    return csv::to_string(table);
}

} // namespace

std::string index_csv(const HierarchyAggregates& aggregates, const ScoreGrid& indicator_grid,
                      const Hierarchy& hierarchy, const PopulationWeights& population,
                      NormMethod method, bool renormalize_regions,
                      const std::vector<std::string>& levels,
                      const std::vector<std::string>& geos) {
    const auto wanted = [](const std::vector<std::string>& filter, const char* name) {
        return filter.empty() ||
               std::find(filter.begin(), filter.end(), name) != filter.end();
    };
    for (const auto& level : levels) {
        if (level != "indicator" && level != "subdomain" && level != "domain" &&
            level != "overall") {
            throw ConfigError("unknown aggregation level: " + level);
        }
    }
    for (const auto& geo : geos) {
        if (geo != "utla" && geo != "region" && geo != "nation") {
            throw ConfigError("unknown geography: " + geo);
        }
    }

    csv::Table table;
    table.header = {"geo", "area", "level", "node", "year", "value", "index"};

    const auto emit = [&](const char* geo, const ScoreGrid& grid, const char* level) {
        for (std::size_t r = 0; r < grid.rows.size(); ++r) {
            for (std::size_t c = 0; c < grid.columns.size(); ++c) {
                for (std::size_t t = 0; t < grid.years.size(); ++t) {
                    const double v =
                        grid.at(static_cast<int>(r), static_cast<int>(c), static_cast<int>(t));
                    const double h =
                        method == NormMethod::weighted_zscore ? to_index_scale(v) : v;
                    table.rows.push_back({geo, grid.rows[r], level, grid.columns[c],
                                          std::to_string(grid.years[t]), csv::format_double(v),
                                          csv::format_double(h)});
                }
            }
        }
    };

    const auto emit_all_geos = [&](const ScoreGrid& grid, const char* level) {
        if (!wanted(levels, level)) {
            return;
        }
        if (wanted(geos, "utla")) {
            emit("utla", grid, level);
        }
        if (wanted(geos, "region")) {
            emit("region", aggregate_regions(grid, population, hierarchy, renormalize_regions),
                 level);
        }
        if (wanted(geos, "nation")) {
            emit("nation", aggregate_national(grid, population), level);
        }
    };

    emit_all_geos(indicator_grid, "indicator");
    emit_all_geos(aggregates.subdomain, "subdomain");
    emit_all_geos(aggregates.domain, "domain");
    emit_all_geos(aggregates.overall, "overall");
    return csv::to_string(table);
}

RunSummary run_all(const RunConfig& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    Dataset dataset = load_dataset(config.data, config.hierarchy, config.population);
    RunConfig effective = config;
    if (effective.baseline_year == 0) {
        effective.baseline_year = dataset.tensor.years().front();
    }
    if (effective.analysis_year == 0) {
        effective.analysis_year = effective.baseline_year;
    }
    if (effective.pca_year == 0) {
        effective.pca_year = effective.baseline_year;
    }
    if (effective.targets.empty()) {
        effective.targets.assign(dataset.hierarchy.domains.size(),
                                 1.0 / static_cast<double>(dataset.hierarchy.domains.size()));
    } else if (effective.targets.size() != dataset.hierarchy.domains.size()) {
        throw ConfigError("pipeline.targets must list one importance per domain");
    }

    RunSummary summary;
    summary.directory = out_dir;
    const auto emit = [&](const std::string& name, const std::string& text) {
        write_text(out_dir / name, text);
        summary.outputs.push_back(name);
    };

    // Stage 1: imputation.
    const MissingnessReport report = classify_missing(dataset.tensor);
    const PanelTensor imputed = impute(dataset.tensor, dataset.hierarchy, report);
    emit("imputed.csv", panel_to_csv(imputed));
    write_missingness_report(report, out_dir / "gaps.json");
    summary.outputs.push_back("gaps.json");

    // Stage 2: treatment.
    const TreatmentResult treated = treat(imputed, effective.treatment, effective.winsor_kmax);
    emit("treated.csv", panel_to_csv(treated.tensor));
    emit("treatment_plan.json", treatment_plan_json(treated.plan));

    // Stage 3: normalization.
    const NormalizationParams norm_params =
        effective.normalization == NormMethod::weighted_zscore
            ? fit_normalization(treated.tensor, dataset.population, dataset.hierarchy,
                                effective.baseline_year)
            : fit_minmax(treated.tensor, dataset.hierarchy, effective.baseline_year);
    const PanelTensor z = normalize(treated.tensor, norm_params);
    emit("normalized.csv", panel_to_csv(z));
    emit("normalization_params.json", norm_params.to_json());

    // Stage 4: weights.
    WeightSystem weights = effective.indicator_weights == "fa"
                               ? fa_weights(z, dataset.hierarchy)
                           : effective.indicator_weights == "pca"
                               ? pca_weights(z, dataset.hierarchy, effective.pca_year)
                               : equal_weights(dataset.hierarchy);

    // Stage 5: aggregation (and optimized domain weights, which are fitted
    // against the domain scores of the analysis year).
    HierarchyAggregates aggregates = aggregate_hierarchy(z, dataset.hierarchy, weights);
    const int at = aggregates.overall.year_index(effective.analysis_year);
    const std::size_t n_units = z.unit_count();
    const std::size_t n_domains = dataset.hierarchy.domains.size();

    if (effective.domain_weights == DomainWeighting::optimized) {
        Eigen::MatrixXd scores(n_units, n_domains);
        for (std::size_t u = 0; u < n_units; ++u) {
            for (std::size_t d = 0; d < n_domains; ++d) {
                scores(u, d) = aggregates.domain.at(static_cast<int>(u), static_cast<int>(d), at);
            }
        }
        const OptimizedWeights ow =
            optimize_weights(scores, effective.targets, effective.estimator, effective.seed);
        for (std::size_t d = 0; d < n_domains; ++d) {
            weights.domain[dataset.hierarchy.domains[d]] = ow.weights[d];
            weights.achieved_importance[dataset.hierarchy.domains[d]] = ow.achieved[d];
        }
        weights.provenance = WeightProvenance::optimized;
        weights.objective = ow.objective;
        weights.no_improvement = ow.no_improvement;
        weights.estimator = to_string(effective.estimator);
        aggregates = aggregate_hierarchy(z, dataset.hierarchy, weights);
    }
    emit("weights.json", weights.to_json(dataset.hierarchy));
    emit("index.csv", index_csv(aggregates, to_grid(z), dataset.hierarchy, dataset.population,
                                effective.normalization, effective.renormalize_regions));

    std::vector<double> overall(n_units);
    for (std::size_t u = 0; u < n_units; ++u) {
        overall[u] = aggregates.overall.at(static_cast<int>(u), 0, at);
    }
    const std::vector<int> ranks = rank_ascending(overall);
    emit("ranks.csv", ranks_csv(z.units(), overall, ranks, effective.normalization));

    // Stage 6: audit.
    if (effective.run_correlation) {
        const CorrelationScreen screen =
            correlation_screen(z, dataset.hierarchy, effective.correlation_level);
        emit("corr.csv", correlation_csv(screen));
        emit("corr_flags.json", correlation_flags_json(screen));
    }

    if (effective.run_sa || effective.run_ua) {
        PipelineOptions options;
        options.baseline_year = effective.baseline_year;
        options.analysis_year = effective.analysis_year;
        options.seed = effective.seed;
        options.estimator = effective.estimator;
        options.targets = effective.targets;
        PipelineEvaluator evaluator(dataset.tensor, dataset.hierarchy, dataset.population,
                                    options);
        if (effective.run_sa) {
            SaOptions sa;
            sa.mode = effective.sa_mode;
            sa.iterations = effective.iterations;
            sa.seed = effective.seed;
            sa.bootstrap = effective.bootstrap;
            sa.output = effective.output;
            const SaResult result = sobol_sa(evaluator, sa);
            emit("sa.csv", sa_csv(result));
            emit("sa_per_unit.csv", sa_per_unit_csv(result));
        }
        if (effective.run_ua) {
            const auto bands = uncertainty_bands(evaluator, effective.iterations, effective.seed,
                                                 effective.reference_config);
            emit("ua.csv", bands_csv(bands));
        }
    }

    if (effective.run_rank_shift) {
        PipelineOptions options;
        options.baseline_year = effective.baseline_year;
        options.analysis_year = effective.analysis_year;
        options.seed = effective.seed;
        options.estimator = effective.estimator;
        const auto shifts =
            rank_shift_removal(dataset.tensor, dataset.hierarchy, dataset.population,
                               effective.reference_config, effective.rank_shift_level, options);
        emit("rank_shift.csv", rank_shift_csv(shifts));
    }

    // Manifest with checksums of everything written above.
    json manifest;
    manifest["version"] = kVersion;
    const std::string settings = effective.manifest_settings_json();
    manifest["settings"] = json::parse(settings);
    manifest["config_sha256"] = sha256_hex(settings);
    manifest["inputs"] = {
        {"data", {{"path", config.data.string()}, {"sha256", sha256_file(config.data)}}},
        {"hierarchy",
         {{"path", config.hierarchy.string()}, {"sha256", sha256_file(config.hierarchy)}}},
        {"population",
         {{"path", config.population.string()}, {"sha256", sha256_file(config.population)}}},
    };
    json outputs;
    for (const auto& name : summary.outputs) {
        outputs[name] = sha256_file(out_dir / name);
    }
    manifest["outputs"] = outputs;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    summary.outputs.push_back("manifest.json");
    return summary;
}

RunSummary run_all_file(const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir) {
    RunConfig config = RunConfig::from_file(config_path);
    // Paths in the config are relative to the config file.
    const auto base = config_path.parent_path();
    const auto anchor = [&base](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) {
            p = base / p;
        }
    };
    anchor(config.data);
    anchor(config.hierarchy);
    anchor(config.population);
    return run_all(config, out_dir);
}

CompareBands compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                          const std::filesystem::path& out_csv) {
    const auto read_ranks = [](const std::filesystem::path& dir) {
        const auto table = csv::read_file(dir / "ranks.csv");
        const int cu = table.column("unit");
        const int cr = table.column("rank");
        const int ci = table.column("index");
        if (cu < 0 || cr < 0 || ci < 0) {
            throw DataError(dir.string() + "/ranks.csv: expected unit,rank,value,index");
        }
        std::map<std::string, std::pair<int, double>> out;
        for (const auto& row : table.rows) {
            out[row[cu]] = {static_cast<int>(csv::parse_double(row[cr], "rank")),
                            csv::parse_double(row[ci], "index")};
        }
        return out;
    };

    const auto a = read_ranks(run_a);
    const auto b = read_ranks(run_b);
    if (a.size() != b.size()) {
        throw DataError("compare_runs: the two runs cover different unit sets");
    }
    for (const auto& [unit, unused] : a) {
        if (!b.count(unit)) {
            throw DataError("compare_runs: unit missing from second run: " + unit);
        }
    }

    csv::Table table;
    table.header = {"unit", "rank_a", "rank_b", "rank_diff", "index_a", "index_b", "index_diff"};
    CompareBands bands;
    for (const auto& [unit, va] : a) {
        const auto& vb = b.at(unit);
        const int diff = vb.first - va.first;
        table.rows.push_back({unit, std::to_string(va.first), std::to_string(vb.first),
                              std::to_string(diff), csv::format_double(va.second),
                              csv::format_double(vb.second),
                              csv::format_double(vb.second - va.second)});
        const int mag = std::abs(diff);
        if (mag <= 10) {
            bands.within_10 += 1.0;
        } else if (mag <= 30) {
            bands.within_30 += 1.0;
        } else {
            bands.beyond_30 += 1.0;
        }
    }
    const double n = static_cast<double>(a.size());
    bands.within_10 /= n;
    bands.within_30 /= n;
    bands.beyond_30 /= n;

    csv::write_file(out_csv, table);
    json summary;
    summary["share_within_10"] = bands.within_10;
    summary["share_11_to_30"] = bands.within_30;
    summary["share_31_plus"] = bands.beyond_30;
    write_text(out_csv.string() + ".summary.json", summary.dump(2) + "\n");
    return bands;
}

} // namespace compindex
