#include "compindex.h"

#include "core/analysis.hpp"
#include "core/errors.hpp"
#include "core/impute.hpp"
#include "core/normalize.hpp"
#include "core/panel_io.hpp"
#include "core/pipeline.hpp"
#include "core/runner.hpp"
#include "core/svgplot.hpp"
#include "core/treatment.hpp"
#include "core/weights.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

template <typename Fn> ci_status guarded(Fn&& fn) {
    try {
        fn();
        return CI_OK;
    } catch (const compindex::ConfigError& e) {
        g_last_error = e.what();
        return CI_ERROR_CONFIG;
    } catch (const compindex::DataError& e) {
        g_last_error = e.what();
        return CI_ERROR_DATA;
    } catch (const compindex::NumericError& e) {
        g_last_error = e.what();
        return CI_ERROR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CI_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return CI_ERROR;
    }
}

const char* require(const char* arg, const char* name) {
    if (arg == nullptr) {
        throw compindex::ConfigError(std::string(name) + " must not be NULL");
    }
    return arg;
}

template <typename T> void require_out(T* out) {
    if (out == nullptr) {
        throw compindex::ConfigError("out must not be NULL");
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw compindex::DataError("cannot write file: " + path);
    }
    out << text;
}

std::vector<std::string> split_list(const char* text) {
    std::vector<std::string> out;
    if (text == nullptr) {
        return out;
    }
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace

struct ci_dataset {
    compindex::Dataset data;
};

struct ci_result {
    compindex::PipelineOutput output;
};

extern "C" {

const char* ci_version(void) { return "0.1.0"; }

const char* ci_last_error(void) { return g_last_error.c_str(); }

ci_status ci_dataset_open(const char* data_csv, const char* hierarchy_json,
                          const char* population_csv, ci_dataset** out) {
    return guarded([&] {
        require(data_csv, "data_csv");
        require(hierarchy_json, "hierarchy_json");
        require(population_csv, "population_csv");
        require_out(out);
        auto dataset = std::make_unique<ci_dataset>(
            ci_dataset{compindex::load_dataset(data_csv, hierarchy_json, population_csv)});
        *out = dataset.release();
    });
}

void ci_dataset_close(ci_dataset* dataset) { delete dataset; }

int ci_dataset_units(const ci_dataset* dataset) {
    return dataset ? static_cast<int>(dataset->data.tensor.unit_count()) : 0;
}

int ci_dataset_indicators(const ci_dataset* dataset) {
    return dataset ? static_cast<int>(dataset->data.tensor.indicator_count()) : 0;
}

int ci_dataset_years(const ci_dataset* dataset) {
    return dataset ? static_cast<int>(dataset->data.tensor.year_count()) : 0;
}

int ci_dataset_missing_cells(const ci_dataset* dataset) {
    return dataset ? static_cast<int>(dataset->data.tensor.missing_count()) : 0;
}

ci_status ci_run_pipeline(ci_dataset* dataset, const char* method_json, ci_result** out) {
    return guarded([&] {
        if (dataset == nullptr) {
            throw compindex::ConfigError("dataset must not be NULL");
        }
        require_out(out);
        json doc = json::object();
        if (method_json != nullptr && method_json[0] != '\0') {
            try {
                doc = json::parse(method_json);
            } catch (const json::exception& e) {
                throw compindex::ConfigError(std::string("invalid method JSON: ") + e.what());
            }
        }
        compindex::MethodConfig config;
        if (doc.contains("winsor_level")) {
            config.winsor_level = doc.at("winsor_level").get<int>();
        }
        if (doc.contains("normalization")) {
            config.normalization =
                compindex::norm_method_from_string(doc.at("normalization").get<std::string>());
        }
        if (doc.contains("indicator_weights")) {
            const auto iw = doc.at("indicator_weights").get<std::string>();
            if (iw != "equal" && iw != "pca") {
                throw compindex::ConfigError("indicator_weights must be equal or pca");
            }
            config.indicator_weights = iw == "equal" ? compindex::IndicatorWeighting::equal
                                                     : compindex::IndicatorWeighting::pca;
        }
        if (doc.contains("domain_weights")) {
            const auto dw = doc.at("domain_weights").get<std::string>();
            if (dw != "equal" && dw != "optimized") {
                throw compindex::ConfigError("domain_weights must be equal or optimized");
            }
            config.domain_weights = dw == "equal" ? compindex::DomainWeighting::equal
                                                  : compindex::DomainWeighting::optimized;
        }
        compindex::PipelineOptions options;
        options.baseline_year = doc.value("baseline_year", 0);
        options.analysis_year = doc.value("analysis_year", 0);
        options.seed = doc.value("seed", std::uint64_t{1});

        auto result = std::make_unique<ci_result>(
            ci_result{compindex::run_pipeline(config, dataset->data.tensor,
                                              dataset->data.hierarchy,
                                              dataset->data.population, options)});
        *out = result.release();
    });
}

void ci_result_close(ci_result* result) { delete result; }

int ci_result_units(const ci_result* result) {
    return result ? static_cast<int>(result->output.units.size()) : 0;
}

const char* ci_result_unit(const ci_result* result, int index) {
    if (result == nullptr || index < 0 ||
        index >= static_cast<int>(result->output.units.size())) {
        return nullptr;
    }
    return result->output.units[static_cast<std::size_t>(index)].c_str();
}

double ci_result_value(const ci_result* result, int index) {
    if (result == nullptr || index < 0 ||
        index >= static_cast<int>(result->output.overall.size())) {
        return 0.0;
    }
    return result->output.overall[static_cast<std::size_t>(index)];
}

int ci_result_rank(const ci_result* result, int index) {
    if (result == nullptr || index < 0 ||
        index >= static_cast<int>(result->output.ranks.size())) {
        return 0;
    }
    return result->output.ranks[static_cast<std::size_t>(index)];
}

ci_status ci_impute(const char* data_csv, const char* hierarchy_json, const char* out_csv,
                    const char* report_json) {
    return guarded([&] {
        auto tensor = compindex::load_panel_csv(require(data_csv, "data_csv"));
        auto hierarchy = compindex::load_hierarchy_json(require(hierarchy_json, "hierarchy_json"));
        hierarchy.finalize(tensor.units());
        const auto report = compindex::classify_missing(tensor);
        const auto imputed = compindex::impute(tensor, hierarchy, report);
        compindex::write_panel_csv(imputed, require(out_csv, "out_csv"));
        if (report_json != nullptr) {
            compindex::write_missingness_report(report, report_json);
        }
    });
}

ci_status ci_treat(const char* data_csv, const char* mode, int winsor_kmax, const char* out_csv,
                   const char* plan_json) {
    return guarded([&] {
        const std::string mode_name = require(mode, "mode");
        compindex::TreatmentMode treatment;
        if (mode_name == "ons") {
            treatment = compindex::TreatmentMode::ons;
        } else if (mode_name == "modified") {
            treatment = compindex::TreatmentMode::modified;
        } else {
            throw compindex::ConfigError("mode must be 'ons' or 'modified'");
        }
        auto tensor = compindex::load_panel_csv(require(data_csv, "data_csv"));
        const auto result = compindex::treat(
            tensor, treatment,
            winsor_kmax > 0 ? std::optional<int>(winsor_kmax) : std::nullopt);
        compindex::write_panel_csv(result.tensor, require(out_csv, "out_csv"));
        if (plan_json != nullptr) {
            write_text_file(plan_json, compindex::treatment_plan_json(result.plan));
        }
    });
}

ci_status ci_normalize(const char* data_csv, const char* population_csv,
                       const char* hierarchy_json, const char* method, int baseline_year,
                       const char* out_csv, const char* params_json) {
    return guarded([&] {
        auto tensor = compindex::load_panel_csv(require(data_csv, "data_csv"));
        const auto norm = compindex::norm_method_from_string(require(method, "method"));
        std::map<std::string, int> polarity;
        if (hierarchy_json != nullptr) {
            const auto hierarchy = compindex::load_hierarchy_json(hierarchy_json);
            polarity = hierarchy.polarity;
        }
        if (baseline_year <= 0) {
            baseline_year = tensor.years().front();
        }
        compindex::NormalizationParams params;
        if (norm == compindex::NormMethod::weighted_zscore) {
            const auto population =
                compindex::load_population_csv(require(population_csv, "population_csv"));
            params = compindex::fit_normalization(tensor, population, polarity, baseline_year);
        } else {
            params = compindex::fit_minmax(tensor, polarity, baseline_year);
        }
        const auto z = compindex::normalize(tensor, params);
        compindex::write_panel_csv(z, require(out_csv, "out_csv"));
        if (params_json != nullptr) {
            write_text_file(params_json, params.to_json());
        }
    });
}

ci_status ci_weights(const char* z_csv, const char* hierarchy_json, const char* method, int year,
                     const char* estimator, const char* out_json) {
    return guarded([&] {
        auto tensor = compindex::load_panel_csv(require(z_csv, "z_csv"));
        tensor.set_stage(compindex::Stage::normalized);
        auto hierarchy = compindex::load_hierarchy_json(require(hierarchy_json, "hierarchy_json"));
        hierarchy.finalize(tensor.units());
        if (year <= 0) {
            year = tensor.years().front();
        }
        const std::string method_name = require(method, "method");
        compindex::WeightSystem weights;
        if (method_name == "equal") {
            weights = compindex::equal_weights(hierarchy);
        } else if (method_name == "fa") {
            weights = compindex::fa_weights(tensor, hierarchy);
        } else if (method_name == "pca") {
            weights = compindex::pca_weights(tensor, hierarchy, year);
        } else if (method_name == "optimized") {
            const auto est = compindex::estimator_from_string(
                estimator == nullptr ? "linear" : estimator);
            weights = compindex::equal_weights(hierarchy);
            const auto aggregates =
                compindex::aggregate_hierarchy(tensor, hierarchy, weights);
            const int t = aggregates.domain.year_index(year);
            const std::size_t n_units = tensor.unit_count();
            const std::size_t n_domains = hierarchy.domains.size();
            Eigen::MatrixXd scores(n_units, n_domains);
            for (std::size_t u = 0; u < n_units; ++u) {
                for (std::size_t d = 0; d < n_domains; ++d) {
                    scores(u, d) =
                        aggregates.domain.at(static_cast<int>(u), static_cast<int>(d), t);
                }
            }
            const std::vector<double> targets(
                n_domains, 1.0 / static_cast<double>(n_domains));
            const auto ow = compindex::optimize_weights(scores, targets, est, 1);
            for (std::size_t d = 0; d < n_domains; ++d) {
                weights.domain[hierarchy.domains[d]] = ow.weights[d];
                weights.achieved_importance[hierarchy.domains[d]] = ow.achieved[d];
            }
            weights.provenance = compindex::WeightProvenance::optimized;
            weights.objective = ow.objective;
            weights.no_improvement = ow.no_improvement;
            weights.estimator = compindex::to_string(est);
        } else {
            throw compindex::ConfigError("method must be equal, fa, pca or optimized");
        }
        write_text_file(require(out_json, "out_json"), weights.to_json(hierarchy));
    });
}

ci_status ci_aggregate(const char* z_csv, const char* weights_json, const char* hierarchy_json,
                       const char* population_csv, const char* levels, const char* geo,
                       int renormalize_regions, int geometric, const char* normalization,
                       const char* out_csv) {
    return guarded([&] {
        auto tensor = compindex::load_panel_csv(require(z_csv, "z_csv"));
        tensor.set_stage(compindex::Stage::normalized);
        auto hierarchy = compindex::load_hierarchy_json(require(hierarchy_json, "hierarchy_json"));
        hierarchy.finalize(tensor.units());
        const auto population =
            compindex::load_population_csv(require(population_csv, "population_csv"));

        std::ifstream win(require(weights_json, "weights_json"));
        if (!win) {
            throw compindex::DataError(std::string("cannot open weights: ") + weights_json);
        }
        std::ostringstream wbuf;
        wbuf << win.rdbuf();
        const auto weights = compindex::WeightSystem::from_json(wbuf.str());
        weights.validate(hierarchy);

        const auto method = compindex::norm_method_from_string(
            normalization == nullptr ? "zscore" : normalization);
        const auto aggregates = compindex::aggregate_hierarchy(
            tensor, hierarchy, weights,
            geometric != 0 ? compindex::Aggregation::geometric
                           : compindex::Aggregation::linear);
        const auto text = compindex::index_csv(aggregates, compindex::to_grid(tensor), hierarchy,
                                               population, method, renormalize_regions != 0,
                                               split_list(levels), split_list(geo));
        write_text_file(require(out_csv, "out_csv"), text);
    });
}

ci_status ci_analyze(const char* kind, const char* data_csv, const char* hierarchy_json,
                     const char* population_csv, const char* options_json, const char* out_path,
                     const char* aux_out) {
    return guarded([&] {
        const std::string what = require(kind, "kind");
        json opts = json::object();
        if (options_json != nullptr && options_json[0] != '\0') {
            try {
                opts = json::parse(options_json);
            } catch (const json::exception& e) {
                throw compindex::ConfigError(std::string("invalid options JSON: ") + e.what());
            }
        }
        auto dataset = compindex::load_dataset(require(data_csv, "data_csv"),
                                               require(hierarchy_json, "hierarchy_json"),
                                               require(population_csv, "population_csv"));

        compindex::PipelineOptions poptions;
        poptions.baseline_year = opts.value("baseline_year", 0);
        poptions.analysis_year = opts.value("analysis_year", 0);
        poptions.seed = opts.value("seed", std::uint64_t{1});
        poptions.estimator = compindex::estimator_from_string(opts.value("estimator", "linear"));

        compindex::MethodConfig reference;
        if (opts.contains("reference_config")) {
            const auto& rc = opts.at("reference_config");
            if (rc.contains("winsor_level")) {
                reference.winsor_level = rc.at("winsor_level").get<int>();
            }
            if (rc.contains("normalization")) {
                reference.normalization = compindex::norm_method_from_string(
                    rc.at("normalization").get<std::string>());
            }
            if (rc.contains("indicator_weights")) {
                reference.indicator_weights =
                    rc.at("indicator_weights").get<std::string>() == "pca"
                        ? compindex::IndicatorWeighting::pca
                        : compindex::IndicatorWeighting::equal;
            }
            if (rc.contains("domain_weights")) {
                reference.domain_weights =
                    rc.at("domain_weights").get<std::string>() == "optimized"
                        ? compindex::DomainWeighting::optimized
                        : compindex::DomainWeighting::equal;
            }
        }

        if (what == "corr") {
            const auto level =
                compindex::screen_level_from_string(opts.value("level", "indicator"));
            const auto report = compindex::classify_missing(dataset.tensor);
            const auto imputed = compindex::impute(dataset.tensor, dataset.hierarchy, report);
            const auto treated =
                compindex::treat(imputed, compindex::TreatmentMode::modified, std::nullopt);
            const int baseline = poptions.baseline_year > 0 ? poptions.baseline_year
                                                            : dataset.tensor.years().front();
            const auto params = compindex::fit_normalization(
                treated.tensor, dataset.population, dataset.hierarchy, baseline);
            const auto z = compindex::normalize(treated.tensor, params);
            const auto screen = compindex::correlation_screen(z, dataset.hierarchy, level);
            write_text_file(require(out_path, "out_path"), compindex::correlation_csv(screen));
            if (aux_out != nullptr) {
                write_text_file(aux_out, compindex::correlation_flags_json(screen));
            }
            return;
        }

        if (what == "sa" || what == "ua") {
            compindex::PipelineEvaluator evaluator(dataset.tensor, dataset.hierarchy,
                                                   dataset.population, poptions);
            if (what == "sa") {
                compindex::SaOptions sa;
                const std::string mode = opts.value("mode", "exact");
                if (mode == "exact") {
                    sa.mode = compindex::SaMode::exact;
                } else if (mode == "mc" || mode == "montecarlo") {
                    sa.mode = compindex::SaMode::montecarlo;
                } else {
                    throw compindex::ConfigError("mode must be 'exact' or 'mc'");
                }
                sa.iterations = opts.value("iterations", 10000);
                sa.seed = poptions.seed;
                sa.bootstrap = opts.value("bootstrap", 1000);
                sa.output = compindex::output_selector_from_string(
                    opts.value("output_level", "overall"));
                const auto result = compindex::sobol_sa(evaluator, sa);
                write_text_file(require(out_path, "out_path"), compindex::sa_csv(result));
                if (aux_out != nullptr) {
                    write_text_file(aux_out, compindex::sa_per_unit_csv(result));
                }
            } else {
                const auto bands = compindex::uncertainty_bands(
                    evaluator, opts.value("iterations", 10000), poptions.seed, reference);
                write_text_file(require(out_path, "out_path"), compindex::bands_csv(bands));
            }
            return;
        }

        if (what == "rankshift") {
            const std::string level_name = opts.value("level", "subdomain");
            compindex::RemovalLevel level;
            if (level_name == "indicator") {
                level = compindex::RemovalLevel::indicator;
            } else if (level_name == "subdomain") {
                level = compindex::RemovalLevel::subdomain;
            } else {
                throw compindex::ConfigError("level must be indicator or subdomain");
            }
            const auto shifts =
                compindex::rank_shift_removal(dataset.tensor, dataset.hierarchy,
                                              dataset.population, reference, level, poptions);
            write_text_file(require(out_path, "out_path"), compindex::rank_shift_csv(shifts));
            return;
        }

        throw compindex::ConfigError("kind must be corr, sa, ua or rankshift");
    });
}

ci_status ci_run(const char* config_json, const char* out_dir) {
    return guarded([&] {
        compindex::run_all_file(require(config_json, "config_json"),
                                require(out_dir, "out_dir"));
    });
}

ci_status ci_compare(const char* run_a, const char* run_b, const char* out_csv) {
    return guarded([&] {
        compindex::compare_runs(require(run_a, "run_a"), require(run_b, "run_b"),
                                require(out_csv, "out_csv"));
    });
}

ci_status ci_plot(const char* kind, const char* in_csv, const char* out_svg) {
    return guarded([&] {
        compindex::render_plot(require(kind, "kind"), require(in_csv, "in_csv"),
                               require(out_svg, "out_svg"));
    });
}

} // extern "C"
