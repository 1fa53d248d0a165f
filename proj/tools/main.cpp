// compindex command-line interface. Everything goes through the C API of the
// shared library; exit codes are the ci_status values (0 ok, 2 config error,
// 3 data error, 4 numeric error).

#include <compindex.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace {

int finish(ci_status status) {
    if (status != CI_OK) {
        std::fprintf(stderr, "compindex: %s\n", ci_last_error());
    }
    return static_cast<int>(status);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compindex — hierarchical composite-indicator construction and audit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ci_version());

    // impute
    std::string data, hierarchy, population, out, report, plan, params, weights_file;
    auto* impute = app.add_subcommand("impute", "Fill missing cells using the imputation rules");
    impute->add_option("--data", data, "long-format data CSV")->required();
    impute->add_option("--hierarchy", hierarchy, "hierarchy JSON")->required();
    impute->add_option("--out", out, "output CSV")->required();
    impute->add_option("--report", report, "missingness report JSON");

    // treat
    std::string mode = "modified";
    int kmax = 0;
    auto* treat = app.add_subcommand("treat", "Correct skewness/kurtosis per indicator");
    treat->add_option("--mode", mode, "ons | modified")->required();
    treat->add_option("--data", data, "imputed data CSV")->required();
    treat->add_option("--out", out, "treated CSV")->required();
    treat->add_option("--plan", plan, "treatment plan JSON");
    treat->add_option("--kmax", kmax, "winsorization budget (modified mode)");

    // normalize
    std::string method = "zscore";
    int baseline = 0;
    auto* normalize = app.add_subcommand("normalize", "Fit and apply baseline normalization");
    normalize->add_option("--method", method, "zscore | minmax")->required();
    normalize->add_option("--baseline", baseline, "baseline year (default: first)");
    normalize->add_option("--data", data, "treated data CSV")->required();
    normalize->add_option("--population", population, "population CSV (zscore)");
    normalize->add_option("--hierarchy", hierarchy,
                          "hierarchy JSON for polarity (omitted: health-directed data)");
    normalize->add_option("--out", out, "normalized CSV")->required();
    normalize->add_option("--params", params, "fitted parameters JSON");

    // weights
    std::string estimator;
    int year = 0;
    auto* weights = app.add_subcommand("weights", "Derive a weight system");
    weights->add_option("--method", method, "equal | fa | pca | optimized")->required();
    weights->add_option("--data", data, "normalized z CSV")->required();
    weights->add_option("--hierarchy", hierarchy, "hierarchy JSON")->required();
    weights->add_option("--out", out, "weights JSON")->required();
    weights->add_option("--year", year, "reference year (pca / optimized)");
    weights->add_option("--estimator", estimator, "linear | nonparametric (optimized)");

    // aggregate
    std::string levels = "indicator,subdomain,domain,overall";
    std::string geo = "utla,region,nation";
    std::string normalization;
    bool renormalize_regions = false;
    auto* aggregate = app.add_subcommand("aggregate", "Hierarchical and geographic aggregation");
    aggregate->add_option("--data", data, "normalized z CSV")->required();
    aggregate->add_option("--weights", weights_file, "weights JSON")->required();
    aggregate->add_option("--hierarchy", hierarchy, "hierarchy JSON")->required();
    aggregate->add_option("--population", population, "population CSV")->required();
    aggregate->add_option("--out", out, "index CSV")->required();
    aggregate->add_option("--levels", levels, "comma list of levels");
    aggregate->add_option("--geo", geo, "comma list of geographies");
    aggregate->add_option("--normalization", normalization,
                          "zscore | minmax (presentation column)");
    aggregate->add_flag("--renormalize-regions", renormalize_regions,
                        "divide regional sums by the regional population share");
    bool geometric = false;
    aggregate->add_flag("--geometric", geometric,
                        "experimental: weighted geometric means (positive scores only)");

    // analyze
    std::string kind, output_level = "overall", sa_mode = "exact", level, reference;
    std::string aux_out;
    int iterations = 10000, bootstrap = 1000, analysis_year = 0;
    std::uint64_t seed = 1;
    auto* analyze = app.add_subcommand("analyze", "Audit: corr | sa | ua | rankshift");
    analyze->add_option("kind", kind, "corr | sa | ua | rankshift")->required();
    analyze->add_option("--data", data, "raw data CSV")->required();
    analyze->add_option("--hierarchy", hierarchy, "hierarchy JSON")->required();
    analyze->add_option("--population", population, "population CSV")->required();
    analyze->add_option("--out", out, "output CSV")->required();
    analyze->add_option("--aux-out", aux_out, "flags JSON (corr) / per-unit CSV (sa)");
    analyze->add_option("--iterations", iterations, "sample size (sa mc / ua)");
    analyze->add_option("--seed", seed, "random seed");
    analyze->add_option("--mode", sa_mode, "exact | mc (sa)");
    analyze->add_option("--output-level", output_level, "overall | domain:<name>");
    analyze->add_option("--level", level, "corr level or rankshift level");
    analyze->add_option("--bootstrap", bootstrap, "bootstrap resamples (sa mc)");
    analyze->add_option("--baseline", baseline, "baseline year");
    analyze->add_option("--analysis-year", analysis_year, "analysis year");
    analyze->add_option("--estimator", estimator, "linear | nonparametric");
    analyze->add_option("--reference", reference, "reference method config JSON");

    // plot
    std::string in_csv;
    auto* plot = app.add_subcommand("plot", "Render an audit chart to SVG");
    plot->add_option("kind", kind, "corr-heatmap | rank-bands | sobol-bars | rank-shift-bars")
        ->required();
    plot->add_option("--in", in_csv, "input CSV")->required();
    plot->add_option("--out", out, "output SVG")->required();

    // run
    std::string config;
    auto* run = app.add_subcommand("run", "Execute the full pipeline and audit");
    run->add_option("--config", config, "run config JSON")->required();
    run->add_option("--out", out, "output directory")->required();

    // compare
    std::string run_a, run_b;
    auto* compare = app.add_subcommand("compare", "Compare rankings of two runs");
    compare->add_option("run_a", run_a, "first run directory")->required();
    compare->add_option("run_b", run_b, "second run directory")->required();
    compare->add_option("--out", out, "comparison CSV")->required();

    CLI11_PARSE(app, argc, argv);

    if (impute->parsed()) {
        return finish(ci_impute(data.c_str(), hierarchy.c_str(), out.c_str(), opt(report)));
    }
    if (treat->parsed()) {
        return finish(ci_treat(data.c_str(), mode.c_str(), kmax, out.c_str(), opt(plan)));
    }
    if (normalize->parsed()) {
        return finish(ci_normalize(data.c_str(), opt(population), opt(hierarchy),
                                   method.c_str(), baseline, out.c_str(), opt(params)));
    }
    if (weights->parsed()) {
        return finish(ci_weights(data.c_str(), hierarchy.c_str(), method.c_str(), year,
                                 opt(estimator), out.c_str()));
    }
    if (aggregate->parsed()) {
        return finish(ci_aggregate(data.c_str(), weights_file.c_str(), hierarchy.c_str(),
                                   population.c_str(), opt(levels), opt(geo),
                                   renormalize_regions ? 1 : 0, geometric ? 1 : 0,
                                   opt(normalization), out.c_str()));
    }
    if (analyze->parsed()) {
        std::string options = "{";
        options += "\"iterations\": " + std::to_string(iterations);
        options += ", \"seed\": " + std::to_string(seed);
        options += ", \"bootstrap\": " + std::to_string(bootstrap);
        options += ", \"mode\": \"" + sa_mode + "\"";
        options += ", \"output_level\": \"" + output_level + "\"";
        if (!level.empty()) {
            options += ", \"level\": \"" + level + "\"";
        }
        if (baseline > 0) {
            options += ", \"baseline_year\": " + std::to_string(baseline);
        }
        if (analysis_year > 0) {
            options += ", \"analysis_year\": " + std::to_string(analysis_year);
        }
        if (!estimator.empty()) {
            options += ", \"estimator\": \"" + estimator + "\"";
        }
        if (!reference.empty()) {
            options += ", \"reference_config\": " + reference;
        }
        options += "}";
        return finish(ci_analyze(kind.c_str(), data.c_str(), hierarchy.c_str(),
                                 population.c_str(), options.c_str(), out.c_str(),
                                 opt(aux_out)));
    }
    if (plot->parsed()) {
        return finish(ci_plot(kind.c_str(), in_csv.c_str(), out.c_str()));
    }
    if (run->parsed()) {
        return finish(ci_run(config.c_str(), out.c_str()));
    }
    if (compare->parsed()) {
        return finish(ci_compare(run_a.c_str(), run_b.c_str(), out.c_str()));
    }
    return 0;
}
