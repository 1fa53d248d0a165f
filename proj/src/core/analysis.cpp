#include "core/analysis.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/moments.hpp"
#include "core/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace compindex {

using nlohmann::json;

ScreenLevel screen_level_from_string(const std::string& name) {
    if (name == "indicator") {
        return ScreenLevel::indicator;
    }
    if (name == "subdomain") {
        return ScreenLevel::subdomain;
    }
    if (name == "domain") {
        return ScreenLevel::domain;
    }
    if (name == "indicator-x-subdomain") {
        return ScreenLevel::indicator_vs_subdomain;
    }
    throw ConfigError("unknown correlation level: " + name);
}

namespace {

struct Series {
    std::string id;
    std::string group;
    std::vector<double> values;
};

std::vector<double> stacked_indicator(const PanelTensor& z, int i) {
    std::vector<double> out;
    out.reserve(z.unit_count() * z.year_count());
    for (std::size_t u = 0; u < z.unit_count(); ++u) {
        for (std::size_t t = 0; t < z.year_count(); ++t) {
            out.push_back(z.value(static_cast<int>(u), i, static_cast<int>(t)));
        }
    }
    return out;
}

std::vector<double> stacked_column(const ScoreGrid& grid, int c) {
    std::vector<double> out;
    out.reserve(grid.rows.size() * grid.years.size());
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        for (std::size_t t = 0; t < grid.years.size(); ++t) {
            out.push_back(grid.at(static_cast<int>(r), c, static_cast<int>(t)));
        }
    }
    return out;
}

bool has_variance(const std::vector<double>& v) {
    for (std::size_t j = 1; j < v.size(); ++j) {
        if (v[j] != v[0]) {
            return true;
        }
    }
    return false;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        mx += x[j];
        my += y[j];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dx = x[j] - mx;
        const double dy = y[j] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

std::string flag_kind(double rho) {
    if (rho >= 0.9) {
        return "redundant";
    }
    if (rho <= -0.4) {
        return "negative";
    }
    if (rho > 0.3 && rho <= 0.4) {
        return "weak";
    }
    return "";
}

std::vector<Series> indicator_series(const PanelTensor& z, const Hierarchy& hierarchy,
                                     std::vector<std::string>& excluded) {
    std::vector<Series> out;
    for (const auto& sub : hierarchy.subdomains) {
        for (const auto& id : hierarchy.subdomain_indicators.at(sub)) {
            Series s{id, sub, stacked_indicator(z, z.indicator_index(id))};
            if (!has_variance(s.values)) {
                excluded.push_back(id);
                continue;
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Series> grid_series(const ScoreGrid& grid,
                                const std::map<std::string, std::string>& parent,
                                std::vector<std::string>& excluded) {
    std::vector<Series> out;
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
        Series s;
        s.id = grid.columns[c];
        const auto it = parent.find(s.id);
        s.group = it == parent.end() ? "" : it->second;
        s.values = stacked_column(grid, static_cast<int>(c));
        if (!has_variance(s.values)) {
            excluded.push_back(s.id);
            continue;
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

CorrelationScreen correlation_screen(const PanelTensor& z, const Hierarchy& hierarchy,
                                     ScreenLevel level) {
    if (z.missing_count() > 0) {
        throw DataError("correlation screening requires a complete tensor");
    }

    CorrelationScreen screen;
    std::vector<Series> rows, cols;
    bool square = true;

    // Screening is defined on the equal-weight aggregates.
    const WeightSystem weights = equal_weights(hierarchy);

    switch (level) {
    case ScreenLevel::indicator:
        rows = indicator_series(z, hierarchy, screen.excluded);
        break;
    case ScreenLevel::subdomain: {
        const auto agg = aggregate_hierarchy(z, hierarchy, weights);
        rows = grid_series(agg.subdomain, hierarchy.subdomain_domain, screen.excluded);
        break;
    }
    case ScreenLevel::domain: {
        const auto agg = aggregate_hierarchy(z, hierarchy, weights);
        rows = grid_series(agg.domain, {}, screen.excluded);
        break;
    }
    case ScreenLevel::indicator_vs_subdomain: {
        square = false;
        rows = indicator_series(z, hierarchy, screen.excluded);
        const auto agg = aggregate_hierarchy(z, hierarchy, weights);
        cols = grid_series(agg.subdomain, hierarchy.subdomain_domain, screen.excluded);
        break;
    }
    }
    if (square) {
        cols = rows;
    }

    for (const auto& s : rows) {
        screen.row_ids.push_back(s.id);
        screen.row_groups.push_back(s.group);
    }
    for (const auto& s : cols) {
        screen.col_ids.push_back(s.id);
    }

    screen.rho.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            if (square && b < a) {
                screen.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    screen.rho(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a));
                continue;
            }
            const double r = square && a == b ? 1.0 : pearson(rows[a].values, cols[b].values);
            screen.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;

            // Square screens flag distinct pairs once; the cross-level screen
            // flags only foreign pairs (an indicator trivially tracks its own
            // subdomain).
            const bool flaggable = square ? a < b : rows[a].group != cols[b].id;
            if (flaggable) {
                const std::string kind = flag_kind(r);
                if (!kind.empty()) {
                    screen.flags.push_back({rows[a].id, cols[b].id, r, kind});
                }
            }
        }
    }
    return screen;
}

std::string correlation_csv(const CorrelationScreen& screen) {
    csv::Table table;
    table.header = {"id", "group"};
    for (const auto& c : screen.col_ids) {
        table.header.push_back(c);
    }
    for (std::size_t a = 0; a < screen.row_ids.size(); ++a) {
        std::vector<std::string> row{screen.row_ids[a], screen.row_groups[a]};
        for (std::size_t b = 0; b < screen.col_ids.size(); ++b) {
            row.push_back(csv::format_double(
                screen.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
        }
        table.rows.push_back(std::move(row));
    }
    return csv::to_string(table);
}

std::string correlation_flags_json(const CorrelationScreen& screen) {
    json doc;
    json flags = json::array();
    for (const auto& f : screen.flags) {
        flags.push_back({{"a", f.a}, {"b", f.b}, {"rho", f.rho}, {"kind", f.kind}});
    }
    doc["flags"] = flags;
    doc["excluded_zero_variance"] = screen.excluded;
    doc["bands"] = {{"redundant", "rho >= 0.9"},
                    {"negative", "rho <= -0.4"},
                    {"weak", "0.3 < rho <= 0.4"}};
    return doc.dump(2) + "\n";
}

OutputSelector output_selector_from_string(const std::string& text) {
    OutputSelector out;
    if (text == "overall") {
        return out;
    }
    if (text.rfind("domain:", 0) == 0) {
        out.overall = false;
        out.domain_id = text.substr(7);
        if (out.domain_id.empty()) {
            throw ConfigError("empty domain in output selector");
        }
        return out;
    }
    throw ConfigError("output selector must be 'overall' or 'domain:<name>'");
}

namespace {

/// Rank of every unit under every method-space configuration, the shared
/// model behind both analyses. Configurations are indexed by the mixed-radix
/// encoding of their factor levels.
struct RankTable {
    std::vector<std::vector<int>> ranks; // config -> unit -> rank
    std::vector<std::string> units;

    static int encode(std::span<const int> levels) {
        int code = 0;
        for (std::size_t f = 0; f < levels.size(); ++f) {
            code = code * MethodSpace::cardinalities[f] + levels[f];
        }
        return code;
    }
};

RankTable build_rank_table(PipelineEvaluator& evaluator, const OutputSelector& output) {
    RankTable table;
    table.ranks.resize(MethodSpace::size);
    int domain_index = -1;
    if (!output.overall) {
        const auto& domains = evaluator.hierarchy().domains;
        const auto it = std::find(domains.begin(), domains.end(), output.domain_id);
        if (it == domains.end()) {
            throw ConfigError("unknown domain in output selector: " + output.domain_id);
        }
        domain_index = static_cast<int>(it - domains.begin());
    }
    for (const auto& config : MethodSpace::all()) {
        const auto levels = MethodSpace::to_levels(config);
        const PipelineOutput& result = evaluator.evaluate(config);
        if (table.units.empty()) {
            table.units = result.units;
        }
        table.ranks[static_cast<std::size_t>(RankTable::encode(levels))] =
            output.overall ? result.ranks
                           : result.domain_ranks[static_cast<std::size_t>(domain_index)];
    }
    return table;
}

SaFactor undefined_factor(const std::string& name) {
    SaFactor f;
    f.name = name;
    f.defined = false;
    return f;
}

} // namespace

SaResult sobol_sa(PipelineEvaluator& evaluator, const SaOptions& options) {
    const auto table = build_rank_table(evaluator, options.output);
    const std::size_t n_units = table.units.size();
    constexpr int k = 4;
    const std::span<const int> cards(MethodSpace::cardinalities.data(), k);

    SaResult result;
    result.mode = options.mode;
    result.units = table.units;
    result.per_unit.resize(n_units);

    if (options.mode == SaMode::exact) {
        result.n_evaluations = MethodSpace::size;
        std::vector<double> sum_first(k, 0.0), sum_total(k, 0.0);
        for (std::size_t u = 0; u < n_units; ++u) {
            const auto exact = exact_sobol(cards, [&](std::span<const int> levels) {
                return static_cast<double>(
                    table.ranks[static_cast<std::size_t>(RankTable::encode(levels))][u]);
            });
            auto& per_unit = result.per_unit[u];
            double anova_sum = 0.0;
            for (const double c : exact.components) {
                anova_sum += c;
            }
            if (exact.defined) {
                result.max_anova_residual =
                    std::max(result.max_anova_residual, std::abs(anova_sum - exact.variance));
            }
            for (int j = 0; j < k; ++j) {
                SaFactor f = undefined_factor(MethodSpace::factor_names[j]);
                if (exact.defined) {
                    f.defined = true;
                    f.s_first = exact.s_first[j];
                    f.s_total = exact.s_total[j];
                    f.ci_first_lo = f.ci_first_hi = f.s_first;
                    f.ci_total_lo = f.ci_total_hi = f.s_total;
                    sum_first[j] += f.s_first;
                    sum_total[j] += f.s_total;
                }
                per_unit.push_back(std::move(f));
            }
            if (exact.defined) {
                ++result.units_defined;
            }
        }
        for (int j = 0; j < k; ++j) {
            SaFactor f = undefined_factor(MethodSpace::factor_names[j]);
            if (result.units_defined > 0) {
                f.defined = true;
                f.s_first = sum_first[j] / result.units_defined;
                f.s_total = sum_total[j] / result.units_defined;
                f.ci_first_lo = f.ci_first_hi = f.s_first;
                f.ci_total_lo = f.ci_total_hi = f.s_total;
            }
            result.factors.push_back(std::move(f));
        }
        return result;
    }

    // Monte Carlo mode: one shared Saltelli design; per-unit model values are
    // rank-table lookups through precomputed configuration codes.
    const std::size_t n = static_cast<std::size_t>(options.iterations);
    result.n_evaluations = options.iterations * (k + 2);
    const auto design = saltelli_design(cards, options.iterations, options.seed);

    std::vector<int> code_a(n), code_b(n);
    std::vector<std::vector<int>> code_ab(k, std::vector<int>(n));
    std::vector<int> point(k);
    for (std::size_t r = 0; r < n; ++r) {
        code_a[r] = RankTable::encode(design.a[r]);
        code_b[r] = RankTable::encode(design.b[r]);
        for (int j = 0; j < k; ++j) {
            point = design.a[r];
            point[j] = design.b[r][j];
            code_ab[static_cast<std::size_t>(j)][r] = RankTable::encode(point);
        }
    }

    std::vector<std::size_t> all_rows(n);
    for (std::size_t r = 0; r < n; ++r) {
        all_rows[r] = r;
    }
    const auto resamples =
        options.bootstrap > 0 ? bootstrap_rows(n, options.bootstrap, options.seed)
                              : std::vector<std::vector<std::size_t>>{};

    // replicate x factor accumulators for the unit-averaged indices
    const std::size_t n_boot = resamples.size();
    std::vector<std::vector<double>> boot_first(n_boot, std::vector<double>(k, 0.0));
    std::vector<std::vector<double>> boot_total(n_boot, std::vector<double>(k, 0.0));
    std::vector<int> boot_defined(n_boot, 0);
    std::vector<double> sum_first(k, 0.0), sum_total(k, 0.0);

    std::vector<double> f_a(n), f_b(n), f_ab(n);
    for (std::size_t u = 0; u < n_units; ++u) {
        for (std::size_t r = 0; r < n; ++r) {
            f_a[r] = table.ranks[static_cast<std::size_t>(code_a[r])][u];
            f_b[r] = table.ranks[static_cast<std::size_t>(code_b[r])][u];
        }
        bool unit_defined = false;
        auto& per_unit = result.per_unit[u];
        std::vector<std::vector<double>> unit_boot_first(k), unit_boot_total(k);
        for (int j = 0; j < k; ++j) {
            const auto& codes = code_ab[static_cast<std::size_t>(j)];
            for (std::size_t r = 0; r < n; ++r) {
                f_ab[r] = table.ranks[static_cast<std::size_t>(codes[r])][u];
            }
            const auto est = saltelli_jansen(f_a, f_b, f_ab, all_rows);
            SaFactor f = undefined_factor(MethodSpace::factor_names[j]);
            if (est.defined) {
                f.defined = true;
                f.s_first = est.s_first;
                f.s_total = est.s_total;
                unit_defined = true;
                sum_first[j] += est.s_first;
                sum_total[j] += est.s_total;
            }
            per_unit.push_back(std::move(f));

            for (std::size_t b = 0; b < n_boot; ++b) {
                const auto rep = saltelli_jansen(f_a, f_b, f_ab, resamples[b]);
                boot_first[b][j] += rep.s_first;
                boot_total[b][j] += rep.s_total;
            }
        }
        if (unit_defined) {
            ++result.units_defined;
            for (std::size_t b = 0; b < n_boot; ++b) {
                ++boot_defined[b];
            }
        }
    }

    for (int j = 0; j < k; ++j) {
        SaFactor f = undefined_factor(MethodSpace::factor_names[j]);
        if (result.units_defined > 0) {
            f.defined = true;
            f.s_first = sum_first[j] / result.units_defined;
            f.s_total = sum_total[j] / result.units_defined;
            if (n_boot > 0) {
                std::vector<double> rep_first(n_boot), rep_total(n_boot);
                for (std::size_t b = 0; b < n_boot; ++b) {
                    const double m = static_cast<double>(std::max(boot_defined[b], 1));
                    rep_first[b] = boot_first[b][j] / m;
                    rep_total[b] = boot_total[b][j] / m;
                }
                std::sort(rep_first.begin(), rep_first.end());
                std::sort(rep_total.begin(), rep_total.end());
                f.ci_first_lo = quantile(rep_first, 0.025);
                f.ci_first_hi = quantile(rep_first, 0.975);
                f.ci_total_lo = quantile(rep_total, 0.025);
                f.ci_total_hi = quantile(rep_total, 0.975);
            }
        }
        result.factors.push_back(std::move(f));
    }
    return result;
}

std::string sa_csv(const SaResult& result) {
    csv::Table table;
    table.header = {"factor",      "s_first",     "s_total",    "ci_lo",       "ci_hi",
                    "ci_lo_total", "ci_hi_total", "defined",    "n_evaluations"};
    for (const auto& f : result.factors) {
        table.rows.push_back({f.name,
                              f.defined ? csv::format_double(f.s_first) : "",
                              f.defined ? csv::format_double(f.s_total) : "",
                              f.defined ? csv::format_double(f.ci_first_lo) : "",
                              f.defined ? csv::format_double(f.ci_first_hi) : "",
                              f.defined ? csv::format_double(f.ci_total_lo) : "",
                              f.defined ? csv::format_double(f.ci_total_hi) : "",
                              f.defined ? "true" : "false",
                              std::to_string(result.n_evaluations)});
    }
    return csv::to_string(table);
}

std::string sa_per_unit_csv(const SaResult& result) {
    csv::Table table;
    table.header = {"unit", "factor", "s_first", "s_total", "defined"};
    for (std::size_t u = 0; u < result.units.size(); ++u) {
        for (const auto& f : result.per_unit[u]) {
            table.rows.push_back({result.units[u], f.name,
                                  f.defined ? csv::format_double(f.s_first) : "",
                                  f.defined ? csv::format_double(f.s_total) : "",
                                  f.defined ? "true" : "false"});
        }
    }
    return csv::to_string(table);
}

namespace {

/// Order statistic (0-based position) of a rank histogram.
double order_statistic(const std::vector<std::int64_t>& counts, std::int64_t position) {
    std::int64_t cum = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) {
        cum += counts[r];
        if (cum > position) {
            return static_cast<double>(r + 1);
        }
    }
    return static_cast<double>(counts.size());
}

double histogram_quantile(const std::vector<std::int64_t>& counts, std::int64_t total, double q) {
    const double h = q * static_cast<double>(total - 1);
    const std::int64_t lo = static_cast<std::int64_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    const double a = order_statistic(counts, lo);
    if (frac == 0.0) {
        return a;
    }
    const double b = order_statistic(counts, lo + 1);
    return a + frac * (b - a);
}

} // namespace

std::vector<RankBand> uncertainty_bands(PipelineEvaluator& evaluator, int iterations,
                                        std::uint64_t seed, const MethodConfig& reference) {
    if (iterations < 1) {
        throw ConfigError("uncertainty_bands needs at least one iteration");
    }
    const OutputSelector overall;
    const auto table = build_rank_table(evaluator, overall);
    const std::size_t n_units = table.units.size();

    std::vector<std::vector<std::int64_t>> histogram(n_units,
                                                     std::vector<std::int64_t>(n_units, 0));
    constexpr int k = 4;
    for (int it = 0; it < iterations; ++it) {
        Rng rng(seed, static_cast<std::uint64_t>(it));
        std::array<int, 4> levels{};
        for (int f = 0; f < k; ++f) {
            levels[f] = static_cast<int>(
                rng.uniform_int(static_cast<std::uint32_t>(MethodSpace::cardinalities[f])));
        }
        const auto& ranks = table.ranks[static_cast<std::size_t>(RankTable::encode(levels))];
        for (std::size_t u = 0; u < n_units; ++u) {
            ++histogram[u][static_cast<std::size_t>(ranks[u] - 1)];
        }
    }

    const auto& reference_ranks = evaluator.evaluate(reference).ranks;
    std::vector<RankBand> bands(n_units);
    for (std::size_t u = 0; u < n_units; ++u) {
        bands[u].unit = table.units[u];
        bands[u].reference = reference_ranks[u];
        bands[u].median = histogram_quantile(histogram[u], iterations, 0.5);
        bands[u].p5 = histogram_quantile(histogram[u], iterations, 0.05);
        bands[u].p95 = histogram_quantile(histogram[u], iterations, 0.95);
    }
    return bands;
}

std::string bands_csv(const std::vector<RankBand>& bands) {
    csv::Table table;
    table.header = {"unit", "reference", "median", "p5", "p95"};
    for (const auto& b : bands) {
        table.rows.push_back({b.unit, std::to_string(b.reference), csv::format_double(b.median),
                              csv::format_double(b.p5), csv::format_double(b.p95)});
    }
    return csv::to_string(table);
}

std::vector<RankShift> rank_shift_removal(const PanelTensor& raw, const Hierarchy& hierarchy,
                                          const PopulationWeights& population,
                                          const MethodConfig& config, RemovalLevel level,
                                          const PipelineOptions& options) {
    const PipelineOutput reference = run_pipeline(config, raw, hierarchy, population, options);
    const std::size_t n_units = reference.units.size();

    const std::vector<std::string>& nodes =
        level == RemovalLevel::indicator ? hierarchy.indicators : hierarchy.subdomains;

    std::vector<RankShift> shifts;
    shifts.reserve(nodes.size());
    for (const auto& node : nodes) {
        const Hierarchy reduced = level == RemovalLevel::indicator
                                      ? hierarchy.without_indicator(node)
                                      : hierarchy.without_subdomain(node);
        const PanelTensor sub = raw.subset_indicators(reduced.indicators);

        PipelineOptions reduced_options = options;
        if (!reduced_options.targets.empty() &&
            reduced_options.targets.size() != reduced.domains.size()) {
            reduced_options.targets.clear(); // fall back to equal importances
        }
        const PipelineOutput result =
            run_pipeline(config, sub, reduced, population, reduced_options);

        double shift = 0.0;
        for (std::size_t u = 0; u < n_units; ++u) {
            shift += std::abs(result.ranks[u] - reference.ranks[u]);
        }
        shifts.push_back({node, shift / static_cast<double>(n_units)});
    }
    return shifts;
}

std::string rank_shift_csv(const std::vector<RankShift>& shifts) {
    csv::Table table;
    table.header = {"node", "mean_abs_rank_shift"};
    for (const auto& s : shifts) {
        table.rows.push_back({s.node, csv::format_double(s.mean_abs_shift)});
    }
    return csv::to_string(table);
}

} // namespace compindex
