#include "core/pipeline.hpp"

#include "core/errors.hpp"
#include "core/impute.hpp"
#include "core/treatment.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace compindex {

const std::array<const char*, 4> MethodSpace::factor_names = {
    "winsorization", "normalization", "indicator-weights", "domain-weights"};

std::string MethodConfig::label() const {
    std::ostringstream out;
    out << "w" << winsor_level << "/" << to_string(normalization) << "/"
        << (indicator_weights == IndicatorWeighting::equal ? "equal" : "pca") << "/"
        << (domain_weights == DomainWeighting::equal ? "equal" : "optimized");
    return out.str();
}

MethodConfig MethodSpace::from_levels(std::span<const int> levels) {
    if (levels.size() != 4) {
        throw ConfigError("method-space point needs 4 factor levels");
    }
    for (std::size_t f = 0; f < 4; ++f) {
        if (levels[f] < 0 || levels[f] >= cardinalities[f]) {
            throw ConfigError("factor level out of range for " +
                              std::string(factor_names[f]));
        }
    }
    MethodConfig c;
    c.winsor_level = winsor_levels[static_cast<std::size_t>(levels[0])];
    c.normalization = levels[1] == 0 ? NormMethod::weighted_zscore : NormMethod::minmax;
    c.indicator_weights = levels[2] == 0 ? IndicatorWeighting::equal : IndicatorWeighting::pca;
    c.domain_weights = levels[3] == 0 ? DomainWeighting::equal : DomainWeighting::optimized;
    return c;
}

std::array<int, 4> MethodSpace::to_levels(const MethodConfig& config) {
    std::array<int, 4> levels{};
    const auto it =
        std::find(winsor_levels.begin(), winsor_levels.end(), config.winsor_level);
    if (it == winsor_levels.end()) {
        throw ConfigError("winsorization level must be one of 2, 5, 10");
    }
    levels[0] = static_cast<int>(it - winsor_levels.begin());
    levels[1] = config.normalization == NormMethod::weighted_zscore ? 0 : 1;
    levels[2] = config.indicator_weights == IndicatorWeighting::equal ? 0 : 1;
    levels[3] = config.domain_weights == DomainWeighting::equal ? 0 : 1;
    return levels;
}

std::vector<MethodConfig> MethodSpace::all() {
    std::vector<MethodConfig> out;
    out.reserve(size);
    for (int a = 0; a < cardinalities[0]; ++a) {
        for (int b = 0; b < cardinalities[1]; ++b) {
            for (int c = 0; c < cardinalities[2]; ++c) {
                for (int d = 0; d < cardinalities[3]; ++d) {
                    const std::array<int, 4> levels{a, b, c, d};
                    out.push_back(from_levels(levels));
                }
            }
        }
    }
    return out;
}

std::vector<int> rank_ascending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    std::vector<int> ranks(values.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        ranks[order[pos]] = static_cast<int>(pos) + 1;
    }
    return ranks;
}

struct PipelineEvaluator::Impl {
    const PanelTensor raw;
    const Hierarchy hierarchy;
    const PopulationWeights population;
    PipelineOptions opts;

    std::optional<PanelTensor> imputed;
    std::map<int, PanelTensor> treated;                      // by winsor level
    std::map<std::pair<int, int>, PanelTensor> normalized;   // (level, method)
    std::map<std::array<int, 3>, WeightSystem> indicator_ws; // (level, method, iw)
    std::map<std::array<int, 3>, OptimizedWeights> optimized; // upstream combo
    std::map<std::array<int, 4>, PipelineOutput> outputs;

    Impl(const PanelTensor& raw_, const Hierarchy& h, const PopulationWeights& p,
         PipelineOptions o)
        : raw(raw_), hierarchy(h), population(p), opts(std::move(o)) {
        if (opts.baseline_year == 0) {
            opts.baseline_year = raw.years().front();
        }
        if (opts.analysis_year == 0) {
            opts.analysis_year = opts.baseline_year;
        }
        if (opts.targets.empty()) {
            opts.targets.assign(hierarchy.domains.size(),
                                1.0 / static_cast<double>(hierarchy.domains.size()));
        }
    }

    const PanelTensor& get_imputed() {
        if (!imputed) {
            if (raw.stage() == Stage::raw) {
                imputed = impute(raw, hierarchy, classify_missing(raw));
            } else {
                imputed = raw;
            }
        }
        return *imputed;
    }

    const PanelTensor& get_treated(int level) {
        auto it = treated.find(level);
        if (it == treated.end()) {
            auto result = treat(get_imputed(), TreatmentMode::modified, level);
            it = treated.emplace(level, std::move(result.tensor)).first;
        }
        return it->second;
    }

    const PanelTensor& get_normalized(int level, NormMethod method) {
        const auto key = std::make_pair(level, static_cast<int>(method));
        auto it = normalized.find(key);
        if (it == normalized.end()) {
            const PanelTensor& t = get_treated(level);
            NormalizationParams params =
                method == NormMethod::weighted_zscore
                    ? fit_normalization(t, population, hierarchy, opts.baseline_year)
                    : fit_minmax(t, hierarchy, opts.baseline_year);
            it = normalized.emplace(key, normalize(t, params)).first;
        }
        return it->second;
    }

    const WeightSystem& get_indicator_weights(int level, NormMethod method,
                                              IndicatorWeighting iw) {
        const std::array<int, 3> key{level, static_cast<int>(method), static_cast<int>(iw)};
        auto it = indicator_ws.find(key);
        if (it == indicator_ws.end()) {
            WeightSystem w = iw == IndicatorWeighting::equal
                                 ? equal_weights(hierarchy)
                                 : pca_weights(get_normalized(level, method), hierarchy,
                                               opts.baseline_year);
            it = indicator_ws.emplace(key, std::move(w)).first;
        }
        return it->second;
    }

    const PipelineOutput& evaluate(const MethodConfig& config) {
        const auto levels = MethodSpace::to_levels(config);
        auto it = outputs.find(levels);
        if (it != outputs.end()) {
            return it->second;
        }

        const PanelTensor& z = get_normalized(config.winsor_level, config.normalization);
        WeightSystem weights =
            get_indicator_weights(config.winsor_level, config.normalization,
                                  config.indicator_weights);

        const int t = z.year_index(opts.analysis_year);
        const std::size_t n_units = z.unit_count();
        const std::size_t n_domains = hierarchy.domains.size();

        // Domain scores under the current indicator/subdomain weights; the
        // optimized domain weights are fitted against these.
        HierarchyAggregates aggregates = aggregate_hierarchy(z, hierarchy, weights);
        Eigen::MatrixXd domain_scores(n_units, n_domains);
        for (std::size_t u = 0; u < n_units; ++u) {
            for (std::size_t d = 0; d < n_domains; ++d) {
                domain_scores(u, d) =
                    aggregates.domain.at(static_cast<int>(u), static_cast<int>(d), t);
            }
        }

        if (config.domain_weights == DomainWeighting::optimized) {
            const std::array<int, 3> key{config.winsor_level,
                                         static_cast<int>(config.normalization),
                                         static_cast<int>(config.indicator_weights)};
            auto oit = optimized.find(key);
            if (oit == optimized.end()) {
                oit = optimized
                          .emplace(key, optimize_weights(domain_scores, opts.targets,
                                                         opts.estimator, opts.seed))
                          .first;
            }
            const OptimizedWeights& ow = oit->second;
            for (std::size_t d = 0; d < n_domains; ++d) {
                weights.domain[hierarchy.domains[d]] = ow.weights[d];
            }
            weights.provenance = WeightProvenance::optimized;
            weights.objective = ow.objective;
            weights.no_improvement = ow.no_improvement;
            weights.estimator = to_string(opts.estimator);
            for (std::size_t d = 0; d < n_domains; ++d) {
                weights.achieved_importance[hierarchy.domains[d]] = ow.achieved[d];
            }
            // Re-aggregate the domain -> overall step with the new weights.
            aggregates = aggregate_hierarchy(z, hierarchy, weights);
        }

        PipelineOutput out;
        out.units = z.units();
        out.domain_ids = hierarchy.domains;
        out.domain_scores = std::move(domain_scores);
        out.overall.resize(n_units);
        for (std::size_t u = 0; u < n_units; ++u) {
            out.overall[u] = aggregates.overall.at(static_cast<int>(u), 0, t);
        }
        out.ranks = rank_ascending(out.overall);
        out.domain_ranks.resize(n_domains);
        for (std::size_t d = 0; d < n_domains; ++d) {
            std::vector<double> column(n_units);
            for (std::size_t u = 0; u < n_units; ++u) {
                column[u] = out.domain_scores(u, d);
            }
            out.domain_ranks[d] = rank_ascending(column);
        }
        out.weights = std::move(weights);
        out.aggregates = std::move(aggregates);

        return outputs.emplace(levels, std::move(out)).first->second;
    }
};

PipelineEvaluator::PipelineEvaluator(const PanelTensor& raw, const Hierarchy& hierarchy,
                                     const PopulationWeights& population,
                                     PipelineOptions options)
    : impl_(std::make_unique<Impl>(raw, hierarchy, population, std::move(options))) {}

PipelineEvaluator::~PipelineEvaluator() = default;

const PipelineOutput& PipelineEvaluator::evaluate(const MethodConfig& config) {
    return impl_->evaluate(config);
}

const PipelineOptions& PipelineEvaluator::options() const { return impl_->opts; }

const Hierarchy& PipelineEvaluator::hierarchy() const { return impl_->hierarchy; }

PipelineOutput run_pipeline(const MethodConfig& config, const PanelTensor& raw,
                            const Hierarchy& hierarchy, const PopulationWeights& population,
                            const PipelineOptions& options) {
    PipelineEvaluator evaluator(raw, hierarchy, population, options);
    return evaluator.evaluate(config);
}

} // namespace compindex
