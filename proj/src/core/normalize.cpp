#include "core/normalize.hpp"

#include "core/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace compindex {

using nlohmann::json;

std::string to_string(NormMethod m) {
    return m == NormMethod::weighted_zscore ? "weighted-zscore" : "minmax";
}

NormMethod norm_method_from_string(const std::string& name) {
    if (name == "weighted-zscore" || name == "zscore") {
        return NormMethod::weighted_zscore;
    }
    if (name == "minmax" || name == "min-max") {
        return NormMethod::minmax;
    }
    throw ConfigError("unknown normalization method: " + name);
}

namespace {

int polarity_of(const std::map<std::string, int>& polarity, const std::string& indicator) {
    const auto it = polarity.find(indicator);
    if (it == polarity.end()) {
        return 0;
    }
    if (it->second != 0 && it->second != 1) {
        throw DataError("polarity of " + indicator + " must be 0 or 1");
    }
    return it->second;
}

void require_complete(const PanelTensor& tensor) {
    if (tensor.missing_count() > 0) {
        throw DataError("normalization requires a complete tensor");
    }
}

} // namespace

NormalizationParams fit_normalization(const PanelTensor& treated,
                                      const PopulationWeights& population,
                                      const Hierarchy& hierarchy, int baseline_year) {
    for (const auto& id : treated.indicators()) {
        if (!hierarchy.polarity.count(id)) {
            throw DataError("indicator missing polarity: " + id);
        }
    }
    return fit_normalization(treated, population, hierarchy.polarity, baseline_year);
}

NormalizationParams fit_normalization(const PanelTensor& treated,
                                      const PopulationWeights& population,
                                      const std::map<std::string, int>& polarity,
                                      int baseline_year) {
    require_complete(treated);
    const int t0 = treated.year_index(baseline_year);
    const std::size_t n_units = treated.unit_count();
    if (n_units < 2) {
        throw DataError("weighted z-score normalization needs at least 2 units");
    }
    if (population.units != treated.units()) {
        throw DataError("population weights do not match the tensor's units");
    }
    const auto pyit =
        std::lower_bound(population.years.begin(), population.years.end(), baseline_year);
    if (pyit == population.years.end() || *pyit != baseline_year) {
        throw DataError("population weights missing baseline year " +
                        std::to_string(baseline_year));
    }
    const int pt0 = static_cast<int>(pyit - population.years.begin());

    NormalizationParams params;
    params.method = NormMethod::weighted_zscore;
    params.baseline_year = baseline_year;

    const double correction =
        static_cast<double>(n_units) / (static_cast<double>(n_units) - 1.0);

    for (std::size_t i = 0; i < treated.indicator_count(); ++i) {
        const std::string& id = treated.indicators()[i];
        double mu = 0.0;
        for (std::size_t u = 0; u < n_units; ++u) {
            mu += population.at(static_cast<int>(u), pt0) *
                  treated.value(static_cast<int>(u), static_cast<int>(i), t0);
        }
        double var = 0.0;
        for (std::size_t u = 0; u < n_units; ++u) {
            const double d = treated.value(static_cast<int>(u), static_cast<int>(i), t0) - mu;
            var += population.at(static_cast<int>(u), pt0) * d * d;
        }
        var *= correction;
        if (!(var > 0.0)) {
            throw NumericError("degenerate indicator at baseline (zero variance): " + id);
        }
        params.zscore[id] = ZScoreParams{mu, std::sqrt(var), polarity_of(polarity, id)};
    }
    return params;
}

NormalizationParams fit_minmax(const PanelTensor& treated, const Hierarchy& hierarchy,
                               int baseline_year, std::pair<double, double> bounds) {
    for (const auto& id : treated.indicators()) {
        if (!hierarchy.polarity.count(id)) {
            throw DataError("indicator missing polarity: " + id);
        }
    }
    return fit_minmax(treated, hierarchy.polarity, baseline_year, bounds);
}

NormalizationParams fit_minmax(const PanelTensor& treated,
                               const std::map<std::string, int>& polarity, int baseline_year,
                               std::pair<double, double> bounds) {
    require_complete(treated);
    if (!(bounds.second > bounds.first)) {
        throw ConfigError("min-max bounds must satisfy lo < hi");
    }
    const int t0 = treated.year_index(baseline_year);

    NormalizationParams params;
    params.method = NormMethod::minmax;
    params.baseline_year = baseline_year;
    params.bounds = bounds;

    for (std::size_t i = 0; i < treated.indicator_count(); ++i) {
        const std::string& id = treated.indicators()[i];
        double lo = treated.value(0, static_cast<int>(i), t0);
        double hi = lo;
        for (std::size_t u = 1; u < treated.unit_count(); ++u) {
            const double v = treated.value(static_cast<int>(u), static_cast<int>(i), t0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) {
            throw NumericError("degenerate indicator at baseline (min = max): " + id);
        }
        params.minmax[id] = MinMaxParams{lo, hi, polarity_of(polarity, id)};
    }
    return params;
}

PanelTensor normalize(const PanelTensor& treated, const NormalizationParams& params) {
    require_complete(treated);
    PanelTensor out = treated;

    for (std::size_t i = 0; i < treated.indicator_count(); ++i) {
        const std::string& id = treated.indicators()[i];
        if (params.method == NormMethod::weighted_zscore) {
            const auto it = params.zscore.find(id);
            if (it == params.zscore.end()) {
                throw DataError("normalization parameters missing indicator: " + id);
            }
            const auto& p = it->second;
            const double sign = p.delta == 0 ? 1.0 : -1.0;
            for (std::size_t u = 0; u < treated.unit_count(); ++u) {
                for (std::size_t t = 0; t < treated.year_count(); ++t) {
                    const double y =
                        treated.value(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t));
                    out.set(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t),
                            sign * (y - p.mu) / p.sigma);
                }
            }
        } else {
            const auto it = params.minmax.find(id);
            if (it == params.minmax.end()) {
                throw DataError("normalization parameters missing indicator: " + id);
            }
            const auto& p = it->second;
            const double lo = params.bounds.first;
            const double hi = params.bounds.second;
            const double scale = (hi - lo) / (p.source_max - p.source_min);
            for (std::size_t u = 0; u < treated.unit_count(); ++u) {
                for (std::size_t t = 0; t < treated.year_count(); ++t) {
                    const double y =
                        treated.value(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t));
                    double v = lo + scale * (y - p.source_min);
                    if (p.delta == 1) {
                        v = (lo + hi) - v; // reflection keeps baseline data in bounds
                    }
                    out.set(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t), v);
                }
            }
        }
    }

    out.set_stage(Stage::normalized);
    return out;
}

PanelTensor normalize_minmax(const PanelTensor& treated, const Hierarchy& hierarchy,
                             int baseline_year, std::pair<double, double> bounds) {
    return normalize(treated, fit_minmax(treated, hierarchy, baseline_year, bounds));
}

std::string NormalizationParams::to_json() const {
    json doc;
    doc["method"] = compindex::to_string(method);
    doc["baseline_year"] = baseline_year;
    if (method == NormMethod::minmax) {
        doc["bounds"] = {bounds.first, bounds.second};
        json inds;
        for (const auto& [id, p] : minmax) {
            inds[id] = {{"min", p.source_min}, {"max", p.source_max}, {"delta", p.delta}};
        }
        doc["indicators"] = inds;
    } else {
        json inds;
        for (const auto& [id, p] : zscore) {
            inds[id] = {{"mu", p.mu}, {"sigma", p.sigma}, {"delta", p.delta}};
        }
        doc["indicators"] = inds;
    }
    return doc.dump(2) + "\n";
}

NormalizationParams NormalizationParams::from_json(const std::string& text) {
    json doc = json::parse(text);
    NormalizationParams params;
    params.method = norm_method_from_string(doc.at("method").get<std::string>());
    params.baseline_year = doc.at("baseline_year").get<int>();
    if (params.method == NormMethod::minmax) {
        params.bounds = {doc.at("bounds")[0].get<double>(), doc.at("bounds")[1].get<double>()};
        for (const auto& [id, p] : doc.at("indicators").items()) {
            params.minmax[id] = MinMaxParams{p.at("min").get<double>(), p.at("max").get<double>(),
                                             p.at("delta").get<int>()};
        }
    } else {
        for (const auto& [id, p] : doc.at("indicators").items()) {
            params.zscore[id] = ZScoreParams{p.at("mu").get<double>(), p.at("sigma").get<double>(),
                                             p.at("delta").get<int>()};
        }
    }
    return params;
}

} // namespace compindex
