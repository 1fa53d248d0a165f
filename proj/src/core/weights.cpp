#include "core/weights.hpp"

#include "core/errors.hpp"
#include "core/factor_analysis.hpp"

#include <json.hpp>

#include <cmath>

namespace compindex {

using nlohmann::json;

std::string to_string(WeightProvenance p) {
    switch (p) {
    case WeightProvenance::equal:
        return "equal";
    case WeightProvenance::fa:
        return "fa";
    case WeightProvenance::pca:
        return "pca";
    case WeightProvenance::optimized:
        return "optimized";
    case WeightProvenance::user:
        return "user";
    }
    return "?";
}

namespace {

double lookup(const std::map<std::string, double>& m, const std::string& id, const char* what) {
    const auto it = m.find(id);
    if (it == m.end()) {
        throw DataError(std::string("missing ") + what + " weight: " + id);
    }
    return it->second;
}

WeightProvenance provenance_from_string(const std::string& name) {
    for (const WeightProvenance p :
         {WeightProvenance::equal, WeightProvenance::fa, WeightProvenance::pca,
          WeightProvenance::optimized, WeightProvenance::user}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    throw ConfigError("unknown weight provenance: " + name);
}

// Stacked (units x years) cross-sections of the given indicators.
Eigen::MatrixXd stacked_matrix(const PanelTensor& z, const std::vector<std::string>& ids) {
    const std::size_t rows = z.unit_count() * z.year_count();
    Eigen::MatrixXd m(rows, ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const int i = z.indicator_index(ids[j]);
        std::size_t r = 0;
        for (std::size_t u = 0; u < z.unit_count(); ++u) {
            for (std::size_t t = 0; t < z.year_count(); ++t) {
                m(r++, j) = z.value(static_cast<int>(u), i, static_cast<int>(t));
            }
        }
    }
    return m;
}

Eigen::MatrixXd year_matrix(const PanelTensor& z, const std::vector<std::string>& ids, int t) {
    Eigen::MatrixXd m(z.unit_count(), ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const int i = z.indicator_index(ids[j]);
        for (std::size_t u = 0; u < z.unit_count(); ++u) {
            m(u, j) = z.value(static_cast<int>(u), i, t);
        }
    }
    return m;
}

} // namespace

double WeightSystem::indicator_weight(const std::string& id) const {
    return lookup(indicator, id, "indicator");
}

double WeightSystem::subdomain_weight(const std::string& id) const {
    return lookup(subdomain, id, "subdomain");
}

double WeightSystem::domain_weight(const std::string& id) const {
    return lookup(domain, id, "domain");
}

double WeightSystem::alpha_subdomain(const Hierarchy& h, const std::string& sub) const {
    double sum = 0.0;
    for (const auto& ind : h.subdomain_indicators.at(sub)) {
        sum += indicator_weight(ind);
    }
    return 1.0 / sum;
}

double WeightSystem::alpha_domain(const Hierarchy& h, const std::string& dom) const {
    double sum = 0.0;
    for (const auto& sub : h.domain_subdomains.at(dom)) {
        sum += subdomain_weight(sub);
    }
    return 1.0 / sum;
}

double WeightSystem::alpha_overall(const Hierarchy& h) const {
    double sum = 0.0;
    for (const auto& dom : h.domains) {
        sum += domain_weight(dom);
    }
    return 1.0 / sum;
}

double WeightSystem::normalized_indicator_weight(const Hierarchy& h,
                                                 const std::string& id) const {
    double sum = 0.0;
    for (const auto& ind : h.subdomain_indicators.at(h.indicator_subdomain.at(id))) {
        sum += indicator_weight(ind);
    }
    return indicator_weight(id) / sum;
}

double WeightSystem::normalized_subdomain_weight(const Hierarchy& h,
                                                 const std::string& id) const {
    double sum = 0.0;
    for (const auto& sub : h.domain_subdomains.at(h.subdomain_domain.at(id))) {
        sum += subdomain_weight(sub);
    }
    return subdomain_weight(id) / sum;
}

double WeightSystem::normalized_domain_weight(const Hierarchy& h, const std::string& id) const {
    double sum = 0.0;
    for (const auto& dom : h.domains) {
        sum += domain_weight(dom);
    }
    return domain_weight(id) / sum;
}

void WeightSystem::validate(const Hierarchy& h) const {
    for (const auto& ind : h.indicators) {
        if (!(indicator_weight(ind) > 0.0)) {
            throw NumericError("indicator weight must be strictly positive: " + ind);
        }
    }
    for (const auto& sub : h.subdomains) {
        if (!(subdomain_weight(sub) > 0.0)) {
            throw NumericError("subdomain weight must be strictly positive: " + sub);
        }
    }
    for (const auto& dom : h.domains) {
        if (!(domain_weight(dom) > 0.0)) {
            throw NumericError("domain weight must be strictly positive: " + dom);
        }
    }
}

WeightSystem equal_weights(const Hierarchy& hierarchy) {
    WeightSystem w;
    w.provenance = WeightProvenance::equal;
    for (const auto& ind : hierarchy.indicators) {
        w.indicator[ind] = 1.0;
    }
    for (const auto& sub : hierarchy.subdomains) {
        w.subdomain[sub] = 1.0;
    }
    for (const auto& dom : hierarchy.domains) {
        w.domain[dom] = 1.0;
    }
    return w;
}

WeightSystem fa_weights(const PanelTensor& z, const Hierarchy& hierarchy) {
    if (z.stage() != Stage::normalized) {
        throw DataError("fa_weights requires a normalized tensor");
    }
    WeightSystem w = equal_weights(hierarchy);
    w.provenance = WeightProvenance::fa;

    for (const auto& sub : hierarchy.subdomains) {
        const auto& ids = hierarchy.subdomain_indicators.at(sub);
        if (ids.size() == 1) {
            w.indicator[ids[0]] = 1.0;
            continue;
        }
        Eigen::MatrixXd corr;
        try {
            corr = correlation_matrix(stacked_matrix(z, ids));
        } catch (const NumericError& e) {
            throw NumericError("fa_weights on subdomain " + sub + ": " + e.what());
        }
        OneFactorFit fit;
        try {
            fit = fit_one_factor(corr);
        } catch (const NumericError& e) {
            throw NumericError("factor analysis failed for subdomain " + sub + ": " + e.what());
        }
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const double loading = std::abs(fit.loadings(static_cast<Eigen::Index>(j)));
            if (!(loading > 1e-12)) {
                throw NumericError("factor loading of " + ids[j] +
                                   " is zero; weights would be degenerate");
            }
            w.indicator[ids[j]] = loading;
        }
    }
    w.validate(hierarchy);
    return w;
}

WeightSystem pca_weights(const PanelTensor& z, const Hierarchy& hierarchy, int year) {
    if (z.stage() != Stage::normalized) {
        throw DataError("pca_weights requires a normalized tensor");
    }
    const int t = z.year_index(year);
    WeightSystem w = equal_weights(hierarchy);
    w.provenance = WeightProvenance::pca;

    for (const auto& sub : hierarchy.subdomains) {
        const auto& ids = hierarchy.subdomain_indicators.at(sub);
        const std::size_t p = ids.size();
        if (p == 1) {
            w.indicator[ids[0]] = 1.0;
            w.variance_explained[sub] = 1.0;
            continue;
        }
        Eigen::MatrixXd corr;
        try {
            corr = correlation_matrix(year_matrix(z, ids, t));
        } catch (const NumericError& e) {
            throw NumericError("pca_weights on subdomain " + sub + ": " + e.what());
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
        if (eig.info() != Eigen::Success) {
            throw NumericError("eigendecomposition failed for subdomain " + sub);
        }
        const Eigen::Index last = static_cast<Eigen::Index>(p) - 1;
        const double lead = eig.eigenvalues()(last);
        const double runner_up = eig.eigenvalues()(last - 1);
        w.variance_explained[sub] = lead / static_cast<double>(p);

        if (lead - runner_up <= 1e-12 * static_cast<double>(p)) {
            // Leading eigenspace is degenerate: any direction inside it is a
            // first component, so take the symmetric one.
            for (const auto& id : ids) {
                w.indicator[id] = 1.0 / static_cast<double>(p);
            }
        } else {
            for (std::size_t j = 0; j < p; ++j) {
                const double loading =
                    std::abs(eig.eigenvectors()(static_cast<Eigen::Index>(j), last));
                if (!(loading > 1e-12)) {
                    throw NumericError("first-component loading of " + ids[j] +
                                       " is zero; weights would be degenerate");
                }
                w.indicator[ids[j]] = loading;
            }
        }
        if (w.variance_explained[sub] < 0.70) {
            w.flagged_subdomains.push_back(sub);
        }
    }
    w.validate(hierarchy);
    return w;
}

std::string WeightSystem::to_json(const Hierarchy& h) const {
    json doc;
    doc["provenance"] = to_string(provenance);

    json inds;
    for (const auto& [id, raw] : indicator) {
        inds[id] = {{"raw", raw}, {"normalized", normalized_indicator_weight(h, id)}};
    }
    doc["indicators"] = inds;

    json subs;
    for (const auto& [id, raw] : subdomain) {
        subs[id] = {{"raw", raw}, {"normalized", normalized_subdomain_weight(h, id)}};
    }
    doc["subdomains"] = subs;

    json doms;
    for (const auto& [id, raw] : domain) {
        doms[id] = {{"raw", raw}, {"normalized", normalized_domain_weight(h, id)}};
    }
    doc["domains"] = doms;

    json alphas;
    for (const auto& sub : h.subdomains) {
        alphas["subdomain"][sub] = alpha_subdomain(h, sub);
    }
    for (const auto& dom : h.domains) {
        alphas["domain"][dom] = alpha_domain(h, dom);
    }
    alphas["overall"] = alpha_overall(h);
    doc["alpha"] = alphas;

    if (provenance == WeightProvenance::pca) {
        doc["variance_explained"] = variance_explained;
        doc["flagged_subdomains"] = flagged_subdomains;
    }
    if (provenance == WeightProvenance::optimized) {
        doc["achieved_importance"] = achieved_importance;
        doc["objective"] = objective;
        doc["no_improvement"] = no_improvement;
        doc["estimator"] = estimator;
    }
    return doc.dump(2) + "\n";
}

WeightSystem WeightSystem::from_json(const std::string& text) {
    json doc = json::parse(text);
    WeightSystem w;
    w.provenance = provenance_from_string(doc.at("provenance").get<std::string>());
    for (const auto& [id, v] : doc.at("indicators").items()) {
        w.indicator[id] = v.at("raw").get<double>();
    }
    for (const auto& [id, v] : doc.at("subdomains").items()) {
        w.subdomain[id] = v.at("raw").get<double>();
    }
    for (const auto& [id, v] : doc.at("domains").items()) {
        w.domain[id] = v.at("raw").get<double>();
    }
    return w;
}

} // namespace compindex
