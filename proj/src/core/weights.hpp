#pragma once

#include "core/panel.hpp"

#include <map>
#include <string>
#include <vector>

namespace compindex {

enum class WeightProvenance { equal, fa, pca, optimized, user };

std::string to_string(WeightProvenance p);

/// Raw weights at the three hierarchy levels. The normalisation constants
/// alpha = 1/sum(weights in group) are derived, making every aggregation a
/// weighted average.
struct WeightSystem {
    std::map<std::string, double> indicator;
    std::map<std::string, double> subdomain;
    std::map<std::string, double> domain;
    WeightProvenance provenance = WeightProvenance::equal;

    // Optional per-method metadata carried into weights.json.
    std::map<std::string, double> variance_explained; // pca, per subdomain
    std::vector<std::string> flagged_subdomains;      // pca, first component < 70%
    std::map<std::string, double> achieved_importance; // optimized
    double objective = 0.0;                            // optimized
    bool no_improvement = false;                       // optimized
    std::string estimator;                             // optimized

    double indicator_weight(const std::string& id) const;
    double subdomain_weight(const std::string& id) const;
    double domain_weight(const std::string& id) const;

    double alpha_subdomain(const Hierarchy& h, const std::string& sub) const;
    double alpha_domain(const Hierarchy& h, const std::string& dom) const;
    double alpha_overall(const Hierarchy& h) const;

    /// Effective (sum-to-one) weights, computed as raw / group sum so that
    /// e.g. loadings (0.5, 0.75) come out as exactly (0.4, 0.6).
    double normalized_indicator_weight(const Hierarchy& h, const std::string& id) const;
    double normalized_subdomain_weight(const Hierarchy& h, const std::string& id) const;
    double normalized_domain_weight(const Hierarchy& h, const std::string& id) const;

    /// Checks positivity and coverage of every hierarchy node.
    void validate(const Hierarchy& h) const;

    std::string to_json(const Hierarchy& h) const;
    static WeightSystem from_json(const std::string& text);
};

WeightSystem equal_weights(const Hierarchy& hierarchy);

/// One-factor ML loadings per subdomain, in absolute value, fitted to the
/// correlation of the (units x years) stacked z-scores. Single-indicator
/// subdomains get weight 1.
WeightSystem fa_weights(const PanelTensor& z, const Hierarchy& hierarchy);

/// First-component PCA loadings per subdomain on one year's cross-section,
/// in absolute value; reports the variance explained by the first component
/// and flags subdomains below the 70% recommendation (weights are still
/// assigned).
WeightSystem pca_weights(const PanelTensor& z, const Hierarchy& hierarchy, int year);

} // namespace compindex
