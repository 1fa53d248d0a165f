#pragma once

#include "core/panel.hpp"

#include <map>
#include <string>
#include <utility>

namespace compindex {

enum class NormMethod { weighted_zscore, minmax };

std::string to_string(NormMethod m);
NormMethod norm_method_from_string(const std::string& name);

struct ZScoreParams {
    double mu = 0.0;
    double sigma = 0.0;
    int delta = 0;
};

struct MinMaxParams {
    double source_min = 0.0;
    double source_max = 0.0;
    int delta = 0;
};

/// Per-indicator normalization parameters, fitted on the baseline year only.
struct NormalizationParams {
    NormMethod method = NormMethod::weighted_zscore;
    int baseline_year = 0;
    std::pair<double, double> bounds{1.0, 100.0}; // minmax target range
    std::map<std::string, ZScoreParams> zscore;
    std::map<std::string, MinMaxParams> minmax;

    std::string to_json() const;
    static NormalizationParams from_json(const std::string& text);
};

/// Population-weighted baseline moments per the index definition:
/// mu = sum_c w_c y_c, sigma^2 = C/(C-1) sum_c w_c (y_c - mu)^2.
NormalizationParams fit_normalization(const PanelTensor& treated,
                                      const PopulationWeights& population,
                                      const Hierarchy& hierarchy, int baseline_year);

/// Same fit with an explicit polarity map; indicators absent from the map
/// keep delta = 0 (already health-directed).
NormalizationParams fit_normalization(const PanelTensor& treated,
                                      const PopulationWeights& population,
                                      const std::map<std::string, int>& polarity,
                                      int baseline_year);

NormalizationParams fit_minmax(const PanelTensor& treated, const Hierarchy& hierarchy,
                               int baseline_year,
                               std::pair<double, double> bounds = {1.0, 100.0});

NormalizationParams fit_minmax(const PanelTensor& treated,
                               const std::map<std::string, int>& polarity, int baseline_year,
                               std::pair<double, double> bounds = {1.0, 100.0});

/// Applies fitted parameters to every year; polarity makes all outputs
/// health-directed (z negated, min-max reflected within its bounds).
PanelTensor normalize(const PanelTensor& treated, const NormalizationParams& params);

/// Convenience: fit + apply the baseline-anchored min-max map.
PanelTensor normalize_minmax(const PanelTensor& treated, const Hierarchy& hierarchy,
                             int baseline_year,
                             std::pair<double, double> bounds = {1.0, 100.0});

/// Presentation scale: 100 + 10z.
inline double to_index_scale(double z) { return 100.0 + 10.0 * z; }

} // namespace compindex
