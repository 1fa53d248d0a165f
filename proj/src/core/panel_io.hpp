#pragma once

#include "core/panel.hpp"

#include <filesystem>
#include <string>

namespace compindex {

struct Dataset {
    PanelTensor tensor;
    Hierarchy hierarchy;
    PopulationWeights population;
};

/// Loads and cross-validates the three input files. The tensor comes back
/// tagged raw with missing cells preserved.
Dataset load_dataset(const std::filesystem::path& data_csv,
                     const std::filesystem::path& hierarchy_json,
                     const std::filesystem::path& population_csv);

/// Loads a long-format panel CSV on its own (no hierarchy cross-checks).
PanelTensor load_panel_csv(const std::filesystem::path& path);

Hierarchy load_hierarchy_json(const std::filesystem::path& path);

PopulationWeights load_population_csv(const std::filesystem::path& path);

/// Long-format writer; suppression flags round-trip through their sentinel
/// tokens and missing cells through empty value fields.
void write_panel_csv(const PanelTensor& tensor, const std::filesystem::path& path);

std::string panel_to_csv(const PanelTensor& tensor);
PanelTensor panel_from_csv(const std::string& text, const std::string& context);

void write_missingness_report(const MissingnessReport& report, const std::filesystem::path& path);

inline constexpr const char* kSuppressedNumeratorToken = "SUPP_NUM";
inline constexpr const char* kSuppressedDenominatorToken = "SUPP_DEN";

} // namespace compindex
