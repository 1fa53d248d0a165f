#pragma once

#include <filesystem>
#include <string>

namespace compindex {

/// Renders one of the audit charts from its CSV to an SVG document.
/// Kinds: corr-heatmap, rank-bands, sobol-bars, rank-shift-bars.
void render_plot(const std::string& kind, const std::filesystem::path& in_csv,
                 const std::filesystem::path& out_svg);

std::string render_plot_string(const std::string& kind, const std::filesystem::path& in_csv);

} // namespace compindex
