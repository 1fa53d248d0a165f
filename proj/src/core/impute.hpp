#pragma once

#include "core/panel.hpp"

namespace compindex {

/// Fills every missing cell of a raw tensor and returns it tagged imputed.
/// Rules, in classification order:
///   1. interior gap: linear interpolation in the year coordinate between the
///      nearest originally-present neighbours
///   2. edge gap: nearest originally-present value in the series
///   3. all years missing: per-year mean over the unit's region, excluding
///      the unit itself; only originally-present values donate
///   4. suppressed numerator: minimum presented value of the indicator's
///      data series
///   5. suppressed denominator: median of the indicator's data series
PanelTensor impute(const PanelTensor& tensor, const Hierarchy& hierarchy,
                   const MissingnessReport& report);

/// Copies the single fully-present year of an indicator to all other years.
/// Precondition: exactly one year fully present, all others fully missing.
PanelTensor propagate_single_year(const PanelTensor& tensor, const std::string& indicator);

} // namespace compindex
