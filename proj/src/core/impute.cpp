#include "core/impute.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace compindex {

namespace {

// Presented values of one indicator across all units and years; only
// originally-present cells count.
std::vector<double> presented_values(const PanelTensor& tensor, int i) {
    std::vector<double> out;
    for (std::size_t u = 0; u < tensor.unit_count(); ++u) {
        for (std::size_t t = 0; t < tensor.year_count(); ++t) {
            if (tensor.present(static_cast<int>(u), i, static_cast<int>(t))) {
                out.push_back(tensor.value(static_cast<int>(u), i, static_cast<int>(t)));
            }
        }
    }
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) {
        return v[n / 2];
    }
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

PanelTensor impute(const PanelTensor& tensor, const Hierarchy& hierarchy,
                   const MissingnessReport& report) {
    if (tensor.stage() != Stage::raw) {
        throw DataError("impute requires a raw tensor");
    }
    if (report.cells.size() != tensor.missing_count()) {
        throw DataError("missingness report does not match the tensor");
    }

    PanelTensor out = tensor;

    for (const auto& cell : report.cells) {
        const int u = tensor.unit_index(cell.unit);
        const int i = tensor.indicator_index(cell.indicator);
        const int t = tensor.year_index(cell.year);
        const int years = static_cast<int>(tensor.year_count());

        switch (cell.cls) {
        case GapClass::interior_gap: {
            int lo = -1, hi = -1;
            for (int s = t - 1; s >= 0; --s) {
                if (tensor.present(u, i, s)) {
                    lo = s;
                    break;
                }
            }
            for (int s = t + 1; s < years; ++s) {
                if (tensor.present(u, i, s)) {
                    hi = s;
                    break;
                }
            }
            const double a = tensor.value(u, i, lo);
            const double b = tensor.value(u, i, hi);
            const double w = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
            out.set(u, i, t, a + w * (b - a));
            break;
        }
        case GapClass::edge_gap: {
            int nearest = -1;
            for (int d = 1; d < years; ++d) {
                if (t - d >= 0 && tensor.present(u, i, t - d)) {
                    nearest = t - d;
                    break;
                }
                if (t + d < years && tensor.present(u, i, t + d)) {
                    nearest = t + d;
                    break;
                }
            }
            out.set(u, i, t, tensor.value(u, i, nearest));
            break;
        }
        case GapClass::all_years_missing: {
            const std::string& region = hierarchy.unit_region.at(cell.unit);
            const auto& members = hierarchy.region_units.at(region);
            double sum = 0.0;
            int donors = 0;
            for (const auto& donor : members) {
                if (donor == cell.unit) {
                    continue;
                }
                const int du = tensor.unit_index(donor);
                if (tensor.present(du, i, t)) {
                    sum += tensor.value(du, i, t);
                    ++donors;
                }
            }
            if (donors == 0) {
                std::ostringstream msg;
                msg << "unrecoverable gap: indicator " << cell.indicator << " has no donors in "
                    << "region " << region << " for year " << cell.year;
                throw DataError(msg.str());
            }
            out.set(u, i, t, sum / donors);
            break;
        }
        case GapClass::suppressed_numerator: {
            const auto vals = presented_values(tensor, i);
            if (vals.empty()) {
                throw DataError("suppressed cell has no presented values for indicator " +
                                cell.indicator);
            }
            out.set(u, i, t, *std::min_element(vals.begin(), vals.end()));
            break;
        }
        case GapClass::suppressed_denominator: {
            const auto vals = presented_values(tensor, i);
            if (vals.empty()) {
                throw DataError("suppressed cell has no presented values for indicator " +
                                cell.indicator);
            }
            out.set(u, i, t, median_of(vals));
            break;
        }
        }
    }

    out.set_stage(Stage::imputed);
    return out;
}

PanelTensor propagate_single_year(const PanelTensor& tensor, const std::string& indicator) {
    const int i = tensor.indicator_index(indicator);
    const int years = static_cast<int>(tensor.year_count());
    const int units = static_cast<int>(tensor.unit_count());

    int present_year = -1;
    for (int t = 0; t < years; ++t) {
        int present = 0;
        for (int u = 0; u < units; ++u) {
            present += tensor.present(u, i, t) ? 1 : 0;
        }
        if (present == units) {
            if (present_year >= 0) {
                throw DataError("propagate_single_year: indicator " + indicator +
                                " has more than one fully present year");
            }
            present_year = t;
        } else if (present != 0) {
            throw DataError("propagate_single_year: indicator " + indicator +
                            " has a partially present year " +
                            std::to_string(tensor.years()[t]));
        }
    }
    if (present_year < 0) {
        throw DataError("propagate_single_year: indicator " + indicator +
                        " has no fully present year");
    }

    PanelTensor out = tensor;
    for (int t = 0; t < years; ++t) {
        if (t == present_year) {
            continue;
        }
        for (int u = 0; u < units; ++u) {
            out.set(u, i, t, tensor.value(u, i, present_year));
        }
    }
    return out;
}

} // namespace compindex
