#include "core/panel.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <set>
#include <sstream>

namespace compindex {

std::string to_string(Stage stage) {
    switch (stage) {
    case Stage::raw:
        return "raw";
    case Stage::imputed:
        return "imputed";
    case Stage::treated:
        return "treated";
    case Stage::normalized:
        return "normalized";
    }
    return "?";
}

std::string to_string(GapClass cls) {
    switch (cls) {
    case GapClass::interior_gap:
        return "interior-gap";
    case GapClass::edge_gap:
        return "edge-gap";
    case GapClass::all_years_missing:
        return "all-years-missing";
    case GapClass::suppressed_numerator:
        return "suppressed-numerator";
    case GapClass::suppressed_denominator:
        return "suppressed-denominator";
    }
    return "?";
}

namespace {

void sort_unique(std::vector<std::string>& ids, const char* what) {
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end()) {
        throw DataError(std::string("duplicate ") + what + " id: " + *dup);
    }
}

template <typename Vec, typename T> int index_of(const Vec& v, const T& key) {
    const auto it = std::lower_bound(v.begin(), v.end(), key);
    if (it == v.end() || *it != key) {
        return -1;
    }
    return static_cast<int>(it - v.begin());
}

} // namespace

PanelTensor::PanelTensor(std::vector<std::string> units, std::vector<std::string> indicators,
                         std::vector<int> years, Stage stage)
    : units_(std::move(units)), indicators_(std::move(indicators)), years_(std::move(years)),
      stage_(stage) {
    if (units_.empty() || indicators_.empty() || years_.empty()) {
        throw DataError("panel tensor requires at least one unit, indicator and year");
    }
    sort_unique(units_, "unit");
    sort_unique(indicators_, "indicator");
    std::sort(years_.begin(), years_.end());
    for (std::size_t k = 1; k < years_.size(); ++k) {
        if (years_[k] == years_[k - 1]) {
            throw DataError("duplicate year: " + std::to_string(years_[k]));
        }
        if (years_[k] != years_[k - 1] + 1) {
            std::ostringstream msg;
            msg << "years must form a contiguous range; gap between " << years_[k - 1] << " and "
                << years_[k];
            throw DataError(msg.str());
        }
    }
    const std::size_t n = units_.size() * indicators_.size() * years_.size();
    values_.assign(n, 0.0);
    present_.assign(n, 0);
    flags_.assign(n, CellFlag::none);
}

int PanelTensor::unit_index(const std::string& id) const {
    const int k = index_of(units_, id);
    if (k < 0) {
        throw DataError("unknown unit: " + id);
    }
    return k;
}

int PanelTensor::indicator_index(const std::string& id) const {
    const int k = index_of(indicators_, id);
    if (k < 0) {
        throw DataError("unknown indicator: " + id);
    }
    return k;
}

int PanelTensor::year_index(int year) const {
    if (year < years_.front() || year > years_.back()) {
        throw DataError("unknown year: " + std::to_string(year));
    }
    return year - years_.front();
}

double PanelTensor::value(int u, int i, int t) const {
    const std::size_t k = offset(u, i, t);
    if (!present_[k]) {
        std::ostringstream msg;
        msg << "missing cell (" << units_[u] << ", " << indicators_[i] << ", " << years_[t] << ")";
        throw DataError(msg.str());
    }
    return values_[k];
}

std::optional<double> PanelTensor::maybe_value(int u, int i, int t) const {
    const std::size_t k = offset(u, i, t);
    if (!present_[k]) {
        return std::nullopt;
    }
    return values_[k];
}

void PanelTensor::set(int u, int i, int t, double v) {
    const std::size_t k = offset(u, i, t);
    values_[k] = v;
    present_[k] = 1;
}

void PanelTensor::clear(int u, int i, int t) {
    const std::size_t k = offset(u, i, t);
    values_[k] = 0.0;
    present_[k] = 0;
}

std::size_t PanelTensor::missing_count() const {
    std::size_t n = 0;
    for (const auto p : present_) {
        n += (p == 0);
    }
    return n;
}

void PanelTensor::set_stage(Stage stage) {
    if (stage != Stage::raw && missing_count() > 0) {
        throw DataError("cannot tag tensor as " + to_string(stage) + ": " +
                        std::to_string(missing_count()) + " cells are missing");
    }
    stage_ = stage;
}

std::vector<std::optional<double>> PanelTensor::series(int u, int i) const {
    std::vector<std::optional<double>> out(years_.size());
    for (std::size_t t = 0; t < years_.size(); ++t) {
        out[t] = maybe_value(u, i, static_cast<int>(t));
    }
    return out;
}

std::vector<double> PanelTensor::indicator_values(int i) const {
    std::vector<double> out;
    out.reserve(units_.size() * years_.size());
    for (std::size_t u = 0; u < units_.size(); ++u) {
        for (std::size_t t = 0; t < years_.size(); ++t) {
            out.push_back(value(static_cast<int>(u), i, static_cast<int>(t)));
        }
    }
    return out;
}

std::vector<double> PanelTensor::indicator_year_values(int i, int t) const {
    std::vector<double> out;
    out.reserve(units_.size());
    for (std::size_t u = 0; u < units_.size(); ++u) {
        out.push_back(value(static_cast<int>(u), i, t));
    }
    return out;
}

PanelTensor PanelTensor::subset_indicators(const std::vector<std::string>& keep) const {
    PanelTensor out(units_, keep, years_, stage_);
    for (std::size_t i = 0; i < out.indicators_.size(); ++i) {
        const int src = indicator_index(out.indicators_[i]);
        for (std::size_t u = 0; u < units_.size(); ++u) {
            for (std::size_t t = 0; t < years_.size(); ++t) {
                const std::size_t k = offset(static_cast<int>(u), src, static_cast<int>(t));
                if (present_[k]) {
                    out.set(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t),
                            values_[k]);
                }
                out.set_flag(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t),
                             flags_[k]);
            }
        }
    }
    return out;
}

bool PanelTensor::identical_to(const PanelTensor& other) const {
    if (units_ != other.units_ || indicators_ != other.indicators_ || years_ != other.years_ ||
        stage_ != other.stage_ || present_ != other.present_ || flags_ != other.flags_) {
        return false;
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        // bit-exact on purpose: round-trips must preserve the representation
        if (present_[k] && std::bit_cast<std::uint64_t>(values_[k]) !=
                               std::bit_cast<std::uint64_t>(other.values_[k])) {
            return false;
        }
    }
    return true;
}

void Hierarchy::finalize(const std::vector<std::string>& units) {
    subdomain_indicators.clear();
    domain_subdomains.clear();
    region_units.clear();

    std::set<std::string> subdomain_set, domain_set, region_set;
    indicators.clear();
    for (const auto& [ind, sub] : indicator_subdomain) {
        indicators.push_back(ind);
        subdomain_indicators[sub].push_back(ind);
        subdomain_set.insert(sub);
        if (!polarity.count(ind)) {
            throw DataError("indicator missing polarity: " + ind);
        }
        const int d = polarity.at(ind);
        if (d != 0 && d != 1) {
            throw DataError("polarity of " + ind + " must be 0 or 1");
        }
    }
    for (const auto& [sub, dom] : subdomain_domain) {
        if (!subdomain_set.count(sub)) {
            throw DataError("empty subdomain: " + sub);
        }
        domain_subdomains[dom].push_back(sub);
        domain_set.insert(dom);
    }
    for (const auto& sub : subdomain_set) {
        if (!subdomain_domain.count(sub)) {
            throw DataError("subdomain not assigned to a domain: " + sub);
        }
    }
    if (indicators.empty()) {
        throw DataError("hierarchy defines no indicators");
    }

    subdomains.assign(subdomain_set.begin(), subdomain_set.end());
    domains.assign(domain_set.begin(), domain_set.end());
    for (const auto& d : domains) {
        if (domain_subdomains[d].empty()) {
            throw DataError("empty domain: " + d);
        }
    }

    // Restrict the region partition to the units actually present, then
    // require it to cover them exactly.
    std::map<std::string, std::string> restricted;
    for (const auto& u : units) {
        const auto it = unit_region.find(u);
        if (it == unit_region.end()) {
            throw DataError("unit not assigned to a region: " + u);
        }
        restricted[u] = it->second;
        region_units[it->second].push_back(u);
        region_set.insert(it->second);
    }
    unit_region = std::move(restricted);
    regions.assign(region_set.begin(), region_set.end());
    for (const auto& r : regions) {
        if (region_units[r].empty()) {
            throw DataError("empty region: " + r);
        }
    }

    std::size_t total = 0;
    for (const auto& [sub, inds] : subdomain_indicators) {
        total += inds.size();
    }
    if (total != indicators.size()) {
        throw DataError("subdomains do not partition the indicator set");
    }
}

Hierarchy Hierarchy::without_indicator(const std::string& id) const {
    const auto it = indicator_subdomain.find(id);
    if (it == indicator_subdomain.end()) {
        throw DataError("unknown indicator: " + id);
    }
    const std::string sub = it->second;
    if (subdomain_indicators.at(sub).size() == 1) {
        // Removing the only indicator removes the subdomain with it.
        return without_subdomain(sub);
    }
    Hierarchy out = *this;
    out.indicator_subdomain.erase(id);
    out.polarity.erase(id);
    std::vector<std::string> units;
    units.reserve(unit_region.size());
    for (const auto& [u, r] : unit_region) {
        units.push_back(u);
    }
    out.finalize(units);
    return out;
}

Hierarchy Hierarchy::without_subdomain(const std::string& id) const {
    const auto it = subdomain_domain.find(id);
    if (it == subdomain_domain.end()) {
        throw DataError("unknown subdomain: " + id);
    }
    Hierarchy out = *this;
    for (const auto& ind : subdomain_indicators.at(id)) {
        out.indicator_subdomain.erase(ind);
        out.polarity.erase(ind);
    }
    out.subdomain_domain.erase(id);
    // An emptied domain disappears with its last subdomain when the lookup
    // maps are rebuilt below.
    if (out.indicator_subdomain.empty()) {
        throw DataError("removal would empty the whole index");
    }
    std::vector<std::string> units;
    units.reserve(unit_region.size());
    for (const auto& [u, r] : unit_region) {
        units.push_back(u);
    }
    out.finalize(units);
    return out;
}

void PopulationWeights::validate() const {
    for (std::size_t t = 0; t < years.size(); ++t) {
        double sum = 0.0;
        for (std::size_t u = 0; u < units.size(); ++u) {
            const double w = at(static_cast<int>(u), static_cast<int>(t));
            if (!(w > 0.0)) {
                throw DataError("population weight for (" + units[u] + ", " +
                                std::to_string(years[t]) + ") must be strictly positive");
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream msg;
            msg << "population weights for year " << years[t] << " sum " << sum << " != 1";
            throw DataError(msg.str());
        }
    }
}

std::size_t MissingnessReport::count(GapClass cls) const {
    std::size_t n = 0;
    for (const auto& c : cells) {
        n += (c.cls == cls);
    }
    return n;
}

MissingnessReport classify_missing(const PanelTensor& tensor) {
    if (tensor.stage() != Stage::raw) {
        throw DataError("classify_missing requires a raw tensor");
    }
    MissingnessReport report;
    const int years = static_cast<int>(tensor.year_count());
    for (std::size_t i = 0; i < tensor.indicator_count(); ++i) {
        for (std::size_t u = 0; u < tensor.unit_count(); ++u) {
            bool any_present = false;
            for (int t = 0; t < years; ++t) {
                if (tensor.present(static_cast<int>(u), static_cast<int>(i), t)) {
                    any_present = true;
                    break;
                }
            }
            for (int t = 0; t < years; ++t) {
                if (tensor.present(static_cast<int>(u), static_cast<int>(i), t)) {
                    continue;
                }
                MissingCell cell;
                cell.unit = tensor.units()[u];
                cell.indicator = tensor.indicators()[i];
                cell.year = tensor.years()[t];
                const CellFlag f = tensor.flag(static_cast<int>(u), static_cast<int>(i), t);
                if (f == CellFlag::suppressed_numerator) {
                    cell.cls = GapClass::suppressed_numerator;
                } else if (f == CellFlag::suppressed_denominator) {
                    cell.cls = GapClass::suppressed_denominator;
                } else if (!any_present) {
                    cell.cls = GapClass::all_years_missing;
                } else {
                    bool before = false, after = false;
                    for (int s = t - 1; s >= 0; --s) {
                        if (tensor.present(static_cast<int>(u), static_cast<int>(i), s)) {
                            before = true;
                            break;
                        }
                    }
                    for (int s = t + 1; s < years; ++s) {
                        if (tensor.present(static_cast<int>(u), static_cast<int>(i), s)) {
                            after = true;
                            break;
                        }
                    }
                    cell.cls = (before && after) ? GapClass::interior_gap : GapClass::edge_gap;
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    std::sort(report.cells.begin(), report.cells.end(), [](const auto& a, const auto& b) {
        return std::tie(a.indicator, a.unit, a.year) < std::tie(b.indicator, b.unit, b.year);
    });
    return report;
}

} // namespace compindex
