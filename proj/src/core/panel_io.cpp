#include "core/panel_io.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace compindex {

namespace {

using nlohmann::json;

struct RawRow {
    std::string unit;
    std::string indicator;
    int year;
    std::string value;
};

std::vector<RawRow> read_rows(const csv::Table& table, const std::string& context) {
    const int cu = table.column("unit");
    const int ci = table.column("indicator");
    const int cy = table.column("year");
    const int cv = table.column("value");
    if (cu < 0 || ci < 0 || cy < 0 || cv < 0) {
        throw DataError(context + ": expected header unit,indicator,year,value");
    }
    std::vector<RawRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        RawRow row;
        row.unit = r[cu];
        row.indicator = r[ci];
        const double y = csv::parse_double(r[cy], context + " year column");
        row.year = static_cast<int>(y);
        if (static_cast<double>(row.year) != y) {
            throw DataError(context + ": year must be an integer, got " + r[cy]);
        }
        row.value = r[cv];
        rows.push_back(std::move(row));
    }
    return rows;
}

PanelTensor build_tensor(const std::vector<RawRow>& rows, const std::string& context) {
    if (rows.empty()) {
        throw DataError(context + ": no data rows");
    }
    std::set<std::string> unit_set, indicator_set;
    std::set<int> year_set;
    for (const auto& r : rows) {
        unit_set.insert(r.unit);
        indicator_set.insert(r.indicator);
        year_set.insert(r.year);
    }
    std::vector<int> years(year_set.begin(), year_set.end());
    PanelTensor tensor(std::vector<std::string>(unit_set.begin(), unit_set.end()),
                       std::vector<std::string>(indicator_set.begin(), indicator_set.end()),
                       std::move(years), Stage::raw);

    std::set<std::tuple<int, int, int>> seen;
    for (const auto& r : rows) {
        const int u = tensor.unit_index(r.unit);
        const int i = tensor.indicator_index(r.indicator);
        const int t = tensor.year_index(r.year);
        if (!seen.insert({u, i, t}).second) {
            std::ostringstream msg;
            msg << context << ": duplicate row for (" << r.unit << ", " << r.indicator << ", "
                << r.year << ")";
            throw DataError(msg.str());
        }
        if (r.value.empty()) {
            continue; // missing
        }
        if (r.value == kSuppressedNumeratorToken) {
            tensor.set_flag(u, i, t, CellFlag::suppressed_numerator);
            continue;
        }
        if (r.value == kSuppressedDenominatorToken) {
            tensor.set_flag(u, i, t, CellFlag::suppressed_denominator);
            continue;
        }
        tensor.set(u, i, t, csv::parse_double(r.value, context + " value column"));
    }
    return tensor;
}

} // namespace

PanelTensor panel_from_csv(const std::string& text, const std::string& context) {
    return build_tensor(read_rows(csv::parse(text, context), context), context);
}

PanelTensor load_panel_csv(const std::filesystem::path& path) {
    return build_tensor(read_rows(csv::read_file(path), path.string()), path.string());
}

Hierarchy load_hierarchy_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open hierarchy config: " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("invalid hierarchy JSON in " + path.string() + ": " + e.what());
    }

    Hierarchy h;
    if (!doc.contains("domains") || !doc["domains"].is_object()) {
        throw DataError(path.string() + ": hierarchy config needs a 'domains' object");
    }
    for (const auto& [dom, dval] : doc["domains"].items()) {
        if (!dval.contains("subdomains") || !dval["subdomains"].is_object()) {
            throw DataError("domain " + dom + " needs a 'subdomains' object");
        }
        for (const auto& [sub, sval] : dval["subdomains"].items()) {
            if (h.subdomain_domain.count(sub)) {
                throw DataError("subdomain in more than one domain: " + sub);
            }
            h.subdomain_domain[sub] = dom;
            if (!sval.contains("indicators") || !sval["indicators"].is_array()) {
                throw DataError("subdomain " + sub + " needs an 'indicators' array");
            }
            for (const auto& ival : sval["indicators"]) {
                const std::string id = ival.at("id").get<std::string>();
                if (h.indicator_subdomain.count(id)) {
                    throw DataError("indicator in more than one subdomain: " + id);
                }
                h.indicator_subdomain[id] = sub;
                h.polarity[id] = ival.at("polarity").get<int>();
            }
        }
    }
    if (doc.contains("regions")) {
        for (const auto& [reg, uval] : doc["regions"].items()) {
            for (const auto& u : uval) {
                const std::string id = u.get<std::string>();
                if (h.unit_region.count(id)) {
                    throw DataError("unit in more than one region: " + id);
                }
                h.unit_region[id] = reg;
            }
        }
    }
    return h;
}

PopulationWeights load_population_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const int cu = table.column("unit");
    const int cy = table.column("year");
    const int cw = table.column("weight");
    if (cu < 0 || cy < 0 || cw < 0) {
        throw DataError(path.string() + ": expected header unit,year,weight");
    }
    std::set<std::string> unit_set;
    std::set<int> year_set;
    for (const auto& r : table.rows) {
        unit_set.insert(r[cu]);
        year_set.insert(static_cast<int>(csv::parse_double(r[cy], "population year")));
    }
    PopulationWeights pop;
    pop.units.assign(unit_set.begin(), unit_set.end());
    pop.years.assign(year_set.begin(), year_set.end());
    pop.weights.assign(pop.units.size() * pop.years.size(), -1.0);
    for (const auto& r : table.rows) {
        const auto uit = std::lower_bound(pop.units.begin(), pop.units.end(), r[cu]);
        const int year = static_cast<int>(csv::parse_double(r[cy], "population year"));
        const auto yit = std::lower_bound(pop.years.begin(), pop.years.end(), year);
        const std::size_t u = static_cast<std::size_t>(uit - pop.units.begin());
        const std::size_t t = static_cast<std::size_t>(yit - pop.years.begin());
        const std::size_t k = u * pop.years.size() + t;
        if (pop.weights[k] >= 0.0) {
            throw DataError(path.string() + ": duplicate population row for (" + r[cu] + ", " +
                            std::to_string(year) + ")");
        }
        pop.weights[k] = csv::parse_double(r[cw], "population weight");
    }
    for (std::size_t u = 0; u < pop.units.size(); ++u) {
        for (std::size_t t = 0; t < pop.years.size(); ++t) {
            if (pop.weights[u * pop.years.size() + t] < 0.0) {
                throw DataError(path.string() + ": no population weight for (" + pop.units[u] +
                                ", " + std::to_string(pop.years[t]) + ")");
            }
        }
    }
    return pop;
}

Dataset load_dataset(const std::filesystem::path& data_csv,
                     const std::filesystem::path& hierarchy_json,
                     const std::filesystem::path& population_csv) {
    PanelTensor tensor = load_panel_csv(data_csv);
    Hierarchy hierarchy = load_hierarchy_json(hierarchy_json);

    for (const auto& ind : tensor.indicators()) {
        if (!hierarchy.indicator_subdomain.count(ind)) {
            throw DataError("indicator present in data but absent from hierarchy: " + ind);
        }
    }
    for (const auto& [ind, sub] : hierarchy.indicator_subdomain) {
        if (!std::binary_search(tensor.indicators().begin(), tensor.indicators().end(), ind)) {
            throw DataError("indicator declared in hierarchy but absent from data: " + ind);
        }
    }
    hierarchy.finalize(tensor.units());

    PopulationWeights population = load_population_csv(population_csv);
    if (population.units != tensor.units()) {
        throw DataError("population weights do not cover exactly the units in the data");
    }
    for (const int y : tensor.years()) {
        if (!std::binary_search(population.years.begin(), population.years.end(), y)) {
            throw DataError("population weights missing year " + std::to_string(y));
        }
    }
    population.validate();

    return Dataset{std::move(tensor), std::move(hierarchy), std::move(population)};
}

std::string panel_to_csv(const PanelTensor& tensor) {
    csv::Table table;
    table.header = {"unit", "indicator", "year", "value"};
    for (std::size_t u = 0; u < tensor.unit_count(); ++u) {
        for (std::size_t i = 0; i < tensor.indicator_count(); ++i) {
            for (std::size_t t = 0; t < tensor.year_count(); ++t) {
                std::string value;
                const CellFlag f =
                    tensor.flag(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t));
                if (const auto v = tensor.maybe_value(static_cast<int>(u), static_cast<int>(i),
                                                      static_cast<int>(t))) {
                    // an imputed suppressed cell serialises as its value
                    value = csv::format_double(*v);
                } else if (f == CellFlag::suppressed_numerator) {
                    value = kSuppressedNumeratorToken;
                } else if (f == CellFlag::suppressed_denominator) {
                    value = kSuppressedDenominatorToken;
                }
                table.rows.push_back({tensor.units()[u], tensor.indicators()[i],
                                      std::to_string(tensor.years()[t]), std::move(value)});
            }
        }
    }
    return csv::to_string(table);
}

void write_panel_csv(const PanelTensor& tensor, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << panel_to_csv(tensor);
}

void write_missingness_report(const MissingnessReport& report,
                              const std::filesystem::path& path) {
    json doc;
    doc["missing_cells"] = report.cells.size();
    json counts;
    for (const GapClass cls :
         {GapClass::interior_gap, GapClass::edge_gap, GapClass::all_years_missing,
          GapClass::suppressed_numerator, GapClass::suppressed_denominator}) {
        counts[to_string(cls)] = report.count(cls);
    }
    doc["counts"] = counts;
    json cells = json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"unit", c.unit},
                         {"indicator", c.indicator},
                         {"year", c.year},
                         {"class", to_string(c.cls)}});
    }
    doc["cells"] = cells;
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << doc.dump(2) << "\n";
}

} // namespace compindex
