#include "support/fixture.hpp"

#include "core/csv.hpp"
#include "core/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace compindex::testsupport {

namespace {

using nlohmann::json;

std::string padded(const char* prefix, int k, int width) {
    std::ostringstream out;
    out << prefix;
    std::string digits = std::to_string(k);
    while (static_cast<int>(digits.size()) < width) {
        digits.insert(digits.begin(), '0');
    }
    out << digits;
    return out.str();
}

struct IndicatorPlan {
    std::string id;
    std::string subdomain;
    enum class Shape { tame, heavy, spiked } shape = Shape::tame;
    double sign = 1.0; // direction of the health loading
    int polarity = 0;
};

} // namespace

Fixture make_health_fixture(const FixtureSpec& spec) {
    // Subdomain sizes per domain: 26 + 18 + 14 = 58 indicators.
    const std::vector<std::pair<std::string, std::vector<int>>> structure = {
        {"lives", {3, 5, 1, 3, 7, 4, 3}},
        {"people", {2, 6, 3, 4, 3}},
        {"places", {2, 5, 3, 3, 1}},
    };

    Hierarchy hierarchy;
    std::vector<IndicatorPlan> plans;
    {
        Rng shape_rng(spec.seed, 101);
        int subdomain_counter = 0;
        int indicator_counter = 0;
        for (const auto& [domain, sizes] : structure) {
            int sd_local = 0;
            for (const int size : sizes) {
                ++sd_local;
                ++subdomain_counter;
                const std::string sub = domain.substr(0, 2) + std::to_string(sd_local);
                hierarchy.subdomain_domain[sub] = domain;
                for (int j = 0; j < size; ++j) {
                    ++indicator_counter;
                    IndicatorPlan plan;
                    plan.id = sub + "_" + padded("i", indicator_counter, 2);
                    plan.subdomain = sub;
                    plan.sign = shape_rng.uniform() < 0.5 ? 1.0 : -1.0;
                    plan.polarity = plan.sign < 0.0 ? 1 : 0;
                    plans.push_back(std::move(plan));
                }
            }
        }
        // Five heavy-tailed and five spiked indicators, spread over the tree.
        const int heavy[] = {4, 15, 27, 38, 50};
        const int spiked[] = {8, 19, 30, 43, 55};
        for (const int k : heavy) {
            plans[static_cast<std::size_t>(k)].shape = IndicatorPlan::Shape::heavy;
        }
        for (const int k : spiked) {
            plans[static_cast<std::size_t>(k)].shape = IndicatorPlan::Shape::spiked;
        }
    }

    std::vector<std::string> units;
    units.reserve(static_cast<std::size_t>(spec.units));
    for (int u = 0; u < spec.units; ++u) {
        units.push_back(padded("utla", u + 1, 3));
    }
    const int n_regions = 9;
    for (int u = 0; u < spec.units; ++u) {
        hierarchy.unit_region[units[static_cast<std::size_t>(u)]] =
            "r" + std::to_string(u % n_regions + 1);
    }
    for (const auto& plan : plans) {
        hierarchy.indicator_subdomain[plan.id] = plan.subdomain;
        hierarchy.polarity[plan.id] = plan.polarity;
    }
    hierarchy.finalize(units);

    std::vector<int> years;
    for (int t = 0; t < spec.years; ++t) {
        years.push_back(spec.first_year + t);
    }

    // Latent unit quality: the common factor behind every indicator.
    std::vector<double> quality(static_cast<std::size_t>(spec.units));
    {
        Rng rng(spec.seed, 102);
        for (auto& q : quality) {
            q = rng.normal();
        }
    }

    PanelTensor tensor(units, [&] {
        std::vector<std::string> ids;
        for (const auto& plan : plans) {
            ids.push_back(plan.id);
        }
        return ids;
    }(), years, Stage::raw);

    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& plan = plans[i];
        Rng rng(spec.seed, 1000 + i);
        const int col = tensor.indicator_index(plan.id);
        const double trend = 0.02 * rng.normal();
        for (int u = 0; u < spec.units; ++u) {
            const double stable = 0.45 * rng.normal(); // unit-indicator effect
            for (int t = 0; t < spec.years; ++t) {
                const double base = 0.8 * plan.sign * quality[static_cast<std::size_t>(u)] +
                                    stable + trend * t + 0.35 * rng.normal();
                double value = 0.0;
                switch (plan.shape) {
                case IndicatorPlan::Shape::tame:
                    value = 50.0 + 10.0 * base;
                    break;
                case IndicatorPlan::Shape::heavy:
                    value = std::exp(1.0 + 1.3 * base);
                    break;
                case IndicatorPlan::Shape::spiked:
                    value = std::exp(0.5 + 0.4 * base);
                    break;
                }
                tensor.set(u, col, t, value);
            }
        }
        if (plan.shape == IndicatorPlan::Shape::spiked) {
            // Two outlying units per year, rotating deterministically.
            for (int t = 0; t < spec.years; ++t) {
                for (int j = 0; j < 2; ++j) {
                    const int u = static_cast<int>((17 * (t + 1) + 31 * (j + 1) +
                                                    7 * static_cast<int>(i)) %
                                                   spec.units);
                    tensor.set(u, col, t, tensor.value(u, col, t) * 2.6);
                }
            }
        }
    }

    if (spec.inject_missing && spec.units >= 20 && spec.years >= 3) {
        const int i0 = tensor.indicator_index(plans[0].id);
        tensor.clear(9, i0, 1);  // interior gap
        tensor.clear(10, i0, 0); // edge gap
        const int i1 = tensor.indicator_index(plans[1].id);
        for (int t = 0; t < spec.years; ++t) {
            tensor.clear(11, i1, t); // all years missing; region peers donate
        }
        const int i2 = tensor.indicator_index(plans[2].id);
        tensor.clear(12, i2, 2);
        tensor.set_flag(12, i2, 2, CellFlag::suppressed_numerator);
        tensor.clear(13, i2, 3);
        tensor.set_flag(13, i2, 3, CellFlag::suppressed_denominator);
        // One indicator observed in the last year only, as with single-year
        // sources; it is imputed to be constant over the span.
        const int single = tensor.indicator_index(plans[57].id);
        for (int u = 0; u < spec.units; ++u) {
            for (int t = 0; t + 1 < spec.years; ++t) {
                tensor.clear(u, single, t);
            }
        }
    }

    // Population shares from a skewed size distribution, drifting mildly.
    PopulationWeights population;
    population.units = units;
    population.years = years;
    population.weights.assign(units.size() * years.size(), 0.0);
    {
        Rng rng(spec.seed, 103);
        std::vector<double> size(units.size());
        for (auto& s : size) {
            s = std::exp(0.5 * rng.normal());
        }
        for (std::size_t t = 0; t < years.size(); ++t) {
            std::vector<double> year_size(size);
            for (auto& s : year_size) {
                s *= 1.0 + 0.01 * rng.normal();
            }
            double total = 0.0;
            for (const double s : year_size) {
                total += s;
            }
            for (std::size_t u = 0; u < units.size(); ++u) {
                population.weights[u * years.size() + t] = year_size[u] / total;
            }
        }
    }
    population.validate();

    return Fixture{std::move(tensor), std::move(hierarchy), std::move(population)};
}

Fixture make_small_fixture(std::uint64_t seed) {
    Hierarchy hierarchy;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"s1", "alpha"}, {"s2", "alpha"}, {"s3", "beta"}};
    hierarchy.subdomain_domain = {{"s1", "alpha"}, {"s2", "alpha"}, {"s3", "beta"}};
    const std::vector<std::pair<std::string, std::string>> inds = {
        {"i1", "s1"}, {"i2", "s1"}, {"i3", "s2"}, {"i4", "s2"}, {"i5", "s3"}, {"i6", "s3"}};
    for (const auto& [id, sub] : inds) {
        hierarchy.indicator_subdomain[id] = sub;
        hierarchy.polarity[id] = id == "i4" ? 1 : 0;
    }

    std::vector<std::string> units;
    for (int u = 0; u < 10; ++u) {
        units.push_back(padded("u", u + 1, 2));
    }
    for (int u = 0; u < 10; ++u) {
        hierarchy.unit_region[units[static_cast<std::size_t>(u)]] = u < 5 ? "north" : "south";
    }
    hierarchy.finalize(units);

    std::vector<int> years = {2015, 2016, 2017, 2018};
    PanelTensor tensor(units, {"i1", "i2", "i3", "i4", "i5", "i6"}, years, Stage::raw);
    Rng rng(seed, 1);
    for (int i = 0; i < 6; ++i) {
        for (int u = 0; u < 10; ++u) {
            for (int t = 0; t < 4; ++t) {
                // Evenly spread base plus mild noise keeps all moments well
                // inside the treatment limits.
                const double base = static_cast<double>((u * 7 + i * 3 + t) % 10);
                tensor.set(u, i, t, 10.0 + base + 0.25 * rng.normal());
            }
        }
    }

    PopulationWeights population;
    population.units = units;
    population.years = years;
    population.weights.assign(units.size() * years.size(), 0.0);
    for (std::size_t t = 0; t < years.size(); ++t) {
        double total = 0.0;
        std::vector<double> raw(units.size());
        for (std::size_t u = 0; u < units.size(); ++u) {
            raw[u] = 1.0 + 0.1 * static_cast<double>(u);
            total += raw[u];
        }
        for (std::size_t u = 0; u < units.size(); ++u) {
            population.weights[u * years.size() + t] = raw[u] / total;
        }
    }
    population.validate();

    return Fixture{std::move(tensor), std::move(hierarchy), std::move(population)};
}

std::string hierarchy_to_json(const Hierarchy& hierarchy) {
    json domains = json::object();
    for (const auto& dom : hierarchy.domains) {
        json subdomains = json::object();
        for (const auto& sub : hierarchy.domain_subdomains.at(dom)) {
            json indicators = json::array();
            for (const auto& ind : hierarchy.subdomain_indicators.at(sub)) {
                indicators.push_back({{"id", ind}, {"polarity", hierarchy.polarity.at(ind)}});
            }
            subdomains[sub] = {{"indicators", indicators}};
        }
        domains[dom] = {{"subdomains", subdomains}};
    }
    json regions = json::object();
    for (const auto& reg : hierarchy.regions) {
        regions[reg] = hierarchy.region_units.at(reg);
    }
    json doc;
    doc["domains"] = domains;
    doc["regions"] = regions;
    return doc.dump(2) + "\n";
}

std::string population_to_csv(const PopulationWeights& population) {
    csv::Table table;
    table.header = {"unit", "year", "weight"};
    for (std::size_t u = 0; u < population.units.size(); ++u) {
        for (std::size_t t = 0; t < population.years.size(); ++t) {
            table.rows.push_back({population.units[u], std::to_string(population.years[t]),
                                  csv::format_double(population.at(static_cast<int>(u),
                                                                   static_cast<int>(t)))});
        }
    }
    return csv::to_string(table);
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_panel_csv(fixture.tensor, dir / "data.csv");
    std::ofstream h(dir / "hierarchy.json", std::ios::binary);
    h << hierarchy_to_json(fixture.hierarchy);
    std::ofstream p(dir / "population.csv", std::ios::binary);
    p << population_to_csv(fixture.population);
}

} // namespace compindex::testsupport
