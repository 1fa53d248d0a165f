#include "core/aggregate.hpp"
#include "core/errors.hpp"
#include "core/normalize.hpp"
#include "core/rng.hpp"
#include "support/fixture.hpp"

#include <doctest.h>

#include <cmath>

using namespace compindex;

namespace {

struct Instance {
    PanelTensor z;
    Hierarchy hierarchy;
    PopulationWeights population;
    WeightSystem weights;
};

/// Random valid instance: random partition sizes, random positive weights,
/// random population shares.
Instance random_instance(std::uint64_t seed, int max_units = 149, int max_indicators = 58) {
    Rng rng(seed);
    const int n_units = 2 + static_cast<int>(rng.uniform_int(max_units - 1));
    const int n_indicators = 1 + static_cast<int>(rng.uniform_int(max_indicators));
    const int n_years = 1 + static_cast<int>(rng.uniform_int(4));
    const int n_regions = 1 + static_cast<int>(rng.uniform_int(std::min(9, n_units)));
    const int n_subdomains = 1 + static_cast<int>(rng.uniform_int(std::min(17, n_indicators)));
    const int n_domains = 1 + static_cast<int>(rng.uniform_int(std::min(3, n_subdomains)));

    std::vector<std::string> units, indicators;
    for (int u = 0; u < n_units; ++u) {
        units.push_back("u" + std::to_string(1000 + u));
    }
    for (int i = 0; i < n_indicators; ++i) {
        indicators.push_back("i" + std::to_string(1000 + i));
    }
    std::vector<int> years;
    for (int t = 0; t < n_years; ++t) {
        years.push_back(2015 + t);
    }

    Hierarchy h;
    for (int i = 0; i < n_indicators; ++i) {
        // every subdomain/domain/region gets at least one member
        const int sub = i < n_subdomains ? i : static_cast<int>(rng.uniform_int(n_subdomains));
        h.indicator_subdomain[indicators[static_cast<std::size_t>(i)]] =
            "s" + std::to_string(sub);
        h.polarity[indicators[static_cast<std::size_t>(i)]] = rng.uniform() < 0.5 ? 0 : 1;
    }
    for (int s = 0; s < n_subdomains; ++s) {
        const int dom = s < n_domains ? s : static_cast<int>(rng.uniform_int(n_domains));
        h.subdomain_domain["s" + std::to_string(s)] = "d" + std::to_string(dom);
    }
    for (int u = 0; u < n_units; ++u) {
        const int reg = u < n_regions ? u : static_cast<int>(rng.uniform_int(n_regions));
        h.unit_region[units[static_cast<std::size_t>(u)]] = "r" + std::to_string(reg);
    }
    h.finalize(units);

    PanelTensor z(units, indicators, years, Stage::raw);
    for (int u = 0; u < n_units; ++u) {
        for (int i = 0; i < n_indicators; ++i) {
            for (int t = 0; t < n_years; ++t) {
                z.set(u, i, t, rng.normal());
            }
        }
    }
    z.set_stage(Stage::normalized);

    WeightSystem w = equal_weights(h);
    for (auto& [id, v] : w.indicator) {
        v = 0.2 + rng.uniform();
    }
    for (auto& [id, v] : w.subdomain) {
        v = 0.2 + rng.uniform();
    }
    for (auto& [id, v] : w.domain) {
        v = 0.2 + rng.uniform();
    }

    PopulationWeights pop;
    pop.units = units;
    pop.years = years;
    pop.weights.assign(units.size() * years.size(), 0.0);
    for (std::size_t t = 0; t < years.size(); ++t) {
        double total = 0.0;
        std::vector<double> raw(units.size());
        for (std::size_t u = 0; u < units.size(); ++u) {
            raw[u] = 0.1 + rng.uniform();
            total += raw[u];
        }
        for (std::size_t u = 0; u < units.size(); ++u) {
            pop.weights[u * years.size() + t] = raw[u] / total;
        }
    }
    pop.validate();

    return Instance{std::move(z), std::move(h), std::move(pop), std::move(w)};
}

} // namespace

TEST_CASE("hierarchical aggregation is the alpha-weighted average") {
    // subdomain of two indicators, equal weights: mean
    PanelTensor z({"c"}, {"i1", "i2"}, {2015}, Stage::raw);
    z.set(0, 0, 0, 1.0);
    z.set(0, 1, 0, 3.0);
    z.set_stage(Stage::normalized);
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s"}, {"i2", "s"}};
    h.subdomain_domain = {{"s", "d"}};
    h.polarity = {{"i1", 0}, {"i2", 0}};
    h.unit_region = {{"c", "r"}};
    h.finalize({"c"});
    const auto agg = aggregate_hierarchy(z, h, equal_weights(h));
    CHECK(agg.subdomain.at(0, 0, 0) == 2.0);

    // weights (0.4, 0.6) on z = (1, 2): 0.4*1 + 0.6*2 = 1.6
    WeightSystem w = equal_weights(h);
    w.indicator["i1"] = 0.4;
    w.indicator["i2"] = 0.6;
    z.set(0, 1, 0, 2.0);
    const auto agg2 = aggregate_hierarchy(z, h, w);
    CHECK(agg2.subdomain.at(0, 0, 0) == doctest::Approx(1.6).epsilon(1e-15));
}

TEST_CASE("weighted averages preserve constants through every level") {
    auto inst = random_instance(404, 30, 20);
    for (std::size_t k = 0; k < inst.z.unit_count(); ++k) {
        for (std::size_t i = 0; i < inst.z.indicator_count(); ++i) {
            for (std::size_t t = 0; t < inst.z.year_count(); ++t) {
                inst.z.set(static_cast<int>(k), static_cast<int>(i), static_cast<int>(t), 0.733);
            }
        }
    }
    const auto agg = aggregate_hierarchy(inst.z, inst.hierarchy, inst.weights);
    for (const double v : agg.overall.values) {
        CHECK(v == doctest::Approx(0.733).epsilon(1e-12));
    }
    // the national aggregate preserves constants too (unit weights sum to 1)
    const auto nation = aggregate_national(agg.overall, inst.population);
    for (const double v : nation.values) {
        CHECK(v == doctest::Approx(0.733).epsilon(1e-12));
    }
    // share-weighted regional sums do not, unless renormalized
    const auto renorm = aggregate_regions(agg.overall, inst.population, inst.hierarchy, true);
    for (const double v : renorm.values) {
        CHECK(v == doctest::Approx(0.733).epsilon(1e-12));
    }
}

TEST_CASE("increasing a leaf strictly increases every containing aggregate") {
    auto inst = random_instance(77, 25, 15);
    const auto before = aggregate_hierarchy(inst.z, inst.hierarchy, inst.weights);
    auto bumped = inst.z;
    bumped.set(0, 0, 0, inst.z.value(0, 0, 0) + 1.0);
    const auto after = aggregate_hierarchy(bumped, inst.hierarchy, inst.weights);

    const std::string& ind = inst.z.indicators()[0];
    const std::string& sub = inst.hierarchy.indicator_subdomain.at(ind);
    const std::string& dom = inst.hierarchy.subdomain_domain.at(sub);
    CHECK(after.subdomain.at(0, after.subdomain.column_index(sub), 0) >
          before.subdomain.at(0, before.subdomain.column_index(sub), 0));
    CHECK(after.domain.at(0, after.domain.column_index(dom), 0) >
          before.domain.at(0, before.domain.column_index(dom), 0));
    CHECK(after.overall.at(0, 0, 0) > before.overall.at(0, 0, 0));
}

TEST_CASE("regional share-weighted sums match the worked example") {
    // region {A, B}, shares (0.25, 0.75), z = (0, 4) -> 0.25*0 + 0.75*4 = 3
    PanelTensor z({"A", "B"}, {"i"}, {2015}, Stage::raw);
    z.set(0, 0, 0, 0.0);
    z.set(1, 0, 0, 4.0);
    z.set_stage(Stage::normalized);
    Hierarchy h;
    h.indicator_subdomain = {{"i", "s"}};
    h.subdomain_domain = {{"s", "d"}};
    h.polarity = {{"i", 0}};
    h.unit_region = {{"A", "r"}, {"B", "r"}};
    h.finalize({"A", "B"});
    PopulationWeights pop;
    pop.units = {"A", "B"};
    pop.years = {2015};
    pop.weights = {0.25, 0.75};
    const auto regional = aggregate_regions(to_grid(z), pop, h);
    CHECK(regional.at(0, 0, 0) == doctest::Approx(3.0).epsilon(1e-15));

    // a single-region nation equals the national aggregate
    const auto national = aggregate_national(to_grid(z), pop);
    CHECK(national.at(0, 0, 0) == doctest::Approx(regional.at(0, 0, 0)).epsilon(1e-15));
}

TEST_CASE("presentation scale commutes with aggregation") {
    auto inst = random_instance(31, 40, 25);
    const auto agg = aggregate_hierarchy(inst.z, inst.hierarchy, inst.weights);

    auto scaled = inst.z;
    for (std::size_t u = 0; u < inst.z.unit_count(); ++u) {
        for (std::size_t i = 0; i < inst.z.indicator_count(); ++i) {
            for (std::size_t t = 0; t < inst.z.year_count(); ++t) {
                scaled.set(static_cast<int>(u), static_cast<int>(i), static_cast<int>(t),
                           to_index_scale(inst.z.value(static_cast<int>(u), static_cast<int>(i),
                                                       static_cast<int>(t))));
            }
        }
    }
    const auto agg_scaled = aggregate_hierarchy(scaled, inst.hierarchy, inst.weights);
    for (std::size_t k = 0; k < agg.overall.values.size(); ++k) {
        CHECK(agg_scaled.overall.values[k] ==
              doctest::Approx(to_index_scale(agg.overall.values[k])).epsilon(1e-10));
    }
}

TEST_CASE("aggregation order is interchangeable") {
    // smallest instance: the two routes are literally the same number
    auto trivial = random_instance(1, 2, 1);
    CHECK(verify_commutativity(trivial.z, trivial.hierarchy, trivial.weights,
                               trivial.population) <= 1e-10);

    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        auto inst = random_instance(seed, 60, 58);
        CHECK(verify_commutativity(inst.z, inst.hierarchy, inst.weights, inst.population) <=
              1e-10);
    }
}

TEST_CASE("geometric aggregation is the weighted geometric mean") {
    PanelTensor z({"c"}, {"i1", "i2"}, {2015}, Stage::raw);
    z.set(0, 0, 0, 4.0);
    z.set(0, 1, 0, 9.0);
    z.set_stage(Stage::normalized);
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s"}, {"i2", "s"}};
    h.subdomain_domain = {{"s", "d"}};
    h.polarity = {{"i1", 0}, {"i2", 0}};
    h.unit_region = {{"c", "r"}};
    h.finalize({"c"});
    const auto agg = aggregate_hierarchy(z, h, equal_weights(h), Aggregation::geometric);
    CHECK(agg.subdomain.at(0, 0, 0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(agg.overall.at(0, 0, 0) == doctest::Approx(6.0).epsilon(1e-12));

    // constants survive the geometric route too
    z.set(0, 0, 0, 2.5);
    z.set(0, 1, 0, 2.5);
    const auto constant = aggregate_hierarchy(z, h, equal_weights(h), Aggregation::geometric);
    CHECK(constant.overall.at(0, 0, 0) == doctest::Approx(2.5).epsilon(1e-12));

    // non-positive scores are rejected
    z.set(0, 0, 0, -1.0);
    CHECK_THROWS_AS(aggregate_hierarchy(z, h, equal_weights(h), Aggregation::geometric),
                    NumericError);
}

TEST_CASE("missing weights are rejected") {
    auto inst = random_instance(55, 10, 6);
    WeightSystem broken = inst.weights;
    broken.indicator.erase(inst.z.indicators()[0]);
    CHECK_THROWS_AS(aggregate_hierarchy(inst.z, inst.hierarchy, broken), DataError);
}
