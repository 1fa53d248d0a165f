#pragma once

#include "core/panel.hpp"
#include "core/panel_io.hpp"

#include <cstdint>
#include <filesystem>

namespace compindex::testsupport {

struct FixtureSpec {
    int units = 149;
    int first_year = 2015;
    int years = 4;
    std::uint64_t seed = 90210;
    bool inject_missing = true;
};

struct Fixture {
    PanelTensor tensor;
    Hierarchy hierarchy;
    PopulationWeights population;
};

/// Synthetic panel mirroring the production structure: 3 domains split into
/// 17 subdomains over 58 indicators, 9 regions, population shares summing to
/// one per year. A strong common unit-quality factor drives all indicators;
/// five indicators are heavy-tailed (transform territory), five carry
/// isolated outliers (winsorization territory), the rest are tame. With
/// inject_missing the panel exercises every imputation rule, including one
/// indicator observed in a single year only.
Fixture make_health_fixture(const FixtureSpec& spec = {});

/// Small fixture for exact-oracle tests: 10 units, 6 indicators in 3
/// subdomains / 2 domains, 2 regions, values tame enough that every
/// treatment decision is the identity.
Fixture make_small_fixture(std::uint64_t seed = 7);

/// Writes data.csv, hierarchy.json and population.csv into dir.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

std::string hierarchy_to_json(const Hierarchy& hierarchy);
std::string population_to_csv(const PopulationWeights& population);

} // namespace compindex::testsupport
