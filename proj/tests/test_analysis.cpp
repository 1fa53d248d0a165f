#include "core/analysis.hpp"
#include "core/errors.hpp"
#include "core/normalize.hpp"
#include "core/rng.hpp"
#include "support/fixture.hpp"

#include <doctest.h>

#include <cmath>

using namespace compindex;

namespace {

PanelTensor screen_panel(std::uint64_t seed) {
    PanelTensor t({"a", "b", "c", "d", "e", "f", "g", "h"}, {"i1", "i2", "i3"}, {2015, 2016},
                  Stage::raw);
    Rng rng(seed);
    for (int u = 0; u < 8; ++u) {
        for (int year = 0; year < 2; ++year) {
            const double x = rng.normal();
            t.set(u, 0, year, x);
            t.set(u, 1, year, 2.0 * x + 1.0); // affine copy
            t.set(u, 2, year, -x);            // mirror
        }
    }
    t.set_stage(Stage::normalized);
    return t;
}

Hierarchy screen_hierarchy() {
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s1"}, {"i2", "s1"}, {"i3", "s2"}};
    h.subdomain_domain = {{"s1", "d1"}, {"s2", "d2"}};
    h.polarity = {{"i1", 0}, {"i2", 0}, {"i3", 0}};
    for (const char* u : {"a", "b", "c", "d", "e", "f", "g", "h"}) {
        h.unit_region[u] = "r";
    }
    h.finalize({"a", "b", "c", "d", "e", "f", "g", "h"});
    return h;
}

} // namespace

TEST_CASE("correlation screen flags the documented bands") {
    const auto screen = correlation_screen(screen_panel(3), screen_hierarchy(),
                                           ScreenLevel::indicator);
    REQUIRE(screen.row_ids.size() == 3);

    bool redundant = false, negative = false;
    for (const auto& flag : screen.flags) {
        if (flag.a == "i1" && flag.b == "i2") {
            CHECK(flag.kind == "redundant");
            CHECK(flag.rho == doctest::Approx(1.0).epsilon(1e-12));
            redundant = true;
        }
        if (flag.a == "i1" && flag.b == "i3") {
            CHECK(flag.kind == "negative");
            CHECK(flag.rho == doctest::Approx(-1.0).epsilon(1e-12));
            negative = true;
        }
    }
    CHECK(redundant);
    CHECK(negative);

    const auto csv_text = correlation_csv(screen);
    CHECK(csv_text.find("i1") != std::string::npos);
    const auto flags_text = correlation_flags_json(screen);
    CHECK(flags_text.find("redundant") != std::string::npos);
}

TEST_CASE("independent series with hundreds of observations raise no flags") {
    PanelTensor t({"u01", "u02", "u03", "u04", "u05", "u06", "u07", "u08", "u09", "u10",
                   "u11", "u12", "u13", "u14", "u15", "u16", "u17", "u18", "u19", "u20",
                   "u21", "u22", "u23", "u24", "u25", "u26", "u27", "u28", "u29", "u30"},
                  {"i1", "i2"}, {2015, 2016, 2017, 2018}, Stage::raw);
    Rng rng(6);
    for (int u = 0; u < 30; ++u) {
        for (int year = 0; year < 4; ++year) {
            t.set(u, 0, year, rng.normal());
            t.set(u, 1, year, rng.normal());
        }
    }
    t.set_stage(Stage::normalized);
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s1"}, {"i2", "s2"}};
    h.subdomain_domain = {{"s1", "d1"}, {"s2", "d2"}};
    h.polarity = {{"i1", 0}, {"i2", 0}};
    for (const auto& u : t.units()) {
        h.unit_region[u] = "r";
    }
    h.finalize(t.units());
    const auto screen = correlation_screen(t, h, ScreenLevel::indicator);
    CHECK(std::abs(screen.rho(0, 1)) < 0.15);
    CHECK(screen.flags.empty());
}

TEST_CASE("cross-level screen correlates indicators with foreign subdomains") {
    const auto screen = correlation_screen(screen_panel(9), screen_hierarchy(),
                                           ScreenLevel::indicator_vs_subdomain);
    CHECK(screen.row_ids.size() == 3);
    CHECK(screen.col_ids.size() == 2);
    // i3 = -i1 and subdomain s1 is driven by i1, so the foreign pair flags
    bool found = false;
    for (const auto& flag : screen.flags) {
        if (flag.a == "i3" && flag.b == "s1") {
            CHECK(flag.kind == "negative");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("zero-variance series are excluded with a warning") {
    auto t = screen_panel(12);
    for (int u = 0; u < 8; ++u) {
        for (int year = 0; year < 2; ++year) {
            t.set(u, 1, year, 5.0);
        }
    }
    const auto screen = correlation_screen(t, screen_hierarchy(), ScreenLevel::indicator);
    CHECK(screen.row_ids.size() == 2);
    REQUIRE(screen.excluded.size() == 1);
    CHECK(screen.excluded[0] == "i2");
}

TEST_CASE("sensitivity analysis on the health fixture") {
    auto fixture = testsupport::make_health_fixture({.units = 25});
    PipelineEvaluator evaluator(fixture.tensor, fixture.hierarchy, fixture.population, {});

    SaOptions options;
    options.mode = SaMode::exact;
    const auto exact = sobol_sa(evaluator, options);
    REQUIRE(exact.factors.size() == 4);
    CHECK(exact.n_evaluations == 24);
    CHECK(exact.max_anova_residual <= 1e-10);
    for (const auto& f : exact.factors) {
        if (f.defined) {
            CHECK(f.s_first <= f.s_total + 1e-12);
            CHECK(f.s_first >= -1e-9);
        }
    }
    CHECK(exact.per_unit.size() == 25);

    SaOptions mc;
    mc.mode = SaMode::montecarlo;
    mc.iterations = 10000;
    mc.bootstrap = 400;
    mc.seed = 11;
    const auto estimated = sobol_sa(evaluator, mc);
    for (std::size_t j = 0; j < 4; ++j) {
        if (!estimated.factors[j].defined || !exact.factors[j].defined) {
            continue;
        }
        // the exact averages sit inside (a whisker of) the bootstrap CIs
        CHECK(estimated.factors[j].ci_first_lo - 0.02 <= exact.factors[j].s_first);
        CHECK(estimated.factors[j].ci_first_hi + 0.02 >= exact.factors[j].s_first);
        CHECK(estimated.factors[j].ci_total_lo - 0.02 <= exact.factors[j].s_total);
        CHECK(estimated.factors[j].ci_total_hi + 0.02 >= exact.factors[j].s_total);
    }

    const auto csv_text = sa_csv(estimated);
    CHECK(csv_text.find("winsorization") != std::string::npos);
    CHECK(sa_per_unit_csv(estimated).find("utla001") != std::string::npos);
}

TEST_CASE("per-domain output selection") {
    auto fixture = testsupport::make_health_fixture({.units = 20});
    PipelineEvaluator evaluator(fixture.tensor, fixture.hierarchy, fixture.population, {});
    SaOptions options;
    options.mode = SaMode::exact;
    options.output = output_selector_from_string("domain:lives");
    CHECK_NOTHROW(sobol_sa(evaluator, options));
    CHECK_THROWS_AS(output_selector_from_string("domain:"), ConfigError);
    CHECK_THROWS_AS(output_selector_from_string("nope"), ConfigError);
}

TEST_CASE("uncertainty bands: quantiles are ordered and reference sits inside") {
    auto fixture = testsupport::make_health_fixture({.units = 30});
    PipelineEvaluator evaluator(fixture.tensor, fixture.hierarchy, fixture.population, {});
    const auto bands = uncertainty_bands(evaluator, 2000, 4, MethodConfig{});
    REQUIRE(bands.size() == 30);
    for (const auto& band : bands) {
        CHECK(band.p5 <= band.median);
        CHECK(band.median <= band.p95);
        CHECK(band.p5 >= 1.0);
        CHECK(band.p95 <= 30.0);
        CHECK(band.reference >= 1);
        CHECK(band.reference <= 30);
    }
    // identical seeds reproduce identical bands
    const auto again = uncertainty_bands(evaluator, 2000, 4, MethodConfig{});
    for (std::size_t u = 0; u < bands.size(); ++u) {
        CHECK(bands[u].median == again[u].median);
        CHECK(bands[u].p5 == again[u].p5);
        CHECK(bands[u].p95 == again[u].p95);
    }
}

TEST_CASE("rank uncertainty concentrates in the middle of the table") {
    // the bundled fixture has a dominant unit-quality factor, so extreme
    // units keep their ranks while mid-table units swap under method changes
    auto fixture = testsupport::make_health_fixture();
    PipelineEvaluator evaluator(fixture.tensor, fixture.hierarchy, fixture.population, {});
    const auto bands = uncertainty_bands(evaluator, 3000, 5, MethodConfig{});
    const int n = static_cast<int>(bands.size());
    double tail_width = 0.0, middle_width = 0.0;
    int tail_n = 0, middle_n = 0;
    for (const auto& band : bands) {
        const double width = band.p95 - band.p5;
        if (band.reference <= n / 10 || band.reference > n - n / 10) {
            tail_width += width;
            ++tail_n;
        }
        if (band.reference > 2 * n / 5 && band.reference <= 3 * n / 5) {
            middle_width += width;
            ++middle_n;
        }
    }
    REQUIRE(tail_n > 0);
    REQUIRE(middle_n > 0);
    CHECK(tail_width / tail_n < middle_width / middle_n);
}

TEST_CASE("constant output over the space collapses the bands") {
    // the tame fixture plus equal/zscore-only variation still moves ranks a
    // little; instead collapse the space artificially by using a fixture so
    // separated that every config agrees on the ordering
    auto fixture = testsupport::make_small_fixture();
    PipelineEvaluator evaluator(fixture.tensor, fixture.hierarchy, fixture.population, {});
    bool all_equal = true;
    const auto& reference = evaluator.evaluate(MethodConfig{});
    for (const auto& config : MethodSpace::all()) {
        if (evaluator.evaluate(config).ranks != reference.ranks) {
            all_equal = false;
        }
    }
    if (all_equal) {
        const auto bands = uncertainty_bands(evaluator, 500, 9, MethodConfig{});
        for (const auto& band : bands) {
            CHECK(band.p5 == band.median);
            CHECK(band.median == band.p95);
            CHECK(band.median == doctest::Approx(static_cast<double>(band.reference)));
        }
    } else {
        WARN("small fixture no longer rank-stable across the method space");
    }
}

TEST_CASE("rank-shift removal: no-op removals shift nothing") {
    // a duplicated indicator inside the same subdomain: removing one copy
    // leaves the subdomain mean unchanged under equal weights
    PanelTensor t({"u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9", "ua"},
                  {"i1", "i2", "i3"}, {2015}, Stage::raw);
    Rng rng(17);
    for (int u = 0; u < 10; ++u) {
        const double a = 10.0 + u + 0.2 * rng.normal();
        const double b = 30.0 - 2.0 * u + 0.2 * rng.normal();
        t.set(u, 0, 0, a);
        t.set(u, 1, 0, a); // exact copy of i1
        t.set(u, 2, 0, b);
    }
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s1"}, {"i2", "s1"}, {"i3", "s2"}};
    h.subdomain_domain = {{"s1", "d1"}, {"s2", "d2"}};
    h.polarity = {{"i1", 0}, {"i2", 0}, {"i3", 0}};
    for (const auto& u : t.units()) {
        h.unit_region[u] = "r";
    }
    h.finalize(t.units());
    PopulationWeights pop;
    pop.units = t.units();
    pop.years = {2015};
    pop.weights.assign(10, 0.1);

    const auto shifts =
        rank_shift_removal(t, h, pop, MethodConfig{}, RemovalLevel::indicator, {});
    REQUIRE(shifts.size() == 3);
    for (const auto& shift : shifts) {
        if (shift.node == "i1" || shift.node == "i2") {
            CHECK(shift.mean_abs_shift == 0.0);
        }
    }
}

TEST_CASE("a dominant contrarian indicator produces the largest shift") {
    // i1 and i2 track the common quality signal; i3 carries a strong
    // independent signal that reorders the blend. Removing i3 must move
    // ranks more than removing either of the agreeing twins.
    PanelTensor t({"u01", "u02", "u03", "u04", "u05", "u06", "u07", "u08", "u09", "u10",
                   "u11", "u12"},
                  {"i1", "i2", "i3"}, {2015}, Stage::raw);
    Rng rng(29);
    for (int u = 0; u < 12; ++u) {
        const double quality = static_cast<double>(u);
        const double divergent = static_cast<double>((u * 5) % 12);
        t.set(u, 0, 0, quality + 0.05 * rng.normal());
        t.set(u, 1, 0, quality + 0.05 * rng.normal());
        t.set(u, 2, 0, divergent + 0.05 * rng.normal());
    }
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s1"}, {"i2", "s2"}, {"i3", "s3"}};
    h.subdomain_domain = {{"s1", "d1"}, {"s2", "d1"}, {"s3", "d2"}};
    h.polarity = {{"i1", 0}, {"i2", 0}, {"i3", 0}};
    for (const auto& u : t.units()) {
        h.unit_region[u] = "r";
    }
    h.finalize(t.units());
    PopulationWeights pop;
    pop.units = t.units();
    pop.years = {2015};
    pop.weights.assign(12, 1.0 / 12.0);

    const auto shifts =
        rank_shift_removal(t, h, pop, MethodConfig{}, RemovalLevel::indicator, {});
    REQUIRE(shifts.size() == 3);
    double contrarian = 0.0, best_other = 0.0;
    for (const auto& shift : shifts) {
        if (shift.node == "i3") {
            contrarian = shift.mean_abs_shift;
        } else {
            best_other = std::max(best_other, shift.mean_abs_shift);
        }
    }
    CHECK(contrarian > best_other);
    CHECK(contrarian > 0.0);
}

TEST_CASE("rank-shift removal covers subdomains and rejects emptying the index") {
    auto fixture = testsupport::make_small_fixture();
    const auto shifts = rank_shift_removal(fixture.tensor, fixture.hierarchy,
                                           fixture.population, MethodConfig{},
                                           RemovalLevel::subdomain, {});
    CHECK(shifts.size() == fixture.hierarchy.subdomains.size());
    for (const auto& shift : shifts) {
        CHECK(shift.mean_abs_shift >= 0.0);
    }

    // removing the only subdomain of a one-subdomain hierarchy must fail
    Hierarchy h;
    h.indicator_subdomain = {{"i1", "s1"}};
    h.subdomain_domain = {{"s1", "d1"}};
    h.polarity = {{"i1", 0}};
    h.unit_region = {{"a", "r"}, {"b", "r"}};
    h.finalize({"a", "b"});
    CHECK_THROWS_AS(h.without_subdomain("s1"), DataError);
    CHECK_THROWS_AS(h.without_indicator("i1"), DataError);
}
