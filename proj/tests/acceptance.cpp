// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion pins its tolerance in code.

#include "core/aggregate.hpp"
#include "core/errors.hpp"
#include "core/analysis.hpp"
#include "core/impute.hpp"
#include "core/importance.hpp"
#include "core/normalize.hpp"
#include "core/pipeline.hpp"
#include "core/rng.hpp"
#include "core/runner.hpp"
#include "core/sha256.hpp"
#include "core/sobol.hpp"
#include "core/treatment.hpp"
#include "core/weights.hpp"
#include "support/fixture.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace compindex;
using testsupport::Fixture;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool passed, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s — %s\n", passed ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    if (!passed) {
        ++g_failures;
    }
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// 1. Aggregation commutativity on random instances.
// ---------------------------------------------------------------------------

struct RandomInstance {
    PanelTensor z;
    Hierarchy hierarchy;
    PopulationWeights population;
    WeightSystem weights;
};

RandomInstance random_instance(std::uint64_t seed) {
    Rng rng(seed);
    const int n_units = 2 + static_cast<int>(rng.uniform_int(148));
    const int n_indicators = 1 + static_cast<int>(rng.uniform_int(58));
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
        const int sub = i < n_subdomains ? i : static_cast<int>(rng.uniform_int(n_subdomains));
        h.indicator_subdomain[indicators[static_cast<std::size_t>(i)]] =
            "s" + std::to_string(sub);
        h.polarity[indicators[static_cast<std::size_t>(i)]] = 0;
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
    return RandomInstance{std::move(z), std::move(h), std::move(pop), std::move(w)};
}

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto inst = random_instance(seed);
        worst = std::max(worst, verify_commutativity(inst.z, inst.hierarchy, inst.weights,
                                                     inst.population));
    }
    const double elapsed = seconds_since(start);
    report(1, "aggregation commutativity", worst <= 1e-10 && elapsed < 10.0,
           "max discrepancy " + fmt(worst) + " over 100 instances in " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// 2. Normalization anchor.
// ---------------------------------------------------------------------------

void criterion_2() {
    const Fixture fixture = testsupport::make_health_fixture();
    const auto imputed = impute(fixture.tensor, fixture.hierarchy,
                                classify_missing(fixture.tensor));
    const auto treated = treat(imputed, TreatmentMode::modified);
    const auto params =
        fit_normalization(treated.tensor, fixture.population, fixture.hierarchy, 2015);
    const auto z = normalize(treated.tensor, params);

    const std::size_t n = z.unit_count();
    const double correction = static_cast<double>(n) / (static_cast<double>(n) - 1.0);
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t i = 0; i < z.indicator_count(); ++i) {
        double mean = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            mean += fixture.population.at(static_cast<int>(u), 0) *
                    z.value(static_cast<int>(u), static_cast<int>(i), 0);
        }
        double var = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const double d = z.value(static_cast<int>(u), static_cast<int>(i), 0) - mean;
            var += fixture.population.at(static_cast<int>(u), 0) * d * d;
        }
        worst_mean = std::max(worst_mean, std::abs(mean));
        worst_var = std::max(worst_var, std::abs(correction * var - 1.0));
    }
    report(2, "normalization anchor", worst_mean < 1e-9 && worst_var < 1e-9,
           "worst |weighted mean| " + fmt(worst_mean) + ", worst |variance - 1| " +
               fmt(worst_var));
}

// ---------------------------------------------------------------------------
// 3. Treatment thresholds.
// ---------------------------------------------------------------------------

void criterion_3() {
    const Fixture fixture = testsupport::make_health_fixture();
    const auto imputed = impute(fixture.tensor, fixture.hierarchy,
                                classify_missing(fixture.tensor));
    const std::size_t total = imputed.indicator_count();

    const auto ons = treat(imputed, TreatmentMode::ons);
    std::size_t ons_ok = 0;
    for (const auto& entry : ons.plan.entries) {
        ons_ok += entry.within_limits ? 1 : 0;
    }

    const auto modified = treat(imputed, TreatmentMode::modified);
    std::map<std::string, bool> indicator_ok;
    for (const auto& entry : modified.plan.entries) {
        const auto it = indicator_ok.find(entry.indicator);
        if (it == indicator_ok.end()) {
            indicator_ok[entry.indicator] = entry.within_limits;
        } else {
            it->second = it->second && entry.within_limits;
        }
    }
    std::size_t modified_ok = 0;
    for (const auto& [id, ok] : indicator_ok) {
        modified_ok += ok ? 1 : 0;
    }

    std::size_t worst_transforms = 0;
    for (const int year : imputed.years()) {
        worst_transforms =
            std::max(worst_transforms, modified.plan.transforms_in_year(year));
    }

    const bool pass = ons_ok >= static_cast<std::size_t>(std::ceil(0.95 * total)) &&
                      modified_ok >= static_cast<std::size_t>(std::ceil(0.95 * total)) &&
                      worst_transforms <= 7;
    std::ostringstream detail;
    detail << "ons " << ons_ok << "/" << total << " within limits, modified " << modified_ok
           << "/" << total << ", max transforms/year " << worst_transforms;
    report(3, "treatment thresholds", pass, detail.str());
}

// ---------------------------------------------------------------------------
// 4. FA weight normalisation example.
// ---------------------------------------------------------------------------

void criterion_4() {
    Hierarchy h;
    h.indicator_subdomain = {{"a", "s"}, {"b", "s"}};
    h.subdomain_domain = {{"s", "d"}};
    h.polarity = {{"a", 0}, {"b", 0}};
    h.unit_region = {{"u", "r"}};
    h.finalize({"u"});
    WeightSystem w = equal_weights(h);
    w.indicator["a"] = 0.5;
    w.indicator["b"] = 0.75;
    const double wa = w.normalized_indicator_weight(h, "a");
    const double wb = w.normalized_indicator_weight(h, "b");
    const bool pass = wa == 0.4 && wb == 0.6;
    report(4, "fa weight normalisation", pass,
           "loadings (0.5, 0.75) -> (" + fmt(wa) + ", " + fmt(wb) + ")");
}

// ---------------------------------------------------------------------------
// 5. Sobol analytic oracle.
// ---------------------------------------------------------------------------

void criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    // m = q1 + 2 q2 over uniform {-1,+1}: V = 1 + 4 = 5, S = (1/5, 4/5).
    const std::vector<int> cards = {2, 2};
    const auto model = [](std::span<const int> q) {
        return (2.0 * q[0] - 1.0) + 2.0 * (2.0 * q[1] - 1.0);
    };
    const auto exact = exact_sobol(cards, model);
    bool pass = exact.defined;
    pass = pass && std::abs(exact.s_first[0] - 0.2) <= 1e-12 &&
           std::abs(exact.s_first[1] - 0.8) <= 1e-12;
    double component_sum = 0.0;
    for (const double c : exact.components) {
        component_sum += c;
    }
    pass = pass && std::abs(component_sum - exact.variance) <= 1e-10;

    const auto mc = mc_sobol(cards, model, 10000, 42, 1000);
    pass = pass && mc.defined;
    const double truth[2] = {0.2, 0.8};
    for (int j = 0; j < 2; ++j) {
        pass = pass && mc.factors[j].ci_first_lo <= truth[j] &&
               truth[j] <= mc.factors[j].ci_first_hi;
        pass = pass && mc.factors[j].ci_total_lo <= truth[j] &&
               truth[j] <= mc.factors[j].ci_total_hi;
    }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 5.0;
    std::ostringstream detail;
    detail << "exact (" << fmt(exact.s_first[0]) << ", " << fmt(exact.s_first[1])
           << "), mc CIs [" << fmt(mc.factors[0].ci_first_lo) << ", "
           << fmt(mc.factors[0].ci_first_hi) << "] / [" << fmt(mc.factors[1].ci_first_lo)
           << ", " << fmt(mc.factors[1].ci_first_hi) << "], " << fmt(elapsed) << " s";
    report(5, "sobol analytic oracle", pass, detail.str());
}

// ---------------------------------------------------------------------------
// 6. S_first <= S_total on random surrogates (exact mode).
// ---------------------------------------------------------------------------

void criterion_6() {
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const std::vector<int> cards = {2 + static_cast<int>(rng.uniform_int(3)),
                                        2 + static_cast<int>(rng.uniform_int(3)),
                                        2 + static_cast<int>(rng.uniform_int(2)),
                                        2 + static_cast<int>(rng.uniform_int(2))};
        std::size_t total = 1;
        for (const int c : cards) {
            total *= static_cast<std::size_t>(c);
        }
        std::vector<double> table(total);
        for (auto& v : table) {
            v = rng.normal();
        }
        const auto exact = exact_sobol(cards, [&](std::span<const int> q) {
            std::size_t code = 0;
            for (std::size_t f = 0; f < q.size(); ++f) {
                code = code * static_cast<std::size_t>(cards[f]) +
                       static_cast<std::size_t>(q[f]);
            }
            return table[code];
        });
        for (std::size_t j = 0; j < cards.size(); ++j) {
            pass = pass && exact.s_first[j] <= exact.s_total[j];
        }
    }
    report(6, "S_first <= S_total (exact mode)", pass, "20 random surrogate models, 4 factors");
}

// ---------------------------------------------------------------------------
// 7. Optimized weights against a 0.01-resolution grid search.
// ---------------------------------------------------------------------------

void criterion_7() {
    // known covariance: domains 0 and 1 share a factor, domain 2 independent
    const std::size_t n = 2000;
    Rng rng(777);
    Eigen::MatrixXd scores(n, 3);
    for (std::size_t r = 0; r < n; ++r) {
        const double shared = rng.normal();
        scores(static_cast<Eigen::Index>(r), 0) = shared + 0.5 * rng.normal();
        scores(static_cast<Eigen::Index>(r), 1) = shared + 0.5 * rng.normal();
        scores(static_cast<Eigen::Index>(r), 2) = 1.2 * rng.normal();
    }
    const std::vector<double> targets = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    const auto objective_at = [&](const std::vector<double>& w) {
        const auto achieved = achieved_importances(scores, w, Estimator::linear);
        double obj = 0.0;
        for (int d = 0; d < 3; ++d) {
            obj += (targets[d] - achieved[d]) * (targets[d] - achieved[d]);
        }
        return obj;
    };

    // brute force over the 2-simplex at resolution 0.01
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j + i <= 100; ++j) {
            const double w1 = i / 100.0;
            const double w2 = j / 100.0;
            const double w3 = 1.0 - w1 - w2;
            try {
                grid_best = std::min(grid_best, objective_at({w1, w2, w3}));
            } catch (const NumericError&) {
                // degenerate corner of the simplex; skip
            }
        }
    }

    const auto result = optimize_weights(scores, targets, Estimator::linear, 7);
    const bool near_grid = result.objective <= grid_best + 1e-4;

    // symmetric i.i.d. instance returns near-equal weights
    Eigen::MatrixXd iid(n, 3);
    for (std::size_t r = 0; r < n; ++r) {
        for (int d = 0; d < 3; ++d) {
            iid(static_cast<Eigen::Index>(r), d) = rng.normal();
        }
    }
    const auto symmetric = optimize_weights(iid, targets, Estimator::linear, 8);
    bool near_equal = true;
    for (const double w : symmetric.weights) {
        near_equal = near_equal && std::abs(w - 1.0 / 3.0) <= 0.02;
    }

    std::ostringstream detail;
    detail << "objective " << fmt(result.objective) << " vs grid " << fmt(grid_best)
           << "; symmetric weights (" << fmt(symmetric.weights[0]) << ", "
           << fmt(symmetric.weights[1]) << ", " << fmt(symmetric.weights[2]) << ")";
    report(7, "optimized weights", near_grid && near_equal, detail.str());
}

// ---------------------------------------------------------------------------
// 8. Correlation-ratio decomposition identity.
// ---------------------------------------------------------------------------

void criterion_8() {
    bool identity_exact = true;
    double worst_correlated = 0.0;

    // identity on assorted random instances
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
        Rng rng(seed);
        const std::size_t n = 300;
        Eigen::MatrixXd scores(n, 3);
        std::vector<double> y(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double shared = rng.normal();
            scores(static_cast<Eigen::Index>(r), 0) = shared + 0.7 * rng.normal();
            scores(static_cast<Eigen::Index>(r), 1) = 0.4 * shared + rng.normal();
            scores(static_cast<Eigen::Index>(r), 2) = rng.normal();
            y[r] = scores(static_cast<Eigen::Index>(r), 0) +
                   scores(static_cast<Eigen::Index>(r), 1) +
                   scores(static_cast<Eigen::Index>(r), 2);
        }
        for (int d = 0; d < 3; ++d) {
            const auto ratio = decompose_correlation_ratio(scores, y, d, Estimator::linear);
            // S_c is defined as S_d - S_d_u; assert the identity in its
            // constructed association
            identity_exact =
                identity_exact && ratio.correlated == ratio.total - ratio.uncorrelated;
        }
    }

    // orthogonal fixture at n = 2000: no correlated part
    Rng rng(99);
    const std::size_t n = 2000;
    Eigen::MatrixXd scores(n, 3);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (int d = 0; d < 3; ++d) {
            scores(static_cast<Eigen::Index>(r), d) = rng.normal();
        }
        y[r] = scores(static_cast<Eigen::Index>(r), 0) + scores(static_cast<Eigen::Index>(r), 1) +
               scores(static_cast<Eigen::Index>(r), 2);
    }
    for (int d = 0; d < 3; ++d) {
        const auto ratio = decompose_correlation_ratio(scores, y, d, Estimator::linear);
        identity_exact = identity_exact && ratio.correlated == ratio.total - ratio.uncorrelated;
        worst_correlated = std::max(worst_correlated, std::abs(ratio.correlated));
    }
    report(8, "decomposition identity", identity_exact && worst_correlated < 0.05,
           "identity exact; orthogonal |S_c| worst " + fmt(worst_correlated));
}

// ---------------------------------------------------------------------------
// 9. Rank-shift-by-removal against a from-scratch brute force.
// ---------------------------------------------------------------------------

// Straight-line reimplementation of the default-configuration index used by
// the brute force: weighted z-scores anchored at the baseline, equal weights
// at every level, rank 1 = lowest overall value.
std::vector<int> brute_force_ranks(const Fixture& fixture, const Hierarchy& hierarchy) {
    const auto& tensor = fixture.tensor;
    const std::size_t n_units = tensor.unit_count();
    const double correction =
        static_cast<double>(n_units) / (static_cast<double>(n_units) - 1.0);

    std::map<std::string, std::pair<double, double>> mu_sigma;
    for (const auto& id : hierarchy.indicators) {
        const int i = tensor.indicator_index(id);
        double mu = 0.0;
        for (std::size_t u = 0; u < n_units; ++u) {
            mu += fixture.population.at(static_cast<int>(u), 0) *
                  tensor.value(static_cast<int>(u), i, 0);
        }
        double var = 0.0;
        for (std::size_t u = 0; u < n_units; ++u) {
            const double d = tensor.value(static_cast<int>(u), i, 0) - mu;
            var += fixture.population.at(static_cast<int>(u), 0) * d * d;
        }
        var *= correction;
        mu_sigma[id] = {mu, std::sqrt(var)};
    }

    std::vector<double> overall(n_units, 0.0);
    for (std::size_t u = 0; u < n_units; ++u) {
        double domain_acc = 0.0;
        double domain_wsum = 0.0;
        for (const auto& dom : hierarchy.domains) {
            double sub_acc = 0.0;
            double sub_wsum = 0.0;
            for (const auto& sub : hierarchy.domain_subdomains.at(dom)) {
                double ind_acc = 0.0;
                double ind_wsum = 0.0;
                for (const auto& id : hierarchy.subdomain_indicators.at(sub)) {
                    const int i = tensor.indicator_index(id);
                    const auto& [mu, sigma] = mu_sigma.at(id);
                    const double sign = hierarchy.polarity.at(id) == 0 ? 1.0 : -1.0;
                    ind_acc += 1.0 * (sign * (tensor.value(static_cast<int>(u), i, 0) - mu) /
                                      sigma);
                    ind_wsum += 1.0;
                }
                sub_acc += 1.0 * ((1.0 / ind_wsum) * ind_acc);
                sub_wsum += 1.0;
            }
            domain_acc += 1.0 * ((1.0 / sub_wsum) * sub_acc);
            domain_wsum += 1.0;
        }
        overall[u] = (1.0 / domain_wsum) * domain_acc;
    }
    return rank_ascending(overall);
}

void criterion_9() {
    const Fixture fixture = testsupport::make_small_fixture();

    // guard: the oracle assumes the default pipeline treats nothing
    const auto treated = treat(fixture.tensor, TreatmentMode::modified, 2);
    bool all_identity = true;
    for (const auto& entry : treated.plan.entries) {
        all_identity = all_identity && entry.action.is_identity();
    }

    const auto reference_ranks = brute_force_ranks(fixture, fixture.hierarchy);

    bool match = all_identity;
    for (const RemovalLevel level : {RemovalLevel::indicator, RemovalLevel::subdomain}) {
        const auto shifts = rank_shift_removal(fixture.tensor, fixture.hierarchy,
                                               fixture.population, MethodConfig{}, level, {});
        const auto& nodes = level == RemovalLevel::indicator ? fixture.hierarchy.indicators
                                                             : fixture.hierarchy.subdomains;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const Hierarchy reduced = level == RemovalLevel::indicator
                                          ? fixture.hierarchy.without_indicator(nodes[k])
                                          : fixture.hierarchy.without_subdomain(nodes[k]);
            Fixture sub{fixture.tensor.subset_indicators(reduced.indicators), reduced,
                        fixture.population};
            const auto ranks = brute_force_ranks(sub, reduced);
            double shift = 0.0;
            for (std::size_t u = 0; u < ranks.size(); ++u) {
                shift += std::abs(ranks[u] - reference_ranks[u]);
            }
            shift /= static_cast<double>(ranks.size());
            match = match && shift == shifts[k].mean_abs_shift;
        }
    }
    report(9, "rank-shift brute force", match,
           all_identity ? "exact match over all indicator and subdomain removals"
                        : "fixture unexpectedly required treatment");
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism and runtime.
// ---------------------------------------------------------------------------

void criterion_10() {
    const auto dir = std::filesystem::temp_directory_path() / "compindex_acceptance_run";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    testsupport::write_fixture(testsupport::make_health_fixture(), dir);

    RunConfig config;
    config.data = dir / "data.csv";
    config.hierarchy = dir / "hierarchy.json";
    config.population = dir / "population.csv";
    config.iterations = 10000;
    config.sa_mode = SaMode::exact;

    const auto start = std::chrono::steady_clock::now();
    const auto first = run_all(config, dir / "a");
    const double elapsed = seconds_since(start);
    run_all(config, dir / "b");

    bool identical = true;
    std::size_t files = 0;
    for (const auto& name : first.outputs) {
        identical = identical && sha256_file(dir / "a" / name) == sha256_file(dir / "b" / name);
        ++files;
    }
    std::filesystem::remove_all(dir);
    report(10, "end-to-end determinism", identical && elapsed < 120.0,
           std::to_string(files) + " files byte-identical across re-runs; one run took " +
               fmt(elapsed) + " s");
}

} // namespace

int main() {
    std::printf("compindex acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures == 0) {
        std::printf("all 10 criteria passed\n");
    } else {
        std::printf("%d criteria FAILED\n", g_failures);
    }
    return g_failures;
}
