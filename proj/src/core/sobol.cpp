#include "core/sobol.hpp"

#include "core/errors.hpp"
#include "core/moments.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>

namespace compindex {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (const double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (const double x : v) {
        const double d = x - m;
        s += d * d;
    }
    return s / static_cast<double>(v.size());
}

} // namespace

ExactSobol exact_sobol(std::span<const int> cardinalities, const DiscreteModel& model) {
    const int k = static_cast<int>(cardinalities.size());
    if (k < 1 || k > 20) {
        throw ConfigError("exact_sobol supports 1..20 factors");
    }
    std::size_t total = 1;
    for (const int c : cardinalities) {
        if (c < 1) {
            throw ConfigError("factor cardinality must be positive");
        }
        total *= static_cast<std::size_t>(c);
    }

    // Evaluate every point of the factorial grid (mixed-radix enumeration).
    std::vector<double> f(total);
    std::vector<int> levels(k, 0);
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rem = p;
        for (int j = k - 1; j >= 0; --j) {
            levels[j] = static_cast<int>(rem % cardinalities[j]);
            rem /= cardinalities[j];
        }
        f[p] = model(levels);
    }

    ExactSobol out;
    out.variance = population_variance(f);
    out.s_first.assign(k, 0.0);
    out.s_total.assign(k, 0.0);
    out.components.assign(std::size_t{1} << k, 0.0);
    if (!(out.variance > 0.0)) {
        return out; // constant output: indices undefined
    }
    out.defined = true;

    // Conditional variances Var(E[m|q_u]) per subset, then the ANOVA
    // components via Moebius subtraction (subsets of u have smaller masks).
    const std::size_t n_masks = std::size_t{1} << k;
    for (std::size_t mask = 1; mask < n_masks; ++mask) {
        std::size_t n_cells = 1;
        for (int j = 0; j < k; ++j) {
            if (mask & (std::size_t{1} << j)) {
                n_cells *= static_cast<std::size_t>(cardinalities[j]);
            }
        }
        std::vector<double> sums(n_cells, 0.0);
        std::vector<std::size_t> counts(n_cells, 0);
        std::vector<int> pt(k, 0);
        for (std::size_t p = 0; p < total; ++p) {
            std::size_t rem = p;
            for (int j = k - 1; j >= 0; --j) {
                pt[j] = static_cast<int>(rem % cardinalities[j]);
                rem /= cardinalities[j];
            }
            std::size_t cell = 0;
            for (int j = 0; j < k; ++j) {
                if (mask & (std::size_t{1} << j)) {
                    cell = cell * static_cast<std::size_t>(cardinalities[j]) +
                           static_cast<std::size_t>(pt[j]);
                }
            }
            sums[cell] += f[p];
            counts[cell] += 1;
        }
        std::vector<double> cell_means(n_cells);
        for (std::size_t c = 0; c < n_cells; ++c) {
            cell_means[c] = sums[c] / static_cast<double>(counts[c]);
        }
        double component = population_variance(cell_means);
        for (std::size_t sub = (mask - 1) & mask; sub != 0; sub = (sub - 1) & mask) {
            component -= out.components[sub];
        }
        out.components[mask] = component;
    }

    for (int j = 0; j < k; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        out.s_first[j] = out.components[bit] / out.variance;
        double sum = 0.0;
        for (std::size_t mask = 1; mask < n_masks; ++mask) {
            if (mask & bit) {
                sum += out.components[mask];
            }
        }
        out.s_total[j] = sum / out.variance;
    }
    return out;
}

SaltelliDesign saltelli_design(std::span<const int> cardinalities, int n_base,
                               std::uint64_t seed) {
    const int k = static_cast<int>(cardinalities.size());
    const std::size_t n = static_cast<std::size_t>(n_base);
    SaltelliDesign d;
    d.a.assign(n, std::vector<int>(k));
    d.b.assign(n, std::vector<int>(k));
    for (std::size_t r = 0; r < n; ++r) {
        Rng rng(seed, r);
        for (int j = 0; j < k; ++j) {
            d.a[r][j] =
                static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(cardinalities[j])));
        }
        for (int j = 0; j < k; ++j) {
            d.b[r][j] =
                static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(cardinalities[j])));
        }
    }
    return d;
}

SaltelliRowEstimate saltelli_jansen(std::span<const double> f_a, std::span<const double> f_b,
                                    std::span<const double> f_ab_i,
                                    std::span<const std::size_t> rows) {
    const double n = static_cast<double>(rows.size());
    double mean = 0.0;
    for (const std::size_t r : rows) {
        mean += f_a[r] + f_b[r];
    }
    mean /= 2.0 * n;
    double var = 0.0;
    for (const std::size_t r : rows) {
        const double da = f_a[r] - mean;
        const double db = f_b[r] - mean;
        var += da * da + db * db;
    }
    var /= 2.0 * n;
    SaltelliRowEstimate out;
    if (!(var > 0.0)) {
        return out;
    }
    out.defined = true;
    double first = 0.0, total = 0.0;
    for (const std::size_t r : rows) {
        first += f_b[r] * (f_ab_i[r] - f_a[r]);
        const double d = f_a[r] - f_ab_i[r];
        total += d * d;
    }
    out.s_first = first / (n * var);
    out.s_total = total / (2.0 * n * var);
    return out;
}

std::vector<std::vector<std::size_t>> bootstrap_rows(std::size_t n, int n_bootstrap,
                                                     std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n_bootstrap));
    const std::uint64_t stream = mix_seed(seed, 0x626F6F74);
    for (int b = 0; b < n_bootstrap; ++b) {
        Rng rng(stream, static_cast<std::uint64_t>(b));
        auto& rows = out[static_cast<std::size_t>(b)];
        rows.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            rows[r] = rng.uniform_int(static_cast<std::uint32_t>(n));
        }
    }
    return out;
}

McSobol mc_sobol(std::span<const int> cardinalities, const DiscreteModel& model, int n_base,
                 std::uint64_t seed, int n_bootstrap) {
    const int k = static_cast<int>(cardinalities.size());
    if (k < 1) {
        throw ConfigError("mc_sobol needs at least one factor");
    }
    if (n_base < 2) {
        throw ConfigError("mc_sobol needs a base sample of at least 2");
    }
    const std::size_t n = static_cast<std::size_t>(n_base);
    const auto design = saltelli_design(cardinalities, n_base, seed);

    std::vector<double> f_a(n), f_b(n);
    std::vector<std::vector<double>> f_ab(k, std::vector<double>(n));
    std::vector<int> point(k);
    for (std::size_t r = 0; r < n; ++r) {
        f_a[r] = model(design.a[r]);
        f_b[r] = model(design.b[r]);
        for (int j = 0; j < k; ++j) {
            point = design.a[r];
            point[j] = design.b[r][j];
            f_ab[static_cast<std::size_t>(j)][r] = model(point);
        }
    }

    McSobol out;
    out.n_evaluations = n_base * (k + 2);
    out.factors.resize(k);

    std::vector<double> pooled;
    pooled.reserve(2 * n);
    pooled.insert(pooled.end(), f_a.begin(), f_a.end());
    pooled.insert(pooled.end(), f_b.begin(), f_b.end());
    out.variance = population_variance(pooled);
    if (!(out.variance > 0.0)) {
        return out; // constant output: indices undefined
    }
    out.defined = true;

    std::vector<std::size_t> all_rows(n);
    for (std::size_t r = 0; r < n; ++r) {
        all_rows[r] = r;
    }
    for (int j = 0; j < k; ++j) {
        const auto est = saltelli_jansen(f_a, f_b, f_ab[static_cast<std::size_t>(j)], all_rows);
        out.factors[static_cast<std::size_t>(j)].s_first = est.s_first;
        out.factors[static_cast<std::size_t>(j)].s_total = est.s_total;
    }

    if (n_bootstrap > 0) {
        const auto resamples = bootstrap_rows(n, n_bootstrap, seed);
        std::vector<std::vector<double>> boot_first(k), boot_total(k);
        for (const auto& rows : resamples) {
            for (int j = 0; j < k; ++j) {
                const auto est =
                    saltelli_jansen(f_a, f_b, f_ab[static_cast<std::size_t>(j)], rows);
                boot_first[j].push_back(est.s_first);
                boot_total[j].push_back(est.s_total);
            }
        }
        for (int j = 0; j < k; ++j) {
            std::sort(boot_first[j].begin(), boot_first[j].end());
            std::sort(boot_total[j].begin(), boot_total[j].end());
            auto& fac = out.factors[static_cast<std::size_t>(j)];
            fac.ci_first_lo = quantile(boot_first[j], 0.025);
            fac.ci_first_hi = quantile(boot_first[j], 0.975);
            fac.ci_total_lo = quantile(boot_total[j], 0.025);
            fac.ci_total_hi = quantile(boot_total[j], 0.975);
        }
    }
    return out;
}

} // namespace compindex
