#include "core/treatment.hpp"

#include "core/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace compindex {

namespace {

using nlohmann::json;

std::optional<MomentSummary> try_moments(std::span<const double> series) {
    try {
        return moments(series);
    } catch (const NumericError&) {
        return std::nullopt;
    }
}

// |G1| of a candidate series; 0 when undefined (constant counts as flat).
double abs_skew_of(const std::vector<double>& series) {
    const auto m = try_moments(series);
    return m ? std::abs(m->skewness) : 0.0;
}

struct WinsorOutcome {
    std::vector<double> values;
    int upper = 0;
    int lower = 0;
};

WinsorOutcome winsorize_impl(std::span<const double> series, int k, WinsorTail tail) {
    const std::size_t n = series.size();
    if (k < 0) {
        throw NumericError("winsorize: negative point count");
    }
    if (static_cast<std::size_t>(k) >= n) {
        throw NumericError("winsorize: k = " + std::to_string(k) +
                           " must be smaller than the series length " + std::to_string(n));
    }
    WinsorOutcome out;
    out.values.assign(series.begin(), series.end());
    if (k == 0) {
        return out;
    }

    std::vector<bool> snapped(n, false);
    std::vector<std::size_t> upper_positions, lower_positions;

    for (int step = 0; step < k; ++step) {
        std::size_t hi = n, lo = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (snapped[j]) {
                continue;
            }
            if (hi == n || series[j] > series[hi]) {
                hi = j;
            }
            if (lo == n || series[j] < series[lo]) {
                lo = j;
            }
        }

        // Build both candidate outcomes. Snapping one more point on a tail
        // moves every previously snapped point on that tail down to the new
        // order statistic with it.
        std::vector<double> upper_candidate = out.values;
        double snap_u = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!snapped[j] && j != hi) {
                snap_u = std::max(snap_u, series[j]);
            }
        }
        upper_candidate[hi] = snap_u;
        for (const std::size_t p : upper_positions) {
            upper_candidate[p] = snap_u;
        }

        std::vector<double> lower_candidate = out.values;
        double snap_l = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!snapped[j] && j != lo) {
                snap_l = std::min(snap_l, series[j]);
            }
        }
        lower_candidate[lo] = snap_l;
        for (const std::size_t p : lower_positions) {
            lower_candidate[p] = snap_l;
        }

        bool take_upper = true;
        if (tail == WinsorTail::upper) {
            take_upper = true;
        } else if (tail == WinsorTail::lower) {
            take_upper = false;
        } else {
            // Snap whichever tail leaves the flatter distribution; ties go
            // to the upper tail. (Judged on the snapped outcome: removing
            // one of several extreme points can raise |skewness| even when
            // reassigning it lowers it.)
            take_upper = abs_skew_of(upper_candidate) <= abs_skew_of(lower_candidate);
        }

        if (take_upper) {
            snapped[hi] = true;
            upper_positions.push_back(hi);
            out.values = std::move(upper_candidate);
        } else {
            snapped[lo] = true;
            lower_positions.push_back(lo);
            out.values = std::move(lower_candidate);
        }
    }
    out.upper = static_cast<int>(upper_positions.size());
    out.lower = static_cast<int>(lower_positions.size());
    return out;
}

} // namespace

std::string to_string(Transform f) {
    switch (f) {
    case Transform::identity:
        return "identity";
    case Transform::log_e:
        return "log";
    case Transform::sqrt_root:
        return "sqrt";
    case Transform::cbrt_root:
        return "cbrt";
    case Transform::square:
        return "square";
    case Transform::cube:
        return "cube";
    case Transform::neg_reciprocal:
        return "neg-reciprocal";
    }
    return "?";
}

Transform transform_from_string(const std::string& name) {
    for (const Transform f :
         {Transform::identity, Transform::log_e, Transform::sqrt_root, Transform::cbrt_root,
          Transform::square, Transform::cube, Transform::neg_reciprocal}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw ConfigError("unknown transform: " + name);
}

double apply_transform(Transform f, double x) {
    switch (f) {
    case Transform::identity:
        return x;
    case Transform::log_e:
        return std::log(x);
    case Transform::sqrt_root:
        return std::sqrt(x);
    case Transform::cbrt_root:
        return std::cbrt(x);
    case Transform::square:
        return x * x;
    case Transform::cube:
        return x * x * x;
    case Transform::neg_reciprocal:
        return -1.0 / x;
    }
    return x;
}

bool transform_feasible(Transform f, std::span<const double> series) {
    switch (f) {
    case Transform::log_e:
    case Transform::neg_reciprocal:
        return std::all_of(series.begin(), series.end(), [](double x) { return x > 0.0; });
    case Transform::sqrt_root:
        return std::all_of(series.begin(), series.end(), [](double x) { return x >= 0.0; });
    default:
        return true;
    }
}

std::vector<double> winsorize(std::span<const double> series, int k, WinsorTail tail) {
    return winsorize_impl(series, k, tail).values;
}

const std::vector<Transform>& default_transform_candidates() {
    static const std::vector<Transform> all = {
        Transform::identity, Transform::log_e,  Transform::sqrt_root, Transform::cbrt_root,
        Transform::square,   Transform::cube,   Transform::neg_reciprocal,
    };
    return all;
}

std::size_t TreatmentPlan::transforms_in_year(int year) const {
    std::size_t n = 0;
    for (const auto& e : entries) {
        if (e.action.has_transform() && (!e.year || *e.year == year)) {
            ++n;
        }
    }
    return n;
}

namespace {

double feasibility_score(const MomentSummary& m) {
    return std::max(1.0, std::max(std::abs(m.skewness) / 2.0, std::abs(m.excess_kurtosis) / 3.5));
}

struct Candidate {
    Transform transform;
    MomentSummary after;
    std::vector<double> values;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
    const double fa = feasibility_score(a.after);
    const double fb = feasibility_score(b.after);
    if (fa != fb) {
        return fa < fb;
    }
    const double sa = std::abs(a.after.skewness) + std::abs(a.after.excess_kurtosis);
    const double sb = std::abs(b.after.skewness) + std::abs(b.after.excess_kurtosis);
    if (sa != sb) {
        return sa < sb;
    }
    if ((a.transform == Transform::identity) != (b.transform == Transform::identity)) {
        return a.transform == Transform::identity;
    }
    return static_cast<int>(a.transform) < static_cast<int>(b.transform);
}

struct SelectedTransform {
    TreatmentEntry entry;
    std::vector<double> values;
};

SelectedTransform select_transform_full(std::span<const double> series,
                                        const std::vector<Transform>& candidates) {
    std::vector<Candidate> feasible;
    for (const Transform f : candidates) {
        if (!transform_feasible(f, series)) {
            continue;
        }
        Candidate c;
        c.transform = f;
        c.values.reserve(series.size());
        bool finite = true;
        for (const double x : series) {
            const double y = apply_transform(f, x);
            if (!std::isfinite(y)) {
                finite = false;
                break;
            }
            c.values.push_back(y);
        }
        if (!finite) {
            continue;
        }
        const auto m = try_moments(c.values);
        if (!m) {
            continue; // degenerate after transform
        }
        c.after = *m;
        feasible.push_back(std::move(c));
    }
    if (feasible.empty()) {
        throw NumericError("no feasible transform for series");
    }
    const auto best = std::min_element(feasible.begin(), feasible.end(), candidate_less);

    SelectedTransform out;
    out.entry.action.transform = best->transform;
    out.entry.before = moments(series);
    out.entry.after = best->after;
    out.entry.within_limits = within_treatment_limits(best->after);
    out.entry.best_effort = !out.entry.within_limits;
    out.values = std::move(best->values);
    return out;
}

struct TreatedSeries {
    TreatmentEntry entry;
    std::vector<double> values;
};

TreatedSeries treat_modified_full(std::span<const double> series, int k_max) {
    const std::size_t n = series.size();
    if (k_max < 0) {
        k_max = std::max(2, static_cast<int>(std::ceil(0.02 * static_cast<double>(n))));
    }
    k_max = std::min(k_max, static_cast<int>(n) - 1);

    TreatedSeries out;
    out.entry.before = moments(series);

    for (int k = 0; k <= k_max; ++k) {
        const auto w = winsorize_impl(series, k, WinsorTail::automatic);
        const auto m = try_moments(w.values);
        if (m && within_treatment_limits(*m)) {
            out.entry.action.winsorized_points = k;
            out.entry.action.upper_points = w.upper;
            out.entry.action.lower_points = w.lower;
            out.entry.after = *m;
            out.entry.within_limits = true;
            out.values = w.values;
            return out;
        }
    }

    // Winsorisation alone cannot reach the limits; run the transform search
    // on the fully winsorised series.
    const auto w = winsorize_impl(series, k_max, WinsorTail::automatic);
    auto selected = select_transform_full(w.values, default_transform_candidates());
    out.entry.action.winsorized_points = k_max;
    out.entry.action.upper_points = w.upper;
    out.entry.action.lower_points = w.lower;
    out.entry.action.transform = selected.entry.action.transform;
    out.entry.after = selected.entry.after;
    out.entry.within_limits = selected.entry.within_limits;
    out.entry.best_effort = !selected.entry.within_limits;
    out.values = std::move(selected.values);
    return out;
}

} // namespace

TreatmentEntry select_transform_ons(std::span<const double> series,
                                    const std::vector<Transform>& candidates) {
    return select_transform_full(series, candidates).entry;
}

TreatmentEntry treat_modified_series(std::span<const double> series, int k_max) {
    return treat_modified_full(series, k_max).entry;
}

TreatmentResult treat(const PanelTensor& imputed, TreatmentMode mode, std::optional<int> k_max) {
    if (imputed.missing_count() > 0) {
        throw DataError("treatment requires a complete tensor");
    }

    PanelTensor out = imputed;
    TreatmentPlan plan;
    plan.mode = mode;

    const int units = static_cast<int>(imputed.unit_count());
    const int years = static_cast<int>(imputed.year_count());

    for (std::size_t i = 0; i < imputed.indicator_count(); ++i) {
        const std::string& id = imputed.indicators()[i];
        if (mode == TreatmentMode::ons) {
            const auto series = imputed.indicator_values(static_cast<int>(i));
            auto selected = select_transform_full(series, default_transform_candidates());
            selected.entry.indicator = id;
            // Flattened series is unit-major: row u*years + t.
            for (int u = 0; u < units; ++u) {
                for (int t = 0; t < years; ++t) {
                    out.set(u, static_cast<int>(i), t,
                            selected.values[static_cast<std::size_t>(u) * years + t]);
                }
            }
            plan.entries.push_back(std::move(selected.entry));
        } else {
            for (int t = 0; t < years; ++t) {
                const auto series = imputed.indicator_year_values(static_cast<int>(i), t);
                auto treated = treat_modified_full(series, k_max.value_or(-1));
                treated.entry.indicator = id;
                treated.entry.year = imputed.years()[t];
                for (int u = 0; u < units; ++u) {
                    out.set(u, static_cast<int>(i), t, treated.values[u]);
                }
                plan.entries.push_back(std::move(treated.entry));
            }
        }
    }

    out.set_stage(Stage::treated);
    return TreatmentResult{std::move(out), std::move(plan)};
}

namespace {

json moments_json(const MomentSummary& m) {
    return {{"skewness", m.skewness},
            {"excess_kurtosis", m.excess_kurtosis},
            {"median", m.median},
            {"iqr", m.iqr}};
}

} // namespace

std::string treatment_plan_json(const TreatmentPlan& plan) {
    json doc;
    doc["mode"] = plan.mode == TreatmentMode::ons ? "ons" : "modified";
    json entries = json::array();
    for (const auto& e : plan.entries) {
        json j;
        j["indicator"] = e.indicator;
        if (e.year) {
            j["year"] = *e.year;
        }
        j["action"] = {{"winsorized_points", e.action.winsorized_points},
                       {"upper_points", e.action.upper_points},
                       {"lower_points", e.action.lower_points},
                       {"transform", to_string(e.action.transform)}};
        j["before"] = moments_json(e.before);
        j["after"] = moments_json(e.after);
        j["within_limits"] = e.within_limits;
        j["best_effort"] = e.best_effort;
        entries.push_back(std::move(j));
    }
    doc["entries"] = entries;
    return doc.dump(2) + "\n";
}

} // namespace compindex
