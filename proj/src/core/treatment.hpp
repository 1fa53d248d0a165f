#pragma once

#include "core/moments.hpp"
#include "core/panel.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace compindex {

enum class Transform { identity, log_e, sqrt_root, cbrt_root, square, cube, neg_reciprocal };

std::string to_string(Transform f);
Transform transform_from_string(const std::string& name);

double apply_transform(Transform f, double x);

/// True when every value is inside the transform's domain (log and -1/x need
/// strictly positive data, sqrt non-negative data).
bool transform_feasible(Transform f, std::span<const double> series);

enum class WinsorTail { automatic, upper, lower };

/// Replaces k extreme points, each taking the value of the nearest retained
/// order statistic on its tail. In automatic mode each step picks the tail
/// whose extreme's removal most reduces |skewness|, ties toward the upper
/// tail. Positions are preserved; previously snapped points follow the snap
/// value of their tail.
std::vector<double> winsorize(std::span<const double> series, int k,
                              WinsorTail tail = WinsorTail::automatic);

struct TreatmentAction {
    int winsorized_points = 0;
    int upper_points = 0;
    int lower_points = 0;
    Transform transform = Transform::identity;

    bool is_identity() const {
        return winsorized_points == 0 && transform == Transform::identity;
    }
    bool has_transform() const { return transform != Transform::identity; }
};

struct TreatmentEntry {
    std::string indicator;
    std::optional<int> year; // absent for flattened (all-years) treatment
    TreatmentAction action;
    MomentSummary before;
    MomentSummary after;
    bool within_limits = false;
    bool best_effort = false; // limits unreachable within the search space
};

enum class TreatmentMode { ons, modified };

struct TreatmentPlan {
    TreatmentMode mode = TreatmentMode::ons;
    std::vector<TreatmentEntry> entries;

    /// Number of entries for the given year whose action includes a data
    /// transformation.
    std::size_t transforms_in_year(int year) const;
};

const std::vector<Transform>& default_transform_candidates(); // six families + identity

/// Picks the candidate minimising the treatment objective: first the
/// feasibility score max(|skew|/2, |kurt|/3.5) clamped below at 1, then
/// |skew| + |kurt|, then identity. Infeasible-domain candidates are excluded.
TreatmentEntry select_transform_ons(std::span<const double> series,
                                    const std::vector<Transform>& candidates =
                                        default_transform_candidates());

/// Winsorise-first treatment: tries k = 0..k_max and stops at the first k
/// whose moments are within limits; otherwise runs the transform search on
/// the k_max-winsorised series. k_max < 0 selects max(2, ceil(2% of n)).
TreatmentEntry treat_modified_series(std::span<const double> series, int k_max = -1);

struct TreatmentResult {
    PanelTensor tensor;
    TreatmentPlan plan;
};

/// Tensor-level driver. ONS mode treats each indicator's flattened all-years
/// series with the transform search; modified mode treats per indicator-year
/// with winsorise-then-transform.
TreatmentResult treat(const PanelTensor& imputed, TreatmentMode mode,
                      std::optional<int> k_max = std::nullopt);

std::string treatment_plan_json(const TreatmentPlan& plan);

} // namespace compindex
