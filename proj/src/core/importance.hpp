#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace compindex {

enum class Estimator { linear, nonparametric };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

/// First-order correlation ratio S = Var(E[y|x]) / Var(y). The linear
/// estimator uses least squares; the nonparametric one a Nadaraya-Watson
/// smoother with a Gaussian kernel and a leave-one-out cross-validated
/// bandwidth over a 20-point logarithmic grid. Requires Var(y) > 0 and at
/// least 4 pairs (30+ for stable estimates); a constant input gives S = 0.
double estimate_first_order(std::span<const double> output, std::span<const double> input,
                            Estimator estimator);

/// S_d split into a correlated and an uncorrelated part:
///   S_d   from the output against the target column,
///   z_d   residual of regressing the target column on the other columns,
///   S_d_u from the output against z_d,
///   S_d_c = S_d - S_d_u (exact by construction).
struct SensitivityRatio {
    double total = 0.0;        // S_d
    double uncorrelated = 0.0; // S_d^u
    double correlated = 0.0;   // S_d^c
    Estimator estimator = Estimator::linear;
};

SensitivityRatio decompose_correlation_ratio(const Eigen::MatrixXd& scores,
                                             std::span<const double> output, int target,
                                             Estimator estimator);

struct OptimizedWeights {
    std::vector<double> weights;  // positive, sum to 1
    double objective = 0.0;       // sum_d (target_d - achieved_d)^2
    std::vector<double> achieved; // normalised correlation ratios at optimum
    bool no_improvement = false;  // optimiser failed to beat equal weights
};

/// Finds domain weights whose normalised correlation ratios match the target
/// importances, minimising the squared error. Nelder-Mead on a softmax
/// reparameterisation of the simplex, 50 restarts from jittered equal
/// weights.
OptimizedWeights optimize_weights(const Eigen::MatrixXd& scores, std::span<const double> targets,
                                  Estimator estimator, std::uint64_t seed = 1);

/// Normalised correlation ratios of the index sum(w_d x_d) against each
/// column of the score matrix.
std::vector<double> achieved_importances(const Eigen::MatrixXd& scores,
                                         std::span<const double> weights, Estimator estimator);

} // namespace compindex
