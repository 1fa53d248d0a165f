#pragma once

#include <Eigen/Dense>

#include <vector>

namespace compindex {

struct OneFactorFit {
    Eigen::VectorXd loadings;
    Eigen::VectorXd uniquenesses;
    double log_likelihood = 0.0; // per observation, constants dropped
    int iterations = 0;
    bool heywood_clamped = false;
};

/// Maximum-likelihood one-factor model fitted to a correlation matrix by EM.
/// Heywood communalities are clamped to 1 - 1e-6. Throws NumericError when
/// the log-likelihood has not stabilised within max_iterations.
OneFactorFit fit_one_factor(const Eigen::MatrixXd& correlation, double tolerance = 1e-8,
                            int max_iterations = 500);

/// Pearson correlation matrix of the columns of a data matrix.
/// Throws NumericError when a column has zero variance.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

} // namespace compindex
