#include "core/factor_analysis.hpp"

#include "core/errors.hpp"

#include <cmath>

namespace compindex {

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    const Eigen::Index n = data.rows();
    const Eigen::Index p = data.cols();
    if (n < 2) {
        throw NumericError("correlation matrix needs at least 2 observations");
    }
    Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::VectorXd sd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double ss = centered.col(j).squaredNorm();
        if (!(ss > 0.0)) {
            throw NumericError("zero-variance column " + std::to_string(j) +
                               " in correlation matrix");
        }
        sd(j) = std::sqrt(ss);
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a + 1; b < p; ++b) {
            const double v = centered.col(a).dot(centered.col(b)) / (sd(a) * sd(b));
            r(a, b) = v;
            r(b, a) = v;
        }
    }
    return r;
}

// EM for the single-factor model R = ll' + Psi (Rubin & Thayer). With one
// factor the E-step reduces to scalars:
//   beta = l' Sigma^-1,  M = 1 - beta l + beta R beta'
//   l_new = R beta' / M,  psi_j = 1 - l_new_j (beta R)_j
// Sigma^-1 and log det Sigma come from the Woodbury identity, so each
// iteration is O(p^2).
OneFactorFit fit_one_factor(const Eigen::MatrixXd& correlation, double tolerance,
                            int max_iterations) {
    const Eigen::Index p = correlation.rows();
    if (p < 1 || correlation.cols() != p) {
        throw NumericError("one-factor fit requires a square correlation matrix");
    }
    if (p == 1) {
        OneFactorFit fit;
        fit.loadings = Eigen::VectorXd::Ones(1);
        fit.uniquenesses = Eigen::VectorXd::Constant(1, 1e-6);
        return fit;
    }

    constexpr double min_uniqueness = 1e-6;

    // Principal-axis start: leading eigenpair of R.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigendecomposition failed in one-factor fit");
    }
    const double lead = eig.eigenvalues()(p - 1);
    Eigen::VectorXd lambda = eig.eigenvectors().col(p - 1) * std::sqrt(std::max(lead, 0.1));
    bool ever_clamped = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (lambda(j) * lambda(j) > 1.0 - min_uniqueness) {
            lambda(j) = std::copysign(std::sqrt(1.0 - min_uniqueness), lambda(j));
        }
    }
    Eigen::VectorXd psi = (1.0 - lambda.array().square()).matrix();

    double prev_ll = -std::numeric_limits<double>::infinity();
    OneFactorFit fit;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        const Eigen::VectorXd psi_inv = psi.cwiseInverse();
        const Eigen::VectorXd u = psi_inv.cwiseProduct(lambda); // Psi^-1 l
        const double c = 1.0 + lambda.dot(u);
        // beta' = Sigma^-1 l = u - u (l'u)/c = u / c
        const Eigen::VectorXd beta = u / c;
        const Eigen::VectorXd rb = correlation * beta; // (beta R)'
        const double m = 1.0 - beta.dot(lambda) + beta.dot(rb);

        Eigen::VectorXd lambda_new = rb / m;
        Eigen::VectorXd psi_new(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            double comm = lambda_new(j) * rb(j); // l_new_j (beta R)_j
            if (comm > 1.0 - min_uniqueness) {
                ever_clamped = true;
                lambda_new(j) = std::copysign(std::sqrt(1.0 - min_uniqueness), lambda_new(j));
                psi_new(j) = min_uniqueness;
            } else {
                psi_new(j) = 1.0 - comm;
            }
            psi_new(j) = std::max(psi_new(j), min_uniqueness);
        }
        lambda = lambda_new;
        psi = psi_new;

        // -2 log L / n = log det Sigma + tr(Sigma^-1 R), constants dropped.
        const Eigen::VectorXd pinv = psi.cwiseInverse();
        const Eigen::VectorXd uu = pinv.cwiseProduct(lambda);
        const double cc = 1.0 + lambda.dot(uu);
        double logdet = std::log(cc);
        for (Eigen::Index j = 0; j < p; ++j) {
            logdet += std::log(psi(j));
        }
        // tr(Sigma^-1 R) = tr(Psi^-1 R) - u' R u / c
        double trace = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            trace += pinv(j) * correlation(j, j);
        }
        trace -= uu.dot(correlation * uu) / cc;
        const double ll = -0.5 * (logdet + trace);

        fit.iterations = iter;
        if (std::abs(ll - prev_ll) < tolerance) {
            fit.loadings = lambda;
            fit.uniquenesses = psi;
            fit.log_likelihood = ll;
            fit.heywood_clamped = ever_clamped;
            return fit;
        }
        prev_ll = ll;
    }
    throw NumericError("one-factor EM did not converge within " +
                       std::to_string(max_iterations) + " iterations");
}

} // namespace compindex
