#include "core/importance.hpp"

#include "core/errors.hpp"
#include "core/nelder_mead.hpp"
#include "core/rng.hpp"

#include <cmath>
#include <numeric>

namespace compindex {

std::string to_string(Estimator e) {
    return e == Estimator::linear ? "linear" : "nonparametric";
}

Estimator estimator_from_string(const std::string& name) {
    if (name == "linear") {
        return Estimator::linear;
    }
    if (name == "nonparametric") {
        return Estimator::nonparametric;
    }
    throw ConfigError("unknown estimator: " + name);
}

namespace {

constexpr std::size_t kMinSamples = 4;
constexpr int kBandwidthGridSize = 20;

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
    double s = 0.0;
    for (const double x : v) {
        const double d = x - mean;
        s += d * d;
    }
    return s / static_cast<double>(v.size());
}

/// Nadaraya-Watson fitted values at the sample points for one bandwidth.
std::vector<double> nw_fitted(std::span<const double> x, std::span<const double> y, double h) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    const double inv2h2 = 0.5 / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x[i] - x[j];
            const double k = std::exp(-d * d * inv2h2);
            num += k * y[j];
            den += k;
        }
        out[i] = num / den; // den >= 1 because the own point contributes K(0) = 1
    }
    return out;
}

/// Leave-one-out cross-validated bandwidth over a logarithmic grid centred
/// on the Silverman rule of thumb (grid spans one decade either side).
double select_bandwidth(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const double mx = mean_of(x);
    const double sd = std::sqrt(variance_of(x, mx));
    const double h0 = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    const double my = mean_of(y);

    double best_h = h0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int g = 0; g < kBandwidthGridSize; ++g) {
        const double e = -1.0 + 2.0 * static_cast<double>(g) / (kBandwidthGridSize - 1);
        const double h = h0 * std::pow(10.0, e);
        const double inv2h2 = 0.5 / (h * h);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                const double d = x[i] - x[j];
                const double k = std::exp(-d * d * inv2h2);
                num += k * y[j];
                den += k;
            }
            // An unreachable point predicts the global mean, penalising
            // bandwidths that starve the smoother.
            const double pred = den > 1e-300 ? num / den : my;
            const double r = y[i] - pred;
            err += r * r;
        }
        if (err < best_err) {
            best_err = err;
            best_h = h;
        }
    }
    return best_h;
}

std::vector<double> smoother_fit(std::span<const double> x, std::span<const double> y,
                                 Estimator estimator) {
    const std::size_t n = x.size();
    const double mx = mean_of(x);
    const double vx = variance_of(x, mx);
    const double my = mean_of(y);
    if (!(vx > 0.0)) {
        return std::vector<double>(n, my); // constant input carries no information
    }
    if (estimator == Estimator::linear) {
        double cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cov += (x[i] - mx) * (y[i] - my);
        }
        cov /= static_cast<double>(n);
        const double slope = cov / vx;
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = my + slope * (x[i] - mx);
        }
        return out;
    }
    const double h = select_bandwidth(x, y);
    return nw_fitted(x, y, h);
}

} // namespace

double estimate_first_order(std::span<const double> output, std::span<const double> input,
                            Estimator estimator) {
    if (output.size() != input.size()) {
        throw NumericError("estimate_first_order: sample sizes differ");
    }
    if (output.size() < kMinSamples) {
        throw NumericError("estimate_first_order requires at least " +
                           std::to_string(kMinSamples) + " paired samples, got " +
                           std::to_string(output.size()));
    }
    const double my = mean_of(output);
    const double vy = variance_of(output, my);
    if (!(vy > 0.0)) {
        throw NumericError("estimate_first_order: output variance is zero");
    }
    if (!(variance_of(input, mean_of(input)) > 0.0)) {
        return 0.0; // a constant input carries no information
    }
    const auto fitted = smoother_fit(input, output, estimator);
    const double mf = mean_of(fitted);
    return variance_of(fitted, mf) / vy;
}

namespace {

Eigen::VectorXd linear_multivariate_fit(const Eigen::MatrixXd& others,
                                        const Eigen::VectorXd& target) {
    const Eigen::Index n = others.rows();
    Eigen::MatrixXd design(n, others.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(others.cols()) = others;
    if (design.rows() <= design.cols()) {
        throw NumericError("singular regression: more predictors than observations");
    }
    // QR least squares; rank-deficient designs still yield the projection.
    return design * design.colPivHouseholderQr().solve(target);
}

Eigen::VectorXd additive_kernel_fit(const Eigen::MatrixXd& others, const Eigen::VectorXd& target) {
    const Eigen::Index n = others.rows();
    const Eigen::Index p = others.cols();
    const double mean = target.mean();

    std::vector<std::vector<double>> cols(p);
    std::vector<double> bandwidths(p);
    std::vector<double> y(target.data(), target.data() + n);
    for (Eigen::Index j = 0; j < p; ++j) {
        cols[j].assign(others.col(j).data(), others.col(j).data() + n);
        const double mj = mean_of(cols[j]);
        if (variance_of(cols[j], mj) > 0.0) {
            bandwidths[j] = select_bandwidth(cols[j], y);
        } else {
            bandwidths[j] = 0.0; // constant column contributes nothing
        }
    }

    // Backfitting with fixed bandwidths.
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, p);
    for (int sweep = 0; sweep < 20; ++sweep) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (bandwidths[j] <= 0.0) {
                continue;
            }
            Eigen::VectorXd partial = target.array() - mean;
            for (Eigen::Index k = 0; k < p; ++k) {
                if (k != j) {
                    partial -= f.col(k);
                }
            }
            std::vector<double> pvec(partial.data(), partial.data() + n);
            const auto fitted = nw_fitted(cols[j], pvec, bandwidths[j]);
            Eigen::VectorXd fj = Eigen::Map<const Eigen::VectorXd>(fitted.data(), n);
            fj.array() -= fj.mean();
            change += (fj - f.col(j)).norm();
            f.col(j) = fj;
        }
        if (change < 1e-8) {
            break;
        }
    }
    Eigen::VectorXd out = Eigen::VectorXd::Constant(n, mean);
    for (Eigen::Index j = 0; j < p; ++j) {
        out += f.col(j);
    }
    return out;
}

} // namespace

SensitivityRatio decompose_correlation_ratio(const Eigen::MatrixXd& scores,
                                             std::span<const double> output, int target,
                                             Estimator estimator) {
    const Eigen::Index n = scores.rows();
    const Eigen::Index d = scores.cols();
    if (static_cast<Eigen::Index>(output.size()) != n) {
        throw NumericError("decompose_correlation_ratio: output length mismatch");
    }
    if (target < 0 || target >= d) {
        throw NumericError("decompose_correlation_ratio: target column out of range");
    }
    if (d < 2) {
        throw NumericError("decompose_correlation_ratio needs at least 2 columns");
    }

    SensitivityRatio ratio;
    ratio.estimator = estimator;

    const Eigen::VectorXd xd = scores.col(target);
    std::vector<double> xvec(xd.data(), xd.data() + n);
    ratio.total = estimate_first_order(output, xvec, estimator);

    Eigen::MatrixXd others(n, d - 1);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j != target) {
            others.col(c++) = scores.col(j);
        }
    }
    const Eigen::VectorXd fitted = estimator == Estimator::linear
                                       ? linear_multivariate_fit(others, xd)
                                       : additive_kernel_fit(others, xd);
    const Eigen::VectorXd residual = xd - fitted;
    std::vector<double> rvec(residual.data(), residual.data() + n);

    // A residual this far below the target's own variance is regression
    // round-off, not signal; without the cut-off the smoother amplifies it.
    const double vx = variance_of({xd.data(), xd.data() + n}, xd.mean());
    const double vr = variance_of(rvec, mean_of(rvec));
    if (vr <= 1e-20 * vx) {
        ratio.uncorrelated = 0.0;
    } else {
        ratio.uncorrelated = estimate_first_order(output, rvec, estimator);
    }
    ratio.correlated = ratio.total - ratio.uncorrelated;
    return ratio;
}

std::vector<double> achieved_importances(const Eigen::MatrixXd& scores,
                                         std::span<const double> weights, Estimator estimator) {
    const Eigen::Index n = scores.rows();
    const Eigen::Index d = scores.cols();
    if (static_cast<Eigen::Index>(weights.size()) != d) {
        throw NumericError("achieved_importances: weight count mismatch");
    }
    Eigen::VectorXd w(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        w(j) = weights[j];
    }
    const Eigen::VectorXd index = scores * w;
    std::vector<double> y(index.data(), index.data() + n);

    std::vector<double> s(d);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> x(scores.col(j).data(), scores.col(j).data() + n);
        s[j] = estimate_first_order(y, x, estimator);
        sum += s[j];
    }
    if (!(sum > 0.0)) {
        throw NumericError("achieved_importances: correlation ratios sum to zero");
    }
    for (double& v : s) {
        v /= sum;
    }
    return s;
}

OptimizedWeights optimize_weights(const Eigen::MatrixXd& scores, std::span<const double> targets,
                                  Estimator estimator, std::uint64_t seed) {
    const Eigen::Index d = scores.cols();
    if (static_cast<Eigen::Index>(targets.size()) != d) {
        throw NumericError("optimize_weights: target count mismatch");
    }
    double tsum = 0.0;
    for (const double t : targets) {
        if (!(t > 0.0)) {
            throw NumericError("optimize_weights: target importances must be positive");
        }
        tsum += t;
    }
    if (std::abs(tsum - 1.0) > 1e-6) {
        throw NumericError("optimize_weights: target importances must sum to 1");
    }

    const std::size_t free_dims = static_cast<std::size_t>(d) - 1;
    const auto to_weights = [d](const std::vector<double>& theta) {
        std::vector<double> w(d);
        double denom = 1.0; // implicit last coordinate fixed at 0
        for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(d); ++j) {
            w[j] = std::exp(theta[j]);
            denom += w[j];
        }
        w[d - 1] = 1.0;
        for (double& v : w) {
            v /= denom;
        }
        return w;
    };

    const auto objective_of = [&](const std::vector<double>& w) {
        double obj = 0.0;
        try {
            const auto achieved = achieved_importances(scores, w, estimator);
            for (Eigen::Index j = 0; j < d; ++j) {
                const double diff = targets[j] - achieved[j];
                obj += diff * diff;
            }
        } catch (const NumericError&) {
            return 1e6; // degenerate weight point; steer away
        }
        return obj;
    };
    const auto objective_theta = [&](const std::vector<double>& theta) {
        return objective_of(to_weights(theta));
    };

    const std::vector<double> equal(d, 1.0 / static_cast<double>(d));
    const double equal_objective = objective_of(equal);

    OptimizedWeights out;
    if (equal_objective <= 1e-12) {
        // Already at the target importances; nothing can beat objective 0.
        out.weights = equal;
        out.objective = equal_objective;
        out.achieved = achieved_importances(scores, equal, estimator);
        return out;
    }

    std::vector<double> best_theta(free_dims, 0.0);
    double best = std::numeric_limits<double>::infinity();
    constexpr int kRestarts = 50;
    for (int r = 0; r < kRestarts; ++r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        std::vector<double> theta0(free_dims, 0.0);
        if (r > 0) {
            for (double& t : theta0) {
                t = 0.5 * rng.normal();
            }
        }
        const auto res = nelder_mead(objective_theta, theta0, 0.25, 1e-6, 400);
        if (res.fx < best) {
            best = res.fx;
            best_theta = res.x;
        }
    }

    if (best >= equal_objective) {
        out.weights = equal;
        out.objective = equal_objective;
        out.no_improvement = true;
    } else {
        out.weights = to_weights(best_theta);
        out.objective = best;
    }
    out.achieved = achieved_importances(scores, out.weights, estimator);
    return out;
}

} // namespace compindex
