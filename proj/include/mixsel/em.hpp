#pragma once

// Maximum-likelihood fitting of Gaussian mixtures by EM, with seeded
// multi-restart initialization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixsel/errors.hpp"
#include "mixsel/log_sum_exp.hpp"
#include "mixsel/mixture_model.hpp"
#include "mixsel/random.hpp"

namespace mixsel {

enum class InitStrategy { RandomResponsibilities, RandomCenters, KMeansLike };

inline std::string_view to_string(InitStrategy strategy) {
    switch (strategy) {
        case InitStrategy::RandomResponsibilities: return "random-responsibilities";
        case InitStrategy::RandomCenters: return "random-centers";
        case InitStrategy::KMeansLike: return "kmeans-like";
    }
    return "unknown";
}

inline InitStrategy parse_init_strategy(std::string_view name) {
    for (InitStrategy s : {InitStrategy::RandomResponsibilities, InitStrategy::RandomCenters,
                           InitStrategy::KMeansLike}) {
        if (to_string(s) == name) return s;
    }
    throw UsageError("unknown init strategy '" + std::string(name) + "'");
}

struct EmConfig {
    int max_iterations = 500;
    double rel_tolerance = 1e-8;
    int restarts = 20;
    InitStrategy init = InitStrategy::KMeansLike;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
        if (!(rel_tolerance > 0.0)) throw UsageError("rel_tolerance must be > 0");
        if (restarts < 1) throw UsageError("restarts must be >= 1");
    }
};

// n x K posterior membership probabilities tau_i^k.
using Responsibilities = Eigen::MatrixXd;

// Hard assignment: labels[i] in [0, components). Component indices are
// zero-based throughout the library.
struct PartitionLabels {
    std::vector<int> labels;
    int components = 0;

    std::size_t size() const { return labels.size(); }
    int operator[](std::size_t i) const { return labels[i]; }
};

struct EStepResult {
    Responsibilities responsibilities;
    double loglik = 0.0;
};

struct FitResult {
    ModelSpec spec;
    MixtureParams params;
    double loglik = 0.0;
    Responsibilities responsibilities;
    PartitionLabels labels;
    int iterations = 0;
    bool converged = false;
    int restart_index = 0;
    std::vector<double> loglik_trace;  // value after initialization, then after every iteration
};

inline constexpr double kDegenerateWeightFraction = 1e-8;
inline constexpr double kCovarianceFloorFactor = 1e-6;
inline constexpr int kShapeInnerIterations = 50;
inline constexpr double kShapeInnerTolerance = 1e-10;
inline constexpr int kLloydIterations = 10;

// Lower bound for covariance eigenvalues / diagonal entries: a fixed fraction
// of the mean per-coordinate (biased) variance of the data.
inline double covariance_floor(const Eigen::MatrixXd& data) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const double mean_variance =
        (data.rowwise() - mean).array().square().colwise().mean().mean();
    const double floor = kCovarianceFloorFactor * mean_variance;
    return floor > 0.0 ? floor : kCovarianceFloorFactor;
}

inline EStepResult e_step(const Eigen::MatrixXd& data, const MixtureParams& params) {
    if (data.cols() != params.dimension()) throw ShapeError("data dimension differs from the model");
    const LogDensityMatrix log_dens = component_log_densities(data, params);
    const Eigen::VectorXd row_lse = log_sum_exp_rows(log_dens);
    EStepResult out;
    out.loglik = row_lse.sum();
    if (!std::isfinite(out.loglik)) throw ParameterDomainError("observed log-likelihood is not finite");
    out.responsibilities = (log_dens.colwise() - row_lse).array().exp().matrix();
    return out;
}

inline PartitionLabels map_labels(const Responsibilities& resp) {
    PartitionLabels out;
    out.components = static_cast<int>(resp.cols());
    out.labels.resize(static_cast<std::size_t>(resp.rows()));
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        int best = 0;
        for (Eigen::Index k = 1; k < resp.cols(); ++k) {
            if (resp(i, k) > resp(i, best)) best = static_cast<int>(k);
        }
        out.labels[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

namespace detail {

inline Covariance clamped_full(const Eigen::MatrixXd& scatter, double floor) {
    Eigen::MatrixXd sym = 0.5 * (scatter + scatter.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.eigenvalues().minCoeff() < floor) {
        const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(floor);
        sym = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        sym = 0.5 * (sym + sym.transpose());
    }
    return Covariance::full(sym);
}

inline Eigen::VectorXd unit_determinant(const Eigen::VectorXd& diag) {
    const Eigen::ArrayXd logs = diag.array().log();
    return (logs - logs.mean()).exp().matrix();
}

// Alternating maximization for covariances lambda_k * B with det(B) = 1.
// scatter_diag.row(k) holds the diagonal of the weighted scatter W_k.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> fixed_shape_update(const Eigen::MatrixXd& scatter_diag,
                                                                      const Eigen::VectorXd& weights,
                                                                      double floor) {
    const Eigen::Index k_count = scatter_diag.rows();
    const double d = static_cast<double>(scatter_diag.cols());
    Eigen::VectorXd shape = unit_determinant(scatter_diag.colwise().sum().transpose());
    Eigen::VectorXd volumes(k_count);
    for (int it = 0; it < kShapeInnerIterations; ++it) {
        for (Eigen::Index k = 0; k < k_count; ++k)
            volumes[k] = (scatter_diag.row(k).transpose().array() / shape.array()).sum() / (weights[k] * d);
        Eigen::VectorXd next = Eigen::VectorXd::Zero(shape.size());
        for (Eigen::Index k = 0; k < k_count; ++k) next += scatter_diag.row(k).transpose() / volumes[k];
        next = unit_determinant(next);
        const double change = ((next - shape).array() / shape.array()).abs().maxCoeff();
        shape = next;
        if (change < kShapeInnerTolerance) break;
    }
    for (Eigen::Index k = 0; k < k_count; ++k)
        volumes[k] = (scatter_diag.row(k).transpose().array() / shape.array()).sum() / (weights[k] * d);
    const double min_shape = shape.minCoeff();
    for (Eigen::Index k = 0; k < k_count; ++k) volumes[k] = std::max(volumes[k], floor / min_shape);
    return {volumes, shape};
}

}  // namespace detail

inline MixtureParams m_step(const Eigen::MatrixXd& data, const Responsibilities& resp, CovarianceFamily family,
                            double floor) {
    const Eigen::Index n = data.rows();
    if (resp.rows() != n) throw ShapeError("responsibilities and data have different row counts");
    if (resp.cols() < 1) throw ShapeError("responsibilities need at least one column");
    const Eigen::Index k_count = resp.cols();
    const Eigen::VectorXd weights = resp.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < k_count; ++k) {
        if (!(weights[k] >= kDegenerateWeightFraction * static_cast<double>(n)))
            throw DegenerateClusterError(static_cast<int>(k), weights[k]);
    }
    Eigen::VectorXd proportions = weights / static_cast<double>(n);
    proportions /= proportions.sum();
    const Eigen::MatrixXd means = (resp.transpose() * data).array().colwise() / weights.array();

    if (family == CovarianceFamily::DiagonalFixedShape) {
        Eigen::MatrixXd scatter_diag(k_count, data.cols());
        for (Eigen::Index k = 0; k < k_count; ++k) {
            const Eigen::MatrixXd centered = data.rowwise() - means.row(k);
            scatter_diag.row(k) = (resp.col(k).transpose() * centered.array().square().matrix());
            scatter_diag.row(k) = scatter_diag.row(k).cwiseMax(floor * weights[k]);
        }
        auto [volumes, shape] = detail::fixed_shape_update(scatter_diag, weights, floor);
        return MixtureParams::fixed_shape(std::move(proportions), means, std::move(volumes), std::move(shape));
    }

    std::vector<Covariance> covariances;
    covariances.reserve(static_cast<std::size_t>(k_count));
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const Eigen::MatrixXd centered = data.rowwise() - means.row(k);
        if (family == CovarianceFamily::Diagonal) {
            const Eigen::VectorXd variances =
                (resp.col(k).transpose() * centered.array().square().matrix()).transpose() / weights[k];
            covariances.push_back(Covariance::diagonal(variances.cwiseMax(floor)));
        } else {
            const Eigen::MatrixXd weighted = centered.array().colwise() * resp.col(k).array();
            covariances.push_back(detail::clamped_full(centered.transpose() * weighted / weights[k], floor));
        }
    }
    return MixtureParams(family, std::move(proportions), means, std::move(covariances));
}

inline MixtureParams m_step(const Eigen::MatrixXd& data, const Responsibilities& resp, CovarianceFamily family) {
    return m_step(data, resp, family, covariance_floor(data));
}

namespace detail {

// K row indices whose observations are pairwise distinct when the data allow it.
inline std::vector<Eigen::Index> distinct_rows(const Eigen::MatrixXd& data, int count, RandomStream& rng) {
    const Eigen::Index n = data.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<Eigen::Index> picked;
    for (Eigen::Index idx : order) {
        const bool duplicate = std::any_of(picked.begin(), picked.end(), [&](Eigen::Index p) {
            return data.row(p) == data.row(idx);
        });
        if (!duplicate) picked.push_back(idx);
        if (static_cast<int>(picked.size()) == count) return picked;
    }
    // Fewer distinct observations than components: fall back to distinct indices.
    for (Eigen::Index idx : order) {
        if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
        if (static_cast<int>(picked.size()) == count) break;
    }
    return picked;
}

inline Responsibilities one_hot(const std::vector<int>& labels, int k_count) {
    Responsibilities resp = Responsibilities::Zero(static_cast<Eigen::Index>(labels.size()), k_count);
    for (std::size_t i = 0; i < labels.size(); ++i) resp(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return resp;
}

inline std::vector<int> nearest_centers(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centers) {
    std::vector<int> labels(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        Eigen::Index best = 0;
        (centers.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

}  // namespace detail

inline MixtureParams initialize(const Eigen::MatrixXd& data, const ModelSpec& spec, InitStrategy strategy,
                                std::uint64_t seed) {
    check_spec(spec);
    if (data.cols() != spec.dimension) throw ShapeError("data dimension differs from the model spec");
    const Eigen::Index n = data.rows();
    const int k_count = spec.components;
    if (n < k_count)
        throw InsufficientDataError("need at least " + std::to_string(k_count) + " observations, got " +
                                    std::to_string(n));
    const double floor = covariance_floor(data);
    if (k_count == 1) return m_step(data, Responsibilities::Ones(n, 1), spec.family, floor);

    RandomStream rng(seed);
    switch (strategy) {
        case InitStrategy::RandomResponsibilities: {
            Responsibilities resp(n, k_count);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int k = 0; k < k_count; ++k) resp(i, k) = rng.uniform_open_zero();
                resp.row(i) /= resp.row(i).sum();
            }
            return m_step(data, resp, spec.family, floor);
        }
        case InitStrategy::RandomCenters: {
            const auto rows = detail::distinct_rows(data, k_count, rng);
            Eigen::MatrixXd means(k_count, data.cols());
            for (int k = 0; k < k_count; ++k) means.row(k) = data.row(rows[static_cast<std::size_t>(k)]);
            const MixtureParams pooled = m_step(data, Responsibilities::Ones(n, 1), spec.family, floor);
            const Eigen::VectorXd proportions = Eigen::VectorXd::Constant(k_count, 1.0 / k_count);
            if (spec.family == CovarianceFamily::DiagonalFixedShape) {
                return MixtureParams::fixed_shape(proportions, means,
                                                  Eigen::VectorXd::Constant(k_count, (*pooled.volumes())[0]),
                                                  *pooled.shape());
            }
            return MixtureParams(spec.family, proportions, means,
                                 std::vector<Covariance>(static_cast<std::size_t>(k_count), pooled.covariance(0)));
        }
        case InitStrategy::KMeansLike: {
            const auto rows = detail::distinct_rows(data, k_count, rng);
            Eigen::MatrixXd centers(k_count, data.cols());
            for (int k = 0; k < k_count; ++k) centers.row(k) = data.row(rows[static_cast<std::size_t>(k)]);
            std::vector<int> labels = detail::nearest_centers(data, centers);
            for (int it = 0; it < kLloydIterations; ++it) {
                Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k_count, data.cols());
                Eigen::VectorXd counts = Eigen::VectorXd::Zero(k_count);
                for (Eigen::Index i = 0; i < n; ++i) {
                    sums.row(labels[static_cast<std::size_t>(i)]) += data.row(i);
                    counts[labels[static_cast<std::size_t>(i)]] += 1.0;
                }
                for (int k = 0; k < k_count; ++k) {
                    if (counts[k] > 0.0) centers.row(k) = sums.row(k) / counts[k];  // empty: keep center
                }
                std::vector<int> next = detail::nearest_centers(data, centers);
                if (next == labels) break;
                labels = std::move(next);
            }
            return m_step(data, detail::one_hot(labels, k_count), spec.family, floor);
        }
    }
    throw UsageError("unknown init strategy");
}

inline FitResult run_em(const Eigen::MatrixXd& data, const ModelSpec& spec, const MixtureParams& init,
                        const EmConfig& config) {
    config.validate();
    if (init.spec() != spec) throw ShapeError("initial parameters do not match the model spec");
    if (data.cols() != spec.dimension) throw ShapeError("data dimension differs from the model spec");
    const double floor = covariance_floor(data);

    MixtureParams params = init;
    EStepResult current = e_step(data, params);
    std::vector<double> trace{current.loglik};
    int iterations = 0;
    bool converged = false;
    while (iterations < config.max_iterations) {
        MixtureParams next = m_step(data, current.responsibilities, spec.family, floor);
        EStepResult updated = e_step(data, next);
        ++iterations;
        const double previous = current.loglik;
        params = std::move(next);
        current = std::move(updated);
        trace.push_back(current.loglik);
        if (std::abs(current.loglik - previous) / (std::abs(current.loglik) + 1.0) < config.rel_tolerance) {
            converged = true;
            break;
        }
    }
    // A solution sitting on the covariance floor is a singular (spurious) maximum.
    for (int k = 0; k < params.components(); ++k) {
        if (params.covariance(k).smallest_eigenvalue() <= floor * (1.0 + 1e-6))
            throw DegenerateClusterError(k, current.responsibilities.col(k).sum(),
                                         "component " + std::to_string(k) + " converged to a singular covariance");
    }
    PartitionLabels labels = map_labels(current.responsibilities);
    return FitResult{spec,       std::move(params), current.loglik, std::move(current.responsibilities),
                     std::move(labels), iterations, converged,     0,
                     std::move(trace)};
}

// Seed of restart r: a fixed mixing of (master seed, family, K, d, r).
inline std::uint64_t restart_seed(std::uint64_t master, const ModelSpec& spec, int restart) {
    return derive_seed(master, static_cast<std::uint64_t>(spec.family), static_cast<std::uint64_t>(spec.components),
                       static_cast<std::uint64_t>(spec.dimension), static_cast<std::uint64_t>(restart));
}

// True when a should be preferred over b in best-of-restarts selection:
// converged runs first, then larger log-likelihood, then lower restart index.
inline bool better_fit(const FitResult& a, const FitResult& b) {
    if (a.converged != b.converged) return a.converged;
    if (a.loglik != b.loglik) return a.loglik > b.loglik;
    return a.restart_index < b.restart_index;
}

inline FitResult fit_best(const Eigen::MatrixXd& data, const ModelSpec& spec, const EmConfig& config) {
    config.validate();
    check_spec(spec);
    if (data.rows() < spec.components)
        throw InsufficientDataError("need at least " + std::to_string(spec.components) + " observations, got " +
                                    std::to_string(data.rows()));
    std::optional<FitResult> best;
    std::vector<std::string> diagnostics;
    for (int r = 0; r < config.restarts; ++r) {
        try {
            const MixtureParams init = initialize(data, spec, config.init, restart_seed(config.seed, spec, r));
            FitResult fit = run_em(data, spec, init, config);
            fit.restart_index = r;
            diagnostics.push_back("restart " + std::to_string(r) + ": loglik " + std::to_string(fit.loglik) +
                                  (fit.converged ? "" : " (not converged)"));
            if (!best || better_fit(fit, *best)) best = std::move(fit);
        } catch (const DegenerateClusterError& e) {
            diagnostics.push_back("restart " + std::to_string(r) + ": failed: " + e.what());
        } catch (const ParameterDomainError& e) {
            diagnostics.push_back("restart " + std::to_string(r) + ": failed: " + e.what());
        }
    }
    if (!best) {
        throw FitError("all " + std::to_string(config.restarts) + " restarts failed for " +
                           std::string(to_string(spec.family)) + " K=" + std::to_string(spec.components),
                       std::move(diagnostics));
    }
    return std::move(*best);
}

}  // namespace mixsel
