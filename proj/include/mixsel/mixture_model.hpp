#pragma once

// Gaussian mixture parameters, component log-densities and free-parameter
// counting for the three supported covariance families.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixsel/errors.hpp"
#include "mixsel/log_sum_exp.hpp"

namespace mixsel {

// Full:               unconstrained SPD matrix per component.
// Diagonal:           diagonal matrix per component.
// DiagonalFixedShape: lambda_k * B, B diagonal with det(B) = 1 shared by all
//                     components, lambda_k free.
enum class CovarianceFamily { Full, Diagonal, DiagonalFixedShape };

inline constexpr CovarianceFamily kAllFamilies[] = {
    CovarianceFamily::Full, CovarianceFamily::Diagonal, CovarianceFamily::DiagonalFixedShape};

inline std::string_view to_string(CovarianceFamily family) {
    switch (family) {
        case CovarianceFamily::Full: return "full";
        case CovarianceFamily::Diagonal: return "diag";
        case CovarianceFamily::DiagonalFixedShape: return "diag-fixed-shape";
    }
    return "unknown";
}

inline CovarianceFamily parse_family(std::string_view name) {
    for (CovarianceFamily family : kAllFamilies) {
        if (to_string(family) == name) return family;
    }
    throw UsageError("unknown covariance family '" + std::string(name) +
                     "' (expected full, diag or diag-fixed-shape)");
}

struct ModelSpec {
    CovarianceFamily family = CovarianceFamily::Full;
    int components = 1;  // K
    int dimension = 1;   // d

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline void check_spec(const ModelSpec& spec) {
    if (spec.components < 1) throw ParameterDomainError("model spec needs at least one component");
    if (spec.dimension < 1) throw ParameterDomainError("model spec needs dimension >= 1");
}

// Number of free parameters nu_m. Proportions are always free.
inline long count_free_parameters(const ModelSpec& spec) {
    check_spec(spec);
    const long k = spec.components;
    const long d = spec.dimension;
    const long proportions = k - 1;
    const long means = k * d;
    switch (spec.family) {
        case CovarianceFamily::Full: return proportions + means + k * d * (d + 1) / 2;
        case CovarianceFamily::Diagonal: return proportions + means + k * d;
        case CovarianceFamily::DiagonalFixedShape: return proportions + means + k + (d - 1);
    }
    return 0;
}

inline constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2 pi)

// A positive-definite covariance matrix together with the factorization used
// for density evaluation. Diagonal matrices keep only their diagonal.
class Covariance {
public:
    static Covariance full(const Eigen::MatrixXd& matrix) {
        if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
            throw ShapeError("covariance must be a non-empty square matrix");
        if (!matrix.allFinite()) throw ParameterDomainError("covariance has non-finite entries");
        const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
        if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw ParameterDomainError("covariance is not symmetric");
        Covariance cov;
        cov.matrix_ = 0.5 * (matrix + matrix.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix_);
        if (llt.info() != Eigen::Success) throw ParameterDomainError("covariance is not positive definite");
        cov.cholesky_ = llt.matrixL();
        const Eigen::VectorXd pivots = cov.cholesky_.diagonal();
        if (!(pivots.array() > 0.0).all() || !pivots.allFinite())
            throw ParameterDomainError("covariance is not positive definite");
        cov.log_det_ = 2.0 * pivots.array().log().sum();
        cov.diagonal_ = false;
        return cov;
    }

    static Covariance diagonal(const Eigen::VectorXd& variances) {
        if (variances.size() == 0) throw ShapeError("covariance must be non-empty");
        if (!variances.allFinite() || !(variances.array() > 0.0).all())
            throw ParameterDomainError("diagonal covariance needs finite positive variances");
        Covariance cov;
        cov.matrix_ = variances.asDiagonal();
        cov.variances_ = variances;
        cov.log_det_ = variances.array().log().sum();
        cov.diagonal_ = true;
        return cov;
    }

    int dimension() const { return static_cast<int>(matrix_.rows()); }
    bool is_diagonal() const { return diagonal_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::VectorXd variances() const { return matrix_.diagonal(); }
    double log_determinant() const { return log_det_; }

    double smallest_eigenvalue() const {
        if (diagonal_) return variances_.minCoeff();
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(matrix_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    }

    // Squared Mahalanobis norm of each row of a centered n x d block.
    Eigen::VectorXd row_mahalanobis_squared(const Eigen::MatrixXd& centered) const {
        if (diagonal_) {
            return (centered.array().square().rowwise() / variances_.transpose().array()).rowwise().sum();
        }
        const Eigen::MatrixXd whitened =
            cholesky_.triangularView<Eigen::Lower>().solve(centered.transpose());
        return whitened.colwise().squaredNorm().transpose();
    }

    double mahalanobis_squared(const Eigen::VectorXd& centered) const {
        if (diagonal_) return (centered.array().square() / variances_.array()).sum();
        return cholesky_.triangularView<Eigen::Lower>().solve(centered).squaredNorm();
    }

private:
    Covariance() = default;

    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd cholesky_;  // lower factor, full covariances only
    Eigen::VectorXd variances_;  // diagonal covariances only
    double log_det_ = 0.0;
    bool diagonal_ = false;
};

inline double log_gaussian_pdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mean,
                               const Covariance& covariance) {
    if (point.size() != mean.size() || point.size() != covariance.dimension())
        throw ShapeError("point, mean and covariance dimensions differ");
    const double d = static_cast<double>(point.size());
    return -0.5 * (d * kLogTwoPi + covariance.log_determinant() +
                   covariance.mahalanobis_squared(point - mean));
}

inline double log_gaussian_pdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& covariance) {
    return log_gaussian_pdf(point, mean, Covariance::full(covariance));
}

// theta_m: proportions, means (row k = mean of component k) and covariances.
// Validated on construction and immutable afterwards.
class MixtureParams {
public:
    MixtureParams(CovarianceFamily family, Eigen::VectorXd proportions, Eigen::MatrixXd means,
                  std::vector<Covariance> covariances)
        : family_(family),
          proportions_(std::move(proportions)),
          means_(std::move(means)),
          covariances_(std::move(covariances)) {
        if (family_ == CovarianceFamily::DiagonalFixedShape)
            throw ParameterDomainError("use MixtureParams::fixed_shape for the diag-fixed-shape family");
        validate();
    }

    // Component k has covariance volumes[k] * diag(shape); det(diag(shape)) must be 1.
    static MixtureParams fixed_shape(Eigen::VectorXd proportions, Eigen::MatrixXd means,
                                     Eigen::VectorXd volumes, Eigen::VectorXd shape) {
        if (volumes.size() != proportions.size())
            throw ShapeError("one volume per component is required");
        if (shape.size() != means.cols()) throw ShapeError("shape length must equal the dimension");
        if (!(shape.array() > 0.0).all() || !(volumes.array() > 0.0).all() || !shape.allFinite() ||
            !volumes.allFinite())
            throw ParameterDomainError("volumes and shape must be finite and positive");
        if (std::abs(shape.array().log().sum()) > 1e-9)
            throw ParameterDomainError("shared shape must have determinant 1");
        std::vector<Covariance> covariances;
        covariances.reserve(static_cast<std::size_t>(volumes.size()));
        for (Eigen::Index k = 0; k < volumes.size(); ++k)
            covariances.push_back(Covariance::diagonal(volumes[k] * shape));
        return MixtureParams(std::move(proportions), std::move(means), std::move(covariances),
                             std::move(volumes), std::move(shape));
    }

    CovarianceFamily family() const { return family_; }
    int components() const { return static_cast<int>(proportions_.size()); }
    int dimension() const { return static_cast<int>(means_.cols()); }
    ModelSpec spec() const { return {family_, components(), dimension()}; }

    const Eigen::VectorXd& proportions() const { return proportions_; }
    const Eigen::MatrixXd& means() const { return means_; }
    Eigen::VectorXd mean(int k) const { return means_.row(k).transpose(); }
    const std::vector<Covariance>& covariances() const { return covariances_; }
    const Covariance& covariance(int k) const { return covariances_[static_cast<std::size_t>(k)]; }

    // Only set for the diag-fixed-shape family.
    const std::optional<Eigen::VectorXd>& volumes() const { return volumes_; }
    const std::optional<Eigen::VectorXd>& shape() const { return shape_; }

private:
    MixtureParams(Eigen::VectorXd proportions, Eigen::MatrixXd means, std::vector<Covariance> covariances,
                  Eigen::VectorXd volumes, Eigen::VectorXd shape)
        : family_(CovarianceFamily::DiagonalFixedShape),
          proportions_(std::move(proportions)),
          means_(std::move(means)),
          covariances_(std::move(covariances)),
          volumes_(std::move(volumes)),
          shape_(std::move(shape)) {
        validate();
    }

    void validate() const {
        const auto k = proportions_.size();
        if (k < 1) throw ParameterDomainError("a mixture needs at least one component");
        if (means_.rows() != k || static_cast<Eigen::Index>(covariances_.size()) != k)
            throw ShapeError("proportions, means and covariances disagree on the number of components");
        if (means_.cols() < 1) throw ShapeError("means must have at least one coordinate");
        if (!proportions_.allFinite() || !(proportions_.array() > 0.0).all())
            throw ParameterDomainError("mixing proportions must be positive");
        if (std::abs(proportions_.sum() - 1.0) > 1e-12)
            throw ParameterDomainError("mixing proportions must sum to 1");
        if (!means_.allFinite()) throw ParameterDomainError("means must be finite");
        for (const Covariance& cov : covariances_) {
            if (cov.dimension() != means_.cols()) throw ShapeError("covariance dimension differs from means");
            if (family_ != CovarianceFamily::Full && !cov.is_diagonal())
                throw ParameterDomainError("diagonal families need diagonal covariances");
        }
    }

    CovarianceFamily family_;
    Eigen::VectorXd proportions_;
    Eigen::MatrixXd means_;
    std::vector<Covariance> covariances_;
    std::optional<Eigen::VectorXd> volumes_;
    std::optional<Eigen::VectorXd> shape_;
};

// n x K table with entry (i, k) = log(p_k phi(y_i | a_k)).
using LogDensityMatrix = Eigen::MatrixXd;

inline LogDensityMatrix component_log_densities(const Eigen::MatrixXd& data, const MixtureParams& params) {
    if (data.cols() != params.dimension()) throw ShapeError("data dimension differs from the model");
    const int k_count = params.components();
    const double d = static_cast<double>(params.dimension());
    LogDensityMatrix out(data.rows(), k_count);
    for (int k = 0; k < k_count; ++k) {
        const Covariance& cov = params.covariance(k);
        const Eigen::MatrixXd centered = data.rowwise() - params.means().row(k);
        const double offset = std::log(params.proportions()[k]) - 0.5 * (d * kLogTwoPi + cov.log_determinant());
        out.col(k) = (offset - 0.5 * cov.row_mahalanobis_squared(centered).array()).matrix();
    }
    return out;
}

inline double mixture_log_density(const Eigen::VectorXd& point, const MixtureParams& params) {
    if (point.size() != params.dimension()) throw ShapeError("point dimension differs from the model");
    std::vector<double> terms(static_cast<std::size_t>(params.components()));
    for (int k = 0; k < params.components(); ++k)
        terms[static_cast<std::size_t>(k)] =
            std::log(params.proportions()[k]) + log_gaussian_pdf(point, params.mean(k), params.covariance(k));
    return log_sum_exp(terms);
}

}  // namespace mixsel
