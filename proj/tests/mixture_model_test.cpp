#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mixsel/mixture_model.hpp"
#include "mixsel/random.hpp"

namespace {

using namespace mixsel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

TEST(LogGaussianPdf, KnownValues) {
    EXPECT_NEAR(log_gaussian_pdf(vec({0.0}), vec({0.0}), MatrixXd::Identity(1, 1)), -0.9189385, 1e-7);
    EXPECT_NEAR(log_gaussian_pdf(vec({1.5, -2.0}), vec({1.5, -2.0}), MatrixXd::Identity(2, 2)), -1.8378771, 1e-7);
    EXPECT_NEAR(log_gaussian_pdf(vec({2.0}), vec({0.0}), MatrixXd::Constant(1, 1, 4.0)), -2.1120857, 1e-7);
}

TEST(LogGaussianPdf, MatchesClosedFormIn2d) {
    MatrixXd s(2, 2);
    s << 2.0, 0.6, 0.6, 1.0;
    const VectorXd y = vec({0.3, -1.2});
    const VectorXd mu = vec({-0.5, 0.4});
    const double det = 2.0 * 1.0 - 0.36;
    MatrixXd inv(2, 2);
    inv << 1.0, -0.6, -0.6, 2.0;
    inv /= det;
    const VectorXd c = y - mu;
    const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * c.dot(inv * c);
    EXPECT_NEAR(log_gaussian_pdf(y, mu, s), expected, 1e-12);
}

TEST(LogGaussianPdf, RejectsBadCovariance) {
    MatrixXd not_pd(2, 2);
    not_pd << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(log_gaussian_pdf(vec({0, 0}), vec({0, 0}), not_pd), ParameterDomainError);
    MatrixXd asym(2, 2);
    asym << 1.0, 0.5, 0.1, 1.0;
    EXPECT_THROW(log_gaussian_pdf(vec({0, 0}), vec({0, 0}), asym), ParameterDomainError);
    EXPECT_THROW(log_gaussian_pdf(vec({0}), vec({0, 0}), MatrixXd::Identity(2, 2)), ShapeError);
}

// Monte-Carlo integral over a wide box should be close to 1.
TEST(LogGaussianPdf, IntegratesToOne) {
    MatrixXd s(2, 2);
    s << 1.0, 0.3, 0.3, 0.5;
    const Covariance cov = Covariance::full(s);
    const VectorXd mu = vec({0.5, -0.25});
    RandomStream rng(99);
    const double half = 8.0;
    const int samples = 1'000'000;
    double sum = 0.0;
    VectorXd y(2);
    for (int i = 0; i < samples; ++i) {
        y << half * (2.0 * rng.uniform() - 1.0), half * (2.0 * rng.uniform() - 1.0);
        sum += std::exp(log_gaussian_pdf(y, mu, cov));
    }
    EXPECT_NEAR(sum / samples * (2 * half) * (2 * half), 1.0, 0.02);
}

MixtureParams two_component(double p0, double m0, double m1) {
    return MixtureParams(CovarianceFamily::Full, vec({p0, 1.0 - p0}), vec({m0, m1}),
                         {Covariance::full(MatrixXd::Identity(1, 1)), Covariance::full(MatrixXd::Identity(1, 1))});
}

TEST(MixtureLogDensity, SingleComponentEqualsPdf) {
    MatrixXd s(2, 2);
    s << 1.5, -0.2, -0.2, 0.7;
    const MixtureParams p(CovarianceFamily::Full, vec({1.0}), vec({1.0, 2.0}).transpose(), {Covariance::full(s)});
    const VectorXd y = vec({0.2, 2.5});
    EXPECT_DOUBLE_EQ(mixture_log_density(y, p), log_gaussian_pdf(y, vec({1.0, 2.0}), s));
}

TEST(MixtureLogDensity, IdenticalComponentsCollapse) {
    const MixtureParams p = two_component(0.5, 0.0, 0.0);
    EXPECT_NEAR(mixture_log_density(vec({0.7}), p), log_gaussian_pdf(vec({0.7}), vec({0.0}), MatrixXd::Identity(1, 1)),
                1e-15);
}

TEST(MixtureLogDensity, FarComponentIsNegligible) {
    const MixtureParams p = two_component(0.5, 0.0, 100.0);
    const long double near_term = 0.5L * std::exp(-0.5L * std::log(2.0L * std::numbers::pi_v<long double>));
    const long double far_term = 0.5L * std::exp(-0.5L * std::log(2.0L * std::numbers::pi_v<long double>) - 5000.0L);
    const double oracle = static_cast<double>(std::log(near_term + far_term));
    EXPECT_NEAR(mixture_log_density(vec({0.0}), p), oracle, 1e-12);
    EXPECT_NEAR(mixture_log_density(vec({0.0}), p), std::log(0.5) - 0.5 * kLogTwoPi, 1e-12);
}

TEST(MixtureLogDensity, PermutationInvariantExactly) {
    // Dyadic proportions sum to exactly 1 in any order.
    const VectorXd props = vec({0.125, 0.25, 0.375, 0.25});
    const std::vector<int> perm{2, 0, 3, 1};
    RandomStream rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 4;
        MatrixXd means(k, 2);
        std::vector<Covariance> covs;
        for (int j = 0; j < k; ++j) {
            means.row(j) << 4 * rng.normal(), 4 * rng.normal();
            covs.push_back(Covariance::diagonal(vec({0.2 + rng.uniform(), 0.2 + rng.uniform()})));
        }
        VectorXd pp(k);
        MatrixXd pm(k, 2);
        std::vector<Covariance> pc;
        for (int j = 0; j < k; ++j) {
            const int src = perm[static_cast<std::size_t>(j)];
            pp[j] = props[src];
            pm.row(j) = means.row(src);
            pc.push_back(covs[static_cast<std::size_t>(src)]);
        }
        const MixtureParams a(CovarianceFamily::Diagonal, props, means, covs);
        const MixtureParams b(CovarianceFamily::Diagonal, pp, pm, pc);
        const VectorXd y = vec({3 * rng.normal(), 3 * rng.normal()});
        EXPECT_EQ(mixture_log_density(y, a), mixture_log_density(y, b));
    }
}

TEST(MixtureLogDensity, BoundedByLargestComponentDensity) {
    RandomStream rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const MixtureParams p = two_component(0.05 + 0.9 * rng.uniform(), 3 * rng.normal(), 3 * rng.normal());
        const VectorXd y = vec({3 * rng.normal()});
        const double top = std::max(log_gaussian_pdf(y, p.mean(0), p.covariance(0)),
                                    log_gaussian_pdf(y, p.mean(1), p.covariance(1)));
        EXPECT_LE(mixture_log_density(y, p), top + 1e-12);
    }
}

TEST(MixtureParams, ValidatesProportions) {
    EXPECT_THROW(two_component(1.2, 0, 1), ParameterDomainError);
    EXPECT_THROW(MixtureParams(CovarianceFamily::Full, vec({0.5, 0.4}), vec({0, 1}),
                               {Covariance::full(MatrixXd::Identity(1, 1)), Covariance::full(MatrixXd::Identity(1, 1))}),
                 ParameterDomainError);
    EXPECT_THROW(MixtureParams(CovarianceFamily::Full, vec({1.0}), vec({0, 1}),
                               {Covariance::full(MatrixXd::Identity(1, 1))}),
                 ShapeError);
}

TEST(MixtureParams, FixedShapeRequiresUnitDeterminant) {
    const MatrixXd means = MatrixXd::Zero(2, 2);
    EXPECT_NO_THROW(MixtureParams::fixed_shape(vec({0.5, 0.5}), means, vec({1.0, 2.0}), vec({2.0, 0.5})));
    EXPECT_THROW(MixtureParams::fixed_shape(vec({0.5, 0.5}), means, vec({1.0, 2.0}), vec({2.0, 1.0})),
                 ParameterDomainError);
    const auto p = MixtureParams::fixed_shape(vec({0.5, 0.5}), means, vec({1.0, 3.0}), vec({2.0, 0.5}));
    EXPECT_DOUBLE_EQ(p.covariance(1).variances()[0], 6.0);
    EXPECT_DOUBLE_EQ(p.covariance(1).variances()[1], 1.5);
}

TEST(FreeParameters, KnownCounts) {
    EXPECT_EQ(count_free_parameters({CovarianceFamily::Full, 3, 4}), 44);
    EXPECT_EQ(count_free_parameters({CovarianceFamily::Diagonal, 4, 2}), 19);
    EXPECT_EQ(count_free_parameters({CovarianceFamily::Full, 1, 1}), 2);
    // 1 proportion, 4 mean entries, 2 volumes, 1 free shape entry.
    EXPECT_EQ(count_free_parameters({CovarianceFamily::DiagonalFixedShape, 2, 2}), 8);
}

TEST(FreeParameters, StrictlyIncreasingInK) {
    for (CovarianceFamily f : kAllFamilies)
        for (int d = 1; d <= 5; ++d)
            for (int k = 1; k < 10; ++k)
                EXPECT_LT(count_free_parameters({f, k, d}), count_free_parameters({f, k + 1, d}));
}

TEST(FamilyNames, RoundTrip) {
    for (CovarianceFamily f : kAllFamilies) EXPECT_EQ(parse_family(to_string(f)), f);
    EXPECT_THROW(parse_family("spherical"), UsageError);
}

}  // namespace
