#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mixsel/em.hpp"
#include "mixsel/random.hpp"

namespace mixsel::test {

inline std::string data_path(const std::string& name) { return std::string(MIXSEL_DATA_DIR) + "/" + name; }

// Random n x K responsibility table with rows on the simplex.
inline Responsibilities random_responsibilities(Eigen::Index n, int k, std::uint64_t seed) {
    RandomStream rng(seed);
    Responsibilities r(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) r(i, j) = rng.uniform_open_zero();
        r.row(i) /= r.row(i).sum();
    }
    return r;
}

// Two well separated 1-D Gaussian groups at -offset and +offset, unit variance.
inline Eigen::MatrixXd two_groups(Eigen::Index n, double offset, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd x(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = (i % 2 == 0 ? -offset : offset) + rng.normal();
    return x;
}

// n points in d dimensions from a few random blobs.
inline Eigen::MatrixXd random_blobs(Eigen::Index n, int d, int blobs, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd centers(blobs, d);
    Eigen::MatrixXd scales(blobs, d);
    for (int b = 0; b < blobs; ++b)
        for (int j = 0; j < d; ++j) {
            centers(b, j) = 8.0 * (rng.uniform() - 0.5);
            scales(b, j) = 0.5 + rng.uniform();
        }
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto b = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(blobs)));
        for (int j = 0; j < d; ++j) x(i, j) = centers(b, j) + scales(b, j) * rng.normal();
    }
    return x;
}

inline FitResult quick_fit(const Eigen::MatrixXd& data, CovarianceFamily family, int k, std::uint64_t seed,
                           int restarts = 3) {
    EmConfig config;
    config.seed = seed;
    config.restarts = restarts;
    return fit_best(data, {family, k, static_cast<int>(data.cols())}, config);
}

}  // namespace mixsel::test
