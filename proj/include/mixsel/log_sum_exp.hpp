#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mixsel {

// log(sum_i exp(values[i])), shifted by the maximum so that the sum only
// underflows when every term does. Terms are added in sorted order, which
// makes the result independent of input order. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double max_value = sorted.back();
    if (!std::isfinite(max_value)) return max_value;
    double sum = 0.0;
    for (double v : sorted) sum += std::exp(v - max_value);
    return max_value + std::log(sum);
}

// Row-wise log-sum-exp of an n x K table.
inline Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& table) {
    const Eigen::VectorXd row_max = table.rowwise().maxCoeff();
    const Eigen::VectorXd sums = (table.colwise() - row_max).array().exp().rowwise().sum();
    return row_max.array() + sums.array().log();
}

}  // namespace mixsel
