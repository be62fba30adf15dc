#pragma once

// Penalized-likelihood criteria on the maximization scale (larger is better):
//   AIC  = L - nu
//   BIC  = L - nu/2 ln n
//   ICL  = L + sum_i ln tau_i^{z_i} - nu/2 ln n
//   SICL = ICL + sum_j sum_{k,l} n^j_kl ln(n^j_kl / n_k.)
// where the last term ties the MAP partition to external categorical variables.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixsel/em.hpp"
#include "mixsel/errors.hpp"
#include "mixsel/external_variable.hpp"
#include "mixsel/mixture_model.hpp"

namespace mixsel {

enum class Criterion { AIC, BIC, ICL, SICL };

inline constexpr Criterion kAllCriteria[] = {Criterion::AIC, Criterion::BIC, Criterion::ICL, Criterion::SICL};

inline std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::AIC: return "aic";
        case Criterion::BIC: return "bic";
        case Criterion::ICL: return "icl";
        case Criterion::SICL: return "sicl";
    }
    return "unknown";
}

inline Criterion parse_criterion(std::string_view name) {
    for (Criterion c : kAllCriteria) {
        if (to_string(c) == name) return c;
    }
    throw UsageError("unknown criterion '" + std::string(name) + "' (expected aic, bic, icl or sicl)");
}

inline double aic(double loglik, long free_parameters) { return loglik - static_cast<double>(free_parameters); }

inline double bic(double loglik, long free_parameters, long n) {
    return loglik - 0.5 * static_cast<double>(free_parameters) * std::log(static_cast<double>(n));
}

// -sum tau ln tau, with 0 ln 0 = 0.
inline double entropy(const Responsibilities& resp) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
        for (Eigen::Index i = 0; i < resp.rows(); ++i) {
            const double t = resp(i, k);
            if (t > 0.0) sum -= t * std::log(t);
        }
    }
    return std::max(sum, 0.0);
}

// Completed log-likelihood log f(y, z_hat | theta_hat) = L + sum_i ln tau_i^{z_i}.
inline double completed_loglik(const FitResult& fit) {
    double assignment = 0.0;
    for (std::size_t i = 0; i < fit.labels.size(); ++i) {
        const double t = fit.responsibilities(static_cast<Eigen::Index>(i), fit.labels[i]);
        if (!(t > 0.0)) throw ParameterDomainError("MAP responsibility is zero; the fit is invalid");
        assignment += std::log(t);
    }
    return fit.loglik + std::min(assignment, 0.0);
}

inline double icl(const FitResult& fit, long n) {
    return completed_loglik(fit) -
           0.5 * static_cast<double>(count_free_parameters(fit.spec)) * std::log(static_cast<double>(n));
}

struct ContingencyTable {
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;  // K x U
    Eigen::Matrix<long, Eigen::Dynamic, 1> row_totals;           // n_k.

    int clusters() const { return static_cast<int>(counts.rows()); }
    int levels() const { return static_cast<int>(counts.cols()); }
    long total() const { return row_totals.sum(); }
};

inline ContingencyTable contingency_table(const PartitionLabels& labels, const ExternalVariable& ext) {
    if (labels.size() != ext.size())
        throw ShapeError("labels have length " + std::to_string(labels.size()) + " but external '" + ext.name() +
                         "' has length " + std::to_string(ext.size()));
    ContingencyTable table;
    table.counts.setZero(labels.components, ext.level_count());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int k = labels[i];
        const int level = ext.values()[i];
        if (k < 0 || k >= labels.components) throw ShapeError("label out of range");
        table.counts(k, level) += 1;
    }
    table.row_totals = table.counts.rowwise().sum();
    return table;
}

// sum_{k,l} n_kl ln(n_kl / n_k.); zero cells and empty rows contribute 0.
// Terms are accumulated in sorted order so that relabeling clusters or
// levels gives a bit-identical result.
inline double association_term(const ContingencyTable& table) {
    std::vector<double> terms;
    for (Eigen::Index k = 0; k < table.counts.rows(); ++k) {
        const long row_total = table.row_totals[k];
        if (row_total == 0) continue;
        for (Eigen::Index l = 0; l < table.counts.cols(); ++l) {
            const long cell = table.counts(k, l);
            if (cell == 0 || cell == row_total) continue;
            terms.push_back(static_cast<double>(cell) *
                            std::log(static_cast<double>(cell) / static_cast<double>(row_total)));
        }
    }
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

inline double sicl(const FitResult& fit, std::span<const ExternalVariable> externals, long n) {
    if (externals.empty()) throw UsageError("SICL needs at least one external variable");
    double total = icl(fit, n);
    for (const ExternalVariable& ext : externals) total += association_term(contingency_table(fit.labels, ext));
    return total;
}

struct CriterionScores {
    ModelSpec spec;
    long n = 0;
    long free_parameters = 0;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double entropy = 0.0;
    double icl = 0.0;
    std::optional<double> sicl;
    std::vector<std::pair<std::string, double>> association_terms;  // (external name, term)
    int iterations = 0;
    bool converged = false;

    std::optional<double> value(Criterion c) const {
        switch (c) {
            case Criterion::AIC: return aic;
            case Criterion::BIC: return bic;
            case Criterion::ICL: return icl;
            case Criterion::SICL: return sicl;
        }
        return std::nullopt;
    }
};

inline CriterionScores score_fit(const FitResult& fit, long n, std::span<const ExternalVariable> externals = {}) {
    CriterionScores s;
    s.spec = fit.spec;
    s.n = n;
    s.free_parameters = count_free_parameters(fit.spec);
    s.loglik = fit.loglik;
    s.aic = mixsel::aic(fit.loglik, s.free_parameters);
    s.bic = mixsel::bic(fit.loglik, s.free_parameters, n);
    s.entropy = mixsel::entropy(fit.responsibilities);
    s.icl = mixsel::icl(fit, n);
    if (!externals.empty()) {
        double total = s.icl;
        for (const ExternalVariable& ext : externals) {
            const double term = association_term(contingency_table(fit.labels, ext));
            s.association_terms.emplace_back(ext.name(), term);
            total += term;
        }
        s.sicl = total;
    }
    s.iterations = fit.iterations;
    s.converged = fit.converged;
    return s;
}

// Preferred order among equal scores: fewer components, then Full < Diagonal < DiagonalFixedShape.
inline bool more_parsimonious(const ModelSpec& a, const ModelSpec& b) {
    if (a.components != b.components) return a.components < b.components;
    return static_cast<int>(a.family) < static_cast<int>(b.family);
}

inline ModelSpec select_best(std::span<const CriterionScores> scores, Criterion criterion) {
    if (scores.empty()) throw UsageError("cannot select from an empty score list");
    const CriterionScores* best = nullptr;
    double best_value = 0.0;
    for (const CriterionScores& s : scores) {
        const auto v = s.value(criterion);
        if (!v) throw UsageError("criterion " + std::string(to_string(criterion)) + " is not available (no externals)");
        if (!best || *v > best_value || (*v == best_value && more_parsimonious(s.spec, best->spec))) {
            best = &s;
            best_value = *v;
        }
    }
    return best->spec;
}

}  // namespace mixsel
