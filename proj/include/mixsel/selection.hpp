#pragma once

// Fit every (family, K) of a grid and score the fits.

#include <span>
#include <vector>

#include "mixsel/criteria.hpp"
#include "mixsel/dataset.hpp"
#include "mixsel/em.hpp"
#include "mixsel/parallel.hpp"

namespace mixsel {

struct ModelGrid {
    std::vector<CovarianceFamily> families;
    int k_min = 1;
    int k_max = 1;

    std::vector<ModelSpec> specs(int dimension) const {
        if (families.empty()) throw UsageError("model grid needs at least one family");
        if (k_min < 1 || k_max < k_min) throw UsageError("K range must satisfy 1 <= min <= max");
        std::vector<ModelSpec> out;
        for (CovarianceFamily f : families)
            for (int k = k_min; k <= k_max; ++k) out.push_back({f, k, dimension});
        return out;
    }
};

struct GridResult {
    std::vector<FitResult> fits;          // same order as ModelGrid::specs
    std::vector<CriterionScores> scores;  // idem
};

// Throws FitError (or InsufficientDataError) if any spec cannot be fitted.
inline GridResult fit_grid(const Dataset& data, const ModelGrid& grid, const EmConfig& config,
                           unsigned threads = 1) {
    const std::vector<ModelSpec> specs = grid.specs(data.d());
    std::vector<std::optional<FitResult>> fits(specs.size());
    parallel_for(specs.size(), threads, [&](std::size_t i) { fits[i] = fit_best(data.features, specs[i], config); });
    GridResult out;
    for (auto& f : fits) {
        out.scores.push_back(score_fit(*f, data.n(), data.externals));
        out.fits.push_back(std::move(*f));
    }
    return out;
}

}  // namespace mixsel
