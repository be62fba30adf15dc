#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mixsel/experiments.hpp"

namespace {

using namespace mixsel;

TEST(Generate, CrossHasFourLevels) {
    const Dataset ds = generate(default_design(DesignId::Cross), 1);
    EXPECT_EQ(ds.n(), 200);
    EXPECT_EQ(ds.d(), 2);
    ASSERT_EQ(ds.externals.size(), 1u);
    EXPECT_EQ(ds.externals[0].level_count(), 4);
}

TEST(Generate, SameSeedSameData) {
    for (DesignId id : {DesignId::Cross, DesignId::ThreeComp, DesignId::RandomLabels, DesignId::CondDep}) {
        const ExperimentDesign design = default_design(id);
        const Dataset a = generate(design, 17);
        const Dataset b = generate(design, 17);
        const Dataset c = generate(design, 18);
        EXPECT_EQ(a.features, b.features);
        EXPECT_EQ(a.externals[0].values(), b.externals[0].values());
        EXPECT_NE(a.features, c.features);
    }
}

TEST(Generate, ThreeCompMergesTwoComponents) {
    const Dataset ds = generate(default_design(DesignId::ThreeComp), 2);
    EXPECT_EQ(ds.externals[0].level_count(), 2);
}

TEST(Generate, CondDepLabelIsSignOfSecondCoordinate) {
    const Dataset ds = generate(default_design(DesignId::CondDep), 3);
    const ExternalVariable& u = ds.externals[0];
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const bool positive = ds.features(i, 1) > 0.0;
        const int code = u.values()[static_cast<std::size_t>(i)];
        EXPECT_EQ(u.levels()[static_cast<std::size_t>(code)], positive ? "1" : "0");
    }
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

TEST(Generate, RandomLabelsAreIndependentOfFeatures) {
    const ExperimentDesign design = default_design(DesignId::RandomLabels);
    int within = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const Dataset ds = generate(design, static_cast<std::uint64_t>(s));
        Eigen::VectorXd u(ds.n());
        for (Eigen::Index i = 0; i < ds.n(); ++i)
            u[i] = std::stod(ds.externals[0].levels()[static_cast<std::size_t>(ds.externals[0].values()[static_cast<std::size_t>(i)])]);
        bool ok = true;
        for (int j = 0; j < ds.d(); ++j) ok = ok && std::abs(correlation(u, ds.features.col(j))) < 0.2;
        within += ok;
    }
    EXPECT_GE(within, static_cast<int>(0.95 * seeds));
}

TEST(Overrides, ParsesKeysAndComments) {
    ExperimentDesign d = default_design(DesignId::Cross);
    std::istringstream in(
        "# tuning\n"
        "n = 120\n"
        "family = full\n"
        "k_max = 6\n"
        "component.2.mean = 1.5, -2\n"
        "component.2.var = 0.5, 0.25  # trailing comment\n");
    apply_overrides(d, in);
    EXPECT_EQ(d.n, 120);
    EXPECT_EQ(d.family, CovarianceFamily::Full);
    EXPECT_EQ(d.k_max, 6);
    EXPECT_DOUBLE_EQ(d.components[1].mean[0], 1.5);
    EXPECT_DOUBLE_EQ(d.components[1].mean[1], -2.0);
    EXPECT_DOUBLE_EQ(d.components[1].variances[1], 0.25);
}

TEST(Overrides, RejectsUnknownKeys) {
    ExperimentDesign d = default_design(DesignId::Cross);
    std::istringstream bad("colour = red\n");
    EXPECT_THROW(apply_overrides(d, bad), UsageError);
    std::istringstream out_of_range("component.9.weight = 1\n");
    EXPECT_THROW(apply_overrides(d, out_of_range), UsageError);
}

TEST(RunRepeated, OneReplicationIsOneHot) {
    ExperimentDesign design = default_design(DesignId::RandomLabels);
    design.k_max = 5;
    EmConfig config;
    config.restarts = 3;
    const std::vector<Criterion> criteria{Criterion::BIC, Criterion::ICL, Criterion::SICL};
    const FrequencyTable t = run_repeated(design, 1, config, criteria);
    for (const auto& row : t.counts) {
        int total = 0;
        int ones = 0;
        for (int c : row) {
            total += c;
            ones += c == 1;
        }
        EXPECT_EQ(total, 1);
        EXPECT_EQ(ones, 1);
    }
}

TEST(RunRepeated, DeterministicAndScheduleIndependent) {
    ExperimentDesign design = default_design(DesignId::Cross);
    design.k_max = 5;
    EmConfig config;
    config.restarts = 2;
    config.seed = 4;
    const std::vector<Criterion> criteria{Criterion::AIC, Criterion::BIC, Criterion::ICL, Criterion::SICL};
    const FrequencyTable a = run_repeated(design, 4, config, criteria, 1);
    const FrequencyTable b = run_repeated(design, 4, config, criteria, 3);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_EQ(a.selections, b.selections);
    for (const auto& row : a.counts) {
        int total = 0;
        for (int c : row) total += c;
        EXPECT_EQ(total, a.replications - a.failures);
    }
    EXPECT_EQ(render_frequency_tsv(a), render_frequency_tsv(b));
}

TEST(SelectionEntropy, Values) {
    EXPECT_DOUBLE_EQ(selection_entropy({0, 10, 0}), 0.0);
    EXPECT_NEAR(selection_entropy({5, 5}), std::log(2.0), 1e-15);
}

TEST(DesignNames, RoundTrip) {
    for (DesignId id : {DesignId::Cross, DesignId::ThreeComp, DesignId::RandomLabels, DesignId::CondDep})
        EXPECT_EQ(parse_design(to_string(id)), id);
    EXPECT_THROW(parse_design("spiral"), UsageError);
}

}  // namespace
