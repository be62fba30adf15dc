#pragma once

// Synthetic benchmark designs with an attached external categorical variable,
// and a repeated-replication harness counting how often each criterion picks
// each K.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "mixsel/criteria.hpp"
#include "mixsel/dataset.hpp"
#include "mixsel/em.hpp"
#include "mixsel/errors.hpp"
#include "mixsel/parallel.hpp"
#include "mixsel/random.hpp"
#include "mixsel/selection.hpp"

namespace mixsel {

enum class DesignId { Cross, ThreeComp, RandomLabels, CondDep };

inline std::string_view to_string(DesignId id) {
    switch (id) {
        case DesignId::Cross: return "cross";
        case DesignId::ThreeComp: return "three-comp";
        case DesignId::RandomLabels: return "random-labels";
        case DesignId::CondDep: return "cond-dep";
    }
    return "unknown";
}

inline DesignId parse_design(std::string_view name) {
    for (DesignId id : {DesignId::Cross, DesignId::ThreeComp, DesignId::RandomLabels, DesignId::CondDep}) {
        if (to_string(id) == name) return id;
    }
    throw UsageError("unknown design '" + std::string(name) +
                     "' (expected cross, three-comp, random-labels or cond-dep)");
}

// How the external variable u is derived from a simulated observation.
//   component: u = generating component index
//   merge:     u = groups[component]
//   coin:      u = independent fair coin
//   sign:      u = [y_axis > 0]
enum class ExternalRule { Component, Merge, Coin, Sign };

inline std::string_view to_string(ExternalRule rule) {
    switch (rule) {
        case ExternalRule::Component: return "component";
        case ExternalRule::Merge: return "merge";
        case ExternalRule::Coin: return "coin";
        case ExternalRule::Sign: return "sign";
    }
    return "unknown";
}

inline ExternalRule parse_external_rule(std::string_view name) {
    for (ExternalRule r : {ExternalRule::Component, ExternalRule::Merge, ExternalRule::Coin, ExternalRule::Sign}) {
        if (to_string(r) == name) return r;
    }
    throw UsageError("unknown external rule '" + std::string(name) + "'");
}

struct DesignComponent {
    double weight = 1.0;  // normalized over the design
    Eigen::VectorXd mean;
    Eigen::VectorXd variances;  // diagonal covariance
};

struct ExperimentDesign {
    DesignId id = DesignId::Cross;
    int n = 200;
    std::vector<DesignComponent> components;
    ExternalRule rule = ExternalRule::Component;
    std::vector<int> groups;  // merge rule only
    int axis = 1;             // sign rule only, zero-based coordinate
    CovarianceFamily family = CovarianceFamily::Diagonal;
    int k_min = 1;
    int k_max = 10;

    int dimension() const { return components.empty() ? 0 : static_cast<int>(components.front().mean.size()); }

    void validate() const {
        if (n < 1) throw UsageError("design n must be >= 1");
        if (components.empty()) throw UsageError("design needs at least one component");
        const auto d = components.front().mean.size();
        if (d < 1) throw UsageError("design components need a mean");
        for (const auto& c : components) {
            if (c.mean.size() != d || c.variances.size() != d)
                throw UsageError("design components must share one dimension");
            if (!(c.weight > 0.0)) throw UsageError("design component weights must be positive");
            if (!(c.variances.array() > 0.0).all()) throw UsageError("design variances must be positive");
        }
        if (rule == ExternalRule::Merge && groups.size() != components.size())
            throw UsageError("merge rule needs one group per component");
        if (rule == ExternalRule::Sign && (axis < 0 || axis >= d))
            throw UsageError("sign rule axis out of range");
        if (k_min < 1 || k_max < k_min) throw UsageError("design K range must satisfy 1 <= min <= max");
    }
};

namespace detail {

inline DesignComponent component(double weight, std::initializer_list<double> mean,
                                 std::initializer_list<double> variances) {
    DesignComponent c;
    c.weight = weight;
    c.mean = Eigen::Map<const Eigen::VectorXd>(mean.begin(), static_cast<Eigen::Index>(mean.size()));
    c.variances = Eigen::Map<const Eigen::VectorXd>(variances.begin(), static_cast<Eigen::Index>(variances.size()));
    return c;
}

}  // namespace detail

inline ExperimentDesign default_design(DesignId id) {
    using detail::component;
    ExperimentDesign d;
    d.id = id;
    d.n = 200;
    d.k_min = 1;
    d.k_max = 10;
    switch (id) {
        case DesignId::Cross:
            // Two overlapping "cross" components at the origin, two far ones.
            // A long/short variance ratio near 10 makes the cross hard enough
            // for ICL to merge it while BIC still separates it.
            d.components = {component(1, {0, 0}, {4, 0.4}), component(1, {0, 0}, {0.4, 4}),
                            component(1, {8, 8}, {0.5, 0.5}), component(1, {8, -8}, {0.5, 0.5})};
            d.rule = ExternalRule::Component;
            d.family = CovarianceFamily::Diagonal;
            break;
        case DesignId::ThreeComp:
            // Red: two horizontal components, a thin one nested in a wider one,
            // so they overlap heavily but remain identifiable by likelihood.
            // Black: one vertical component beside them.
            d.components = {component(1, {0, 0}, {6, 0.15}), component(1, {0, 0}, {6, 3.75}),
                            component(1, {6, 0}, {0.3, 6})};
            d.rule = ExternalRule::Merge;
            d.groups = {0, 0, 1};
            d.family = CovarianceFamily::Full;
            break;
        case DesignId::RandomLabels:
            d.components = {component(1, {6, 6}, {1, 1}), component(1, {6, -6}, {1, 1}),
                            component(1, {-6, 6}, {1, 1}), component(1, {-6, -6}, {1, 1})};
            d.rule = ExternalRule::Coin;
            d.family = CovarianceFamily::Diagonal;
            break;
        case DesignId::CondDep:
            // Each cluster keeps mean (+-4, 0) and covariance diag(1, 4) but is two halves at
            // y = +-1.6; u = sign of y follows the halves, which ICL cannot see.
            d.components = {component(1, {-4, 1.6}, {1, 1.44}), component(1, {-4, -1.6}, {1, 1.44}),
                            component(1, {4, 1.6}, {1, 1.44}), component(1, {4, -1.6}, {1, 1.44})};
            d.rule = ExternalRule::Sign;
            d.axis = 1;
            d.family = CovarianceFamily::DiagonalFixedShape;
            break;
    }
    return d;
}

namespace detail {

inline std::vector<double> parse_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const std::string t(csv::trim(item));
            out.push_back(std::stod(t, &used));
            if (used != t.size()) throw std::invalid_argument(t);
        } catch (const std::exception&) {
            throw UsageError("cannot parse '" + value + "' for key '" + key + "'");
        }
    }
    return out;
}

inline int parse_int(const std::string& value, const std::string& key) {
    const auto list = parse_list(value, key);
    if (list.size() != 1 || list[0] != std::floor(list[0])) throw UsageError("key '" + key + "' needs an integer");
    return static_cast<int>(list[0]);
}

}  // namespace detail

// Applies `key = value` overrides (one per line, '#' starts a comment).
// Keys: n, family, k_min, k_max, components, component.<i>.weight,
// component.<i>.mean, component.<i>.var (1-based i, comma-separated lists),
// external.rule, external.groups (zero-based group per component),
// external.axis (1-based coordinate).
inline void apply_overrides(ExperimentDesign& design, std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (csv::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("design config line " + std::to_string(line_no) + " is not key=value");
        const std::string key(csv::trim(std::string_view(line).substr(0, eq)));
        const std::string value(csv::trim(std::string_view(line).substr(eq + 1)));
        if (key == "n") {
            design.n = detail::parse_int(value, key);
        } else if (key == "family") {
            design.family = parse_family(value);
        } else if (key == "k_min") {
            design.k_min = detail::parse_int(value, key);
        } else if (key == "k_max") {
            design.k_max = detail::parse_int(value, key);
        } else if (key == "components") {
            const int count = detail::parse_int(value, key);
            if (count < 1) throw UsageError("components must be >= 1");
            const DesignComponent proto = design.components.empty() ? DesignComponent{} : design.components.back();
            design.components.resize(static_cast<std::size_t>(count), proto);
        } else if (key == "external.rule") {
            design.rule = parse_external_rule(value);
        } else if (key == "external.groups") {
            design.groups.clear();
            for (double g : detail::parse_list(value, key)) design.groups.push_back(static_cast<int>(g));
        } else if (key == "external.axis") {
            design.axis = detail::parse_int(value, key) - 1;
        } else if (key.rfind("component.", 0) == 0) {
            const auto dot = key.find('.', 10);
            if (dot == std::string::npos) throw UsageError("bad design key '" + key + "'");
            const int index = detail::parse_int(key.substr(10, dot - 10), key) - 1;
            if (index < 0 || index >= static_cast<int>(design.components.size()))
                throw UsageError("component index out of range in '" + key + "'");
            DesignComponent& c = design.components[static_cast<std::size_t>(index)];
            const std::string field = key.substr(dot + 1);
            const auto list = detail::parse_list(value, key);
            if (field == "weight" && list.size() == 1) {
                c.weight = list[0];
            } else if (field == "mean") {
                c.mean = Eigen::Map<const Eigen::VectorXd>(list.data(), static_cast<Eigen::Index>(list.size()));
            } else if (field == "var") {
                c.variances = Eigen::Map<const Eigen::VectorXd>(list.data(), static_cast<Eigen::Index>(list.size()));
            } else {
                throw UsageError("bad design key '" + key + "'");
            }
        } else {
            throw UsageError("unknown design key '" + key + "'");
        }
    }
    design.validate();
}

inline void apply_overrides_file(ExperimentDesign& design, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open design config '" + path + "'");
    apply_overrides(design, in);
}

// Draws n observations from the design mixture and attaches the external
// variable "u". Deterministic in (design, seed).
inline Dataset generate(const ExperimentDesign& design, std::uint64_t seed) {
    design.validate();
    RandomStream rng(seed);
    const int d = design.dimension();
    double total_weight = 0.0;
    for (const auto& c : design.components) total_weight += c.weight;

    Dataset ds;
    ds.features.resize(design.n, d);
    std::vector<int> u(static_cast<std::size_t>(design.n));
    for (int i = 0; i < design.n; ++i) {
        const double draw = rng.uniform() * total_weight;
        std::size_t comp = 0;
        double cumulative = design.components[0].weight;
        while (draw >= cumulative && comp + 1 < design.components.size())
            cumulative += design.components[++comp].weight;
        const DesignComponent& c = design.components[comp];
        for (int j = 0; j < d; ++j) ds.features(i, j) = c.mean[j] + std::sqrt(c.variances[j]) * rng.normal();
        switch (design.rule) {
            case ExternalRule::Component: u[static_cast<std::size_t>(i)] = static_cast<int>(comp); break;
            case ExternalRule::Merge: u[static_cast<std::size_t>(i)] = design.groups[comp]; break;
            case ExternalRule::Coin: u[static_cast<std::size_t>(i)] = rng.coin() ? 1 : 0; break;
            case ExternalRule::Sign: u[static_cast<std::size_t>(i)] = ds.features(i, design.axis) > 0.0 ? 1 : 0; break;
        }
    }
    for (int j = 0; j < d; ++j) ds.feature_names.push_back("y" + std::to_string(j + 1));
    ds.externals.push_back(ExternalVariable::from_codes("u", u));
    return ds;
}

// Seed of replication r: a fixed 64-bit mixing of (master, r).
inline std::uint64_t replication_seed(std::uint64_t master, int replication) {
    return derive_seed(master, static_cast<std::uint64_t>(replication));
}

struct FrequencyTable {
    std::vector<Criterion> criteria;
    int k_min = 1;
    int k_max = 1;
    int replications = 0;
    int failures = 0;
    std::vector<std::vector<int>> counts;      // [criterion][K - k_min]
    std::vector<std::vector<int>> selections;  // [replication][criterion], 0 for a failed replication

    int count(Criterion c, int k) const {
        for (std::size_t i = 0; i < criteria.size(); ++i)
            if (criteria[i] == c) return counts[i][static_cast<std::size_t>(k - k_min)];
        throw UsageError("criterion not in table");
    }

    std::size_t criterion_index(Criterion c) const {
        for (std::size_t i = 0; i < criteria.size(); ++i)
            if (criteria[i] == c) return i;
        throw UsageError("criterion not in table");
    }
};

// Selected K per criterion for one simulated dataset; empty if every K failed.
inline std::vector<int> select_for_replication(const Dataset& data, const ExperimentDesign& design,
                                               const EmConfig& config, const std::vector<Criterion>& criteria) {
    std::vector<CriterionScores> scores;
    for (int k = design.k_min; k <= design.k_max; ++k) {
        try {
            const FitResult fit = fit_best(data.features, {design.family, k, data.d()}, config);
            scores.push_back(score_fit(fit, data.n(), data.externals));
        } catch (const FitError&) {
        } catch (const InsufficientDataError&) {
        }
    }
    if (scores.empty()) return {};
    std::vector<int> out;
    for (Criterion c : criteria) out.push_back(select_best(scores, c).components);
    return out;
}

inline FrequencyTable run_repeated(const ExperimentDesign& design, int replications, const EmConfig& config,
                                   const std::vector<Criterion>& criteria, unsigned threads = 1) {
    design.validate();
    config.validate();
    if (replications < 1) throw UsageError("replications must be >= 1");
    if (criteria.empty()) throw UsageError("at least one criterion is required");

    std::vector<std::vector<int>> picks(static_cast<std::size_t>(replications));
    parallel_for(picks.size(), threads, [&](std::size_t r) {
        const std::uint64_t seed = replication_seed(config.seed, static_cast<int>(r));
        const Dataset data = generate(design, seed);
        EmConfig rep_config = config;
        rep_config.seed = derive_seed(seed, 0x66697473ULL);
        picks[r] = select_for_replication(data, design, rep_config, criteria);
    });

    FrequencyTable table;
    table.criteria = criteria;
    table.k_min = design.k_min;
    table.k_max = design.k_max;
    table.replications = replications;
    table.counts.assign(criteria.size(), std::vector<int>(static_cast<std::size_t>(design.k_max - design.k_min + 1), 0));
    for (const auto& p : picks) {
        if (p.empty()) {
            ++table.failures;
            table.selections.emplace_back(criteria.size(), 0);
            continue;
        }
        for (std::size_t c = 0; c < criteria.size(); ++c) ++table.counts[c][static_cast<std::size_t>(p[c] - design.k_min)];
        table.selections.push_back(p);
    }
    return table;
}

// Shannon entropy (nats) of a criterion's selection histogram.
inline double selection_entropy(const std::vector<int>& row) {
    double total = 0.0;
    for (int c : row) total += c;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (int c : row)
        if (c > 0) h -= (c / total) * std::log(c / total);
    return h;
}

// Rows: criteria. Columns: K values, then the failed-replication count.
inline std::string render_frequency_tsv(const FrequencyTable& table) {
    std::ostringstream out;
    out << "criterion";
    for (int k = table.k_min; k <= table.k_max; ++k) out << '\t' << k;
    out << "\tfailed\n";
    for (std::size_t c = 0; c < table.criteria.size(); ++c) {
        out << to_string(table.criteria[c]);
        for (int v : table.counts[c]) out << '\t' << v;
        out << '\t' << table.failures << '\n';
    }
    return out.str();
}

inline nlohmann::json frequency_to_json(const FrequencyTable& table, const ExperimentDesign& design,
                                        const EmConfig& config) {
    using nlohmann::json;
    json counts = json::object();
    for (std::size_t c = 0; c < table.criteria.size(); ++c) counts[std::string(to_string(table.criteria[c]))] = table.counts[c];
    json comps = json::array();
    for (const auto& c : design.components)
        comps.push_back({{"weight", c.weight},
                         {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                         {"var", std::vector<double>(c.variances.data(), c.variances.data() + c.variances.size())}});
    return {{"design",
             {{"id", std::string(to_string(design.id))},
              {"n", design.n},
              {"family", std::string(to_string(design.family))},
              {"external_rule", std::string(to_string(design.rule))},
              {"components", comps}}},
            {"meta",
             {{"seed", config.seed},
              {"restarts", config.restarts},
              {"max_iterations", config.max_iterations},
              {"rel_tolerance", config.rel_tolerance},
              {"init", std::string(to_string(config.init))}}},
            {"k_min", table.k_min},
            {"k_max", table.k_max},
            {"replications", table.replications},
            {"failures", table.failures},
            {"counts", counts},
            {"selections", table.selections}};
}

}  // namespace mixsel
