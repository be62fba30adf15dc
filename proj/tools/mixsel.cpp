// mixsel: fit Gaussian mixtures over a (family, K) grid and select a model by
// AIC, BIC, ICL or SICL; run the synthetic benchmark designs; re-render reports.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mixsel/criteria.hpp"
#include "mixsel/dataset.hpp"
#include "mixsel/em.hpp"
#include "mixsel/experiments.hpp"
#include "mixsel/report.hpp"
#include "mixsel/selection.hpp"

namespace {

using namespace mixsel;

constexpr int kExitUsage = 2;
constexpr int kExitFit = 3;
constexpr int kExitIo = 4;

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const std::string& item : raw) {
        std::stringstream ss(item);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty()) out.push_back(token);
    }
    return out;
}

// `a..b` inclusive, or a single integer.
std::pair<int, int> parse_k_range(const std::string& text) {
    static const std::regex range(R"(^\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, range)) throw UsageError("K range must look like a..b, got '" + text + "'");
    const int lo = std::stoi(m[1]);
    const int hi = m[2].matched ? std::stoi(m[2]) : lo;
    if (lo < 1 || hi < lo) throw UsageError("K range must satisfy 1 <= a <= b, got '" + text + "'");
    return {lo, hi};
}

// Column names, or 1-based column numbers / ranges such as 1-4, resolved against the header.
std::vector<std::string> resolve_columns(const std::vector<std::string>& tokens,
                                         const std::vector<std::string>& header) {
    static const std::regex index_range(R"(^(\d+)(?:-(\d+))?$)");
    std::vector<std::string> out;
    for (const std::string& token : tokens) {
        std::smatch m;
        if (std::find(header.begin(), header.end(), token) == header.end() &&
            std::regex_match(token, m, index_range)) {
            const int lo = std::stoi(m[1]);
            const int hi = m[2].matched ? std::stoi(m[2]) : lo;
            if (lo < 1 || hi < lo || hi > static_cast<int>(header.size()))
                throw SchemaError("column range '" + token + "' is outside 1.." + std::to_string(header.size()));
            for (int i = lo; i <= hi; ++i) out.push_back(header[static_cast<std::size_t>(i - 1)]);
        } else {
            out.push_back(token);
        }
    }
    return out;
}

std::vector<Criterion> parse_criteria(const std::vector<std::string>& raw) {
    std::vector<Criterion> out;
    for (const std::string& name : split_list(raw)) {
        const Criterion c = parse_criterion(name);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    if (out.empty()) throw UsageError("at least one criterion is required");
    return out;
}

std::string with_extension(const std::string& path, const std::string& ext) {
    return std::filesystem::path(path).replace_extension(ext).string();
}

struct EmOptions {
    std::uint64_t seed = 0;
    int restarts = 20;
    int max_iterations = 500;
    double tolerance = 1e-8;
    std::string init = "kmeans-like";
    unsigned threads = 0;

    void add_to(CLI::App& app) {
        app.add_option("--seed", seed, "Master random seed")->capture_default_str();
        app.add_option("--restarts", restarts, "EM restarts per model")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--max-iter", max_iterations, "EM iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--tol", tolerance, "Relative log-likelihood tolerance")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--init", init, "random-responsibilities | random-centers | kmeans-like")->capture_default_str();
        app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    }

    EmConfig config() const {
        EmConfig c;
        c.seed = seed;
        c.restarts = restarts;
        c.max_iterations = max_iterations;
        c.rel_tolerance = tolerance;
        c.init = parse_init_strategy(init);
        c.validate();
        return c;
    }

    unsigned thread_count() const { return threads == 0 ? default_thread_count() : threads; }
};

struct FitOptions {
    std::string data;
    std::vector<std::string> features;
    std::vector<std::string> externals;
    std::vector<std::string> families{"full"};
    std::string k_range = "1..9";
    std::vector<std::string> criteria;
    std::string delimiter = ",";
    bool standardize = false;
    std::string out = "report.json";
    std::string format = "json";
    std::string tsv;
    std::string svg;
    bool plot = false;
    EmOptions em;
};

ReportDocument build_report(const FitOptions& opt, const Dataset& data, const GridResult& grid,
                            const std::vector<Criterion>& criteria, const EmConfig& config) {
    ReportDocument report;
    report.meta.seed = config.seed;
    report.meta.restarts = config.restarts;
    report.meta.max_iterations = config.max_iterations;
    report.meta.rel_tolerance = config.rel_tolerance;
    report.meta.init = std::string(to_string(config.init));
    report.meta.data = opt.data;
    report.meta.n = data.n();
    report.meta.d = data.d();
    report.meta.features = data.feature_names;
    for (const auto& ext : data.externals) report.meta.externals.push_back(ext.name());
    report.meta.standardized = data.standardization.has_value();
    report.meta.criteria = criteria;
    report.scores = grid.scores;
    for (Criterion c : criteria) {
        const ModelSpec best = select_best(grid.scores, c);
        report.selections.emplace_back(c, best);
        for (std::size_t i = 0; i < grid.fits.size(); ++i) {
            if (grid.fits[i].spec != best) continue;
            for (const auto& ext : data.externals)
                report.contingency_tables.push_back(
                    make_contingency_report(c, best, ext, contingency_table(grid.fits[i].labels, ext)));
        }
    }
    return report;
}

int cmd_fit(const FitOptions& opt) {
    const EmConfig config = opt.em.config();
    if (opt.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    const char delimiter = opt.delimiter[0];
    const auto [k_min, k_max] = parse_k_range(opt.k_range);
    ModelGrid grid{{}, k_min, k_max};
    for (const std::string& f : split_list(opt.families)) grid.families.push_back(parse_family(f));
    if (grid.families.empty()) throw UsageError("at least one family is required");

    const std::vector<std::string> external_tokens = split_list(opt.externals);
    std::vector<Criterion> criteria;
    if (opt.criteria.empty()) {
        criteria = {Criterion::AIC, Criterion::BIC, Criterion::ICL};
        if (!external_tokens.empty()) criteria.push_back(Criterion::SICL);
    } else {
        criteria = parse_criteria(opt.criteria);
    }
    if (std::find(criteria.begin(), criteria.end(), Criterion::SICL) != criteria.end() && external_tokens.empty())
        throw UsageError("criterion sicl requires at least one --external column");

    const std::vector<std::string> header = read_header(opt.data, delimiter);
    const std::vector<std::string> features = resolve_columns(split_list(opt.features), header);
    const std::vector<std::string> externals = resolve_columns(external_tokens, header);
    Dataset data = load_csv(opt.data, features, externals, delimiter);
    if (opt.standardize) data = standardize(data);

    const GridResult fits = fit_grid(data, grid, config, opt.em.thread_count());
    const ReportDocument report = build_report(opt, data, fits, criteria, config);

    write_report(report, opt.out, parse_report_format(opt.format));
    if (!opt.tsv.empty()) write_report(report, opt.tsv, ReportFormat::Tsv);
    if (opt.plot || !opt.svg.empty()) write_text(opt.svg.empty() ? with_extension(opt.out, ".svg") : opt.svg, render_svg(report));

    std::cout << "n=" << data.n() << " d=" << data.d() << '\n';
    for (const auto& [c, spec] : report.selections)
        std::cout << std::left << std::setw(5) << to_string(c) << " selects " << to_string(spec.family)
                  << " K=" << spec.components << '\n';
    return 0;
}

struct SimulateOptions {
    std::string design;
    int replications = 100;
    std::vector<std::string> criteria{"aic,bic,icl,sicl"};
    std::string config_path;
    std::string out = "simulation";
    EmOptions em;
};

int cmd_simulate(const SimulateOptions& opt) {
    const EmConfig config = opt.em.config();
    ExperimentDesign design = default_design(parse_design(opt.design));
    if (!opt.config_path.empty()) apply_overrides_file(design, opt.config_path);
    const std::vector<Criterion> criteria = parse_criteria(opt.criteria);
    if (opt.replications < 1) throw UsageError("--reps must be >= 1");

    const FrequencyTable table = run_repeated(design, opt.replications, config, criteria, opt.em.thread_count());
    const std::string tsv = render_frequency_tsv(table);
    write_text(opt.out + ".tsv", tsv);
    write_text(opt.out + ".json", frequency_to_json(table, design, config).dump(2) + "\n");
    std::cout << tsv;
    if (table.failures > 0) std::cerr << table.failures << " replication(s) failed entirely\n";
    return 0;
}

struct ReportOptions {
    std::string input;
    std::string tsv;
    std::string svg;
};

int cmd_report(const ReportOptions& opt) {
    const ReportDocument report = read_report(opt.input);
    if (opt.tsv.empty() && opt.svg.empty()) {
        std::cout << render_tsv(report);
        return 0;
    }
    if (!opt.tsv.empty()) write_report(report, opt.tsv, ReportFormat::Tsv);
    if (!opt.svg.empty()) write_text(opt.svg, render_svg(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-based clustering with external-variable-aware model selection"};
    app.require_subcommand(1);

    FitOptions fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a (family, K) grid and select models");
    fit_cmd->add_option("--data", fit.data, "Delimited input file with a header row")->required();
    fit_cmd->add_option("--features", fit.features, "Feature columns: names or 1-based numbers/ranges (1-4)")
        ->required();
    fit_cmd->add_option("--external", fit.externals, "External categorical column(s), repeatable");
    fit_cmd->add_option("--family", fit.families, "full, diag, diag-fixed-shape (comma list)")->capture_default_str();
    fit_cmd->add_option("--k", fit.k_range, "K range a..b")->capture_default_str();
    fit_cmd->add_option("--criteria", fit.criteria, "aic, bic, icl, sicl (comma list)");
    fit_cmd->add_option("--delimiter", fit.delimiter, "Field delimiter")->capture_default_str();
    fit_cmd->add_flag("--standardize", fit.standardize, "Scale features to mean 0, variance 1");
    fit_cmd->add_option("--out", fit.out, "Report path")->capture_default_str();
    fit_cmd->add_option("--format", fit.format, "Report format for --out: json or tsv")->capture_default_str();
    fit_cmd->add_option("--tsv", fit.tsv, "Also write the criteria-vs-K table here");
    fit_cmd->add_flag("--plot", fit.plot, "Write an SVG chart next to --out");
    fit_cmd->add_option("--svg", fit.svg, "SVG chart path (implies --plot)");
    fit.em.add_to(*fit_cmd);

    SimulateOptions sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a synthetic design repeatedly and tabulate selections");
    sim_cmd->add_option("--design", sim.design, "cross, three-comp, random-labels or cond-dep")->required();
    sim_cmd->add_option("--reps", sim.replications, "Replications")->capture_default_str();
    sim_cmd->add_option("--criteria", sim.criteria, "Criteria to tabulate")->capture_default_str();
    sim_cmd->add_option("--config", sim.config_path, "key=value file overriding design parameters");
    sim_cmd->add_option("--out", sim.out, "Output prefix (writes PREFIX.tsv and PREFIX.json)")->capture_default_str();
    sim.em.add_to(*sim_cmd);

    ReportOptions rep;
    CLI::App* rep_cmd = app.add_subcommand("report", "Re-render TSV/SVG from a JSON report");
    rep_cmd->add_option("--input", rep.input, "JSON report written by fit")->required();
    rep_cmd->add_option("--tsv", rep.tsv, "TSV output path");
    rep_cmd->add_option("--svg", rep.svg, "SVG output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*fit_cmd) return cmd_fit(fit);
        if (*sim_cmd) return cmd_simulate(sim);
        if (*rep_cmd) return cmd_report(rep);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        for (const auto& line : e.diagnostics()) std::cerr << "  " << line << '\n';
        return kExitFit;
    } catch (const InsufficientDataError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kExitFit;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
