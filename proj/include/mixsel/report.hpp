#pragma once

// Report document and its JSON / TSV / SVG renderings.
//
// JSON schema (all reals at full double precision):
//   {
//     "meta": {"seed", "restarts", "max_iterations", "rel_tolerance", "init",
//              "data", "n", "d", "features": [..], "externals": [..],
//              "standardized", "criteria": [..]},
//     "scores": [{"family", "K", "d", "n", "free_parameters", "loglik", "aic",
//                 "bic", "entropy", "icl", "sicl" (number or null),
//                 "association_terms": [{"external", "value"}],
//                 "iterations", "converged"}],
//     "selections": {"<criterion>": {"family", "K"}},
//     "contingency_tables": [{"criterion", "family", "K", "external",
//                             "levels": [..], "counts": [[..] per cluster]}]
//   }

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mixsel/criteria.hpp"
#include "mixsel/errors.hpp"

namespace mixsel {

struct RunMetadata {
    std::uint64_t seed = 0;
    int restarts = 0;
    int max_iterations = 0;
    double rel_tolerance = 0.0;
    std::string init;
    std::string data;
    long n = 0;
    int d = 0;
    std::vector<std::string> features;
    std::vector<std::string> externals;
    bool standardized = false;
    std::vector<Criterion> criteria;

    friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct ContingencyReport {
    Criterion criterion = Criterion::SICL;
    ModelSpec spec;
    std::string external;
    std::vector<std::string> levels;
    std::vector<std::vector<long>> counts;  // one row per cluster

    friend bool operator==(const ContingencyReport&, const ContingencyReport&) = default;
};

struct ReportDocument {
    RunMetadata meta;
    std::vector<CriterionScores> scores;
    std::vector<std::pair<Criterion, ModelSpec>> selections;
    std::vector<ContingencyReport> contingency_tables;
};

inline bool operator==(const CriterionScores& a, const CriterionScores& b) {
    return a.spec == b.spec && a.n == b.n && a.free_parameters == b.free_parameters && a.loglik == b.loglik &&
           a.aic == b.aic && a.bic == b.bic && a.entropy == b.entropy && a.icl == b.icl && a.sicl == b.sicl &&
           a.association_terms == b.association_terms && a.iterations == b.iterations && a.converged == b.converged;
}

inline bool operator==(const ReportDocument& a, const ReportDocument& b) {
    return a.meta == b.meta && a.scores == b.scores && a.selections == b.selections &&
           a.contingency_tables == b.contingency_tables;
}

enum class ReportFormat { Json, Tsv };

inline ReportFormat parse_report_format(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "tsv") return ReportFormat::Tsv;
    throw UsageError("unknown report format '" + std::string(name) + "' (expected json or tsv)");
}

inline ContingencyReport make_contingency_report(Criterion criterion, const ModelSpec& spec,
                                                 const ExternalVariable& ext, const ContingencyTable& table) {
    ContingencyReport out{criterion, spec, ext.name(), ext.levels(), {}};
    for (Eigen::Index k = 0; k < table.counts.rows(); ++k) {
        std::vector<long> row;
        for (Eigen::Index l = 0; l < table.counts.cols(); ++l) row.push_back(table.counts(k, l));
        out.counts.push_back(std::move(row));
    }
    return out;
}

// ---- JSON ----

inline nlohmann::json to_json(const ReportDocument& report) {
    using nlohmann::json;
    json meta = {{"seed", report.meta.seed},
                 {"restarts", report.meta.restarts},
                 {"max_iterations", report.meta.max_iterations},
                 {"rel_tolerance", report.meta.rel_tolerance},
                 {"init", report.meta.init},
                 {"data", report.meta.data},
                 {"n", report.meta.n},
                 {"d", report.meta.d},
                 {"features", report.meta.features},
                 {"externals", report.meta.externals},
                 {"standardized", report.meta.standardized}};
    json criteria = json::array();
    for (Criterion c : report.meta.criteria) criteria.push_back(std::string(to_string(c)));
    meta["criteria"] = criteria;

    json scores = json::array();
    for (const CriterionScores& s : report.scores) {
        json terms = json::array();
        for (const auto& [name, value] : s.association_terms) terms.push_back({{"external", name}, {"value", value}});
        scores.push_back({{"family", std::string(to_string(s.spec.family))},
                          {"K", s.spec.components},
                          {"d", s.spec.dimension},
                          {"n", s.n},
                          {"free_parameters", s.free_parameters},
                          {"loglik", s.loglik},
                          {"aic", s.aic},
                          {"bic", s.bic},
                          {"entropy", s.entropy},
                          {"icl", s.icl},
                          {"sicl", s.sicl ? json(*s.sicl) : json(nullptr)},
                          {"association_terms", terms},
                          {"iterations", s.iterations},
                          {"converged", s.converged}});
    }
    json selections = json::object();
    for (const auto& [criterion, spec] : report.selections)
        selections[std::string(to_string(criterion))] = {{"family", std::string(to_string(spec.family))},
                                                         {"K", spec.components}};
    json tables = json::array();
    for (const ContingencyReport& t : report.contingency_tables)
        tables.push_back({{"criterion", std::string(to_string(t.criterion))},
                          {"family", std::string(to_string(t.spec.family))},
                          {"K", t.spec.components},
                          {"external", t.external},
                          {"levels", t.levels},
                          {"counts", t.counts}});
    return {{"meta", meta}, {"scores", scores}, {"selections", selections}, {"contingency_tables", tables}};
}

inline ReportDocument report_from_json(const nlohmann::json& j) {
    ReportDocument r;
    try {
        const auto& meta = j.at("meta");
        r.meta.seed = meta.at("seed").get<std::uint64_t>();
        r.meta.restarts = meta.at("restarts").get<int>();
        r.meta.max_iterations = meta.at("max_iterations").get<int>();
        r.meta.rel_tolerance = meta.at("rel_tolerance").get<double>();
        r.meta.init = meta.at("init").get<std::string>();
        r.meta.data = meta.at("data").get<std::string>();
        r.meta.n = meta.at("n").get<long>();
        r.meta.d = meta.at("d").get<int>();
        r.meta.features = meta.at("features").get<std::vector<std::string>>();
        r.meta.externals = meta.at("externals").get<std::vector<std::string>>();
        r.meta.standardized = meta.at("standardized").get<bool>();
        for (const auto& c : meta.at("criteria")) r.meta.criteria.push_back(parse_criterion(c.get<std::string>()));

        for (const auto& s : j.at("scores")) {
            CriterionScores cs;
            cs.spec = {parse_family(s.at("family").get<std::string>()), s.at("K").get<int>(), s.at("d").get<int>()};
            cs.n = s.at("n").get<long>();
            cs.free_parameters = s.at("free_parameters").get<long>();
            cs.loglik = s.at("loglik").get<double>();
            cs.aic = s.at("aic").get<double>();
            cs.bic = s.at("bic").get<double>();
            cs.entropy = s.at("entropy").get<double>();
            cs.icl = s.at("icl").get<double>();
            if (!s.at("sicl").is_null()) cs.sicl = s.at("sicl").get<double>();
            for (const auto& t : s.at("association_terms"))
                cs.association_terms.emplace_back(t.at("external").get<std::string>(), t.at("value").get<double>());
            cs.iterations = s.at("iterations").get<int>();
            cs.converged = s.at("converged").get<bool>();
            r.scores.push_back(std::move(cs));
        }
        for (const auto& [name, sel] : j.at("selections").items()) {
            const ModelSpec spec{parse_family(sel.at("family").get<std::string>()), sel.at("K").get<int>(),
                                 r.meta.d};
            const bool listed = std::any_of(r.scores.begin(), r.scores.end(), [&](const CriterionScores& s) {
                return s.spec.family == spec.family && s.spec.components == spec.components;
            });
            if (!listed) throw SchemaError("selection for '" + name + "' is not among the scores");
            r.selections.emplace_back(parse_criterion(name), spec);
        }
        // Keep selections in canonical criterion order independent of JSON key order.
        std::sort(r.selections.begin(), r.selections.end(),
                  [](const auto& a, const auto& b) { return static_cast<int>(a.first) < static_cast<int>(b.first); });
        for (const auto& t : j.at("contingency_tables")) {
            ContingencyReport c;
            c.criterion = parse_criterion(t.at("criterion").get<std::string>());
            c.spec = {parse_family(t.at("family").get<std::string>()), t.at("K").get<int>(), r.meta.d};
            c.external = t.at("external").get<std::string>();
            c.levels = t.at("levels").get<std::vector<std::string>>();
            c.counts = t.at("counts").get<std::vector<std::vector<long>>>();
            r.contingency_tables.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what(), 0, "");
    } catch (const UsageError& e) {
        throw ParseError(std::string("malformed report: ") + e.what(), 0, "");
    } catch (const SchemaError& e) {
        throw ParseError(std::string("malformed report: ") + e.what(), 0, "");
    }
    return r;
}

inline ReportDocument read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "' is not valid JSON: " + e.what(), 0, "");
    }
    return report_from_json(j);
}

// ---- TSV ----

namespace detail {

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Families in first-appearance order and the distinct K values, ascending.
inline std::pair<std::vector<CovarianceFamily>, std::vector<int>> report_axes(const ReportDocument& report) {
    std::vector<CovarianceFamily> families;
    std::vector<int> ks;
    for (const auto& s : report.scores) {
        if (std::find(families.begin(), families.end(), s.spec.family) == families.end())
            families.push_back(s.spec.family);
        if (std::find(ks.begin(), ks.end(), s.spec.components) == ks.end()) ks.push_back(s.spec.components);
    }
    std::sort(ks.begin(), ks.end());
    return {families, ks};
}

inline const CriterionScores* find_score(const ReportDocument& report, CovarianceFamily family, int k) {
    for (const auto& s : report.scores)
        if (s.spec.family == family && s.spec.components == k) return &s;
    return nullptr;
}

}  // namespace detail

// Rows: K. Columns: family:criterion for each requested criterion.
inline std::string render_tsv(const ReportDocument& report) {
    const auto [families, ks] = detail::report_axes(report);
    std::ostringstream out;
    out << "K";
    for (CovarianceFamily f : families)
        for (Criterion c : report.meta.criteria) out << '\t' << to_string(f) << ':' << to_string(c);
    out << '\n';
    for (int k : ks) {
        out << k;
        for (CovarianceFamily f : families) {
            const CriterionScores* s = detail::find_score(report, f, k);
            for (Criterion c : report.meta.criteria) {
                const auto v = s ? s->value(c) : std::nullopt;
                out << '\t' << (v ? detail::format_real(*v) : "NA");
            }
        }
        out << '\n';
    }
    return out.str();
}

// ---- SVG ----

// Line chart of criterion value against K: one polyline per (family, criterion).
inline std::string render_svg(const ReportDocument& report) {
    const auto [families, ks] = detail::report_axes(report);
    struct Series {
        std::string label;
        std::vector<std::pair<int, double>> points;
    };
    std::vector<Series> series;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (CovarianceFamily f : families) {
        for (Criterion c : report.meta.criteria) {
            Series s{families.size() > 1 ? std::string(to_string(f)) + ":" + std::string(to_string(c))
                                         : std::string(to_string(c)),
                     {}};
            for (int k : ks) {
                const CriterionScores* sc = detail::find_score(report, f, k);
                if (!sc) continue;
                if (const auto v = sc->value(c)) {
                    s.points.emplace_back(k, *v);
                    lo = std::min(lo, *v);
                    hi = std::max(hi, *v);
                }
            }
            series.push_back(std::move(s));
        }
    }
    if (!(hi > lo)) {
        lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
        hi = lo + 2.0;
    }
    const int k_lo = ks.empty() ? 0 : ks.front();
    const int k_hi = ks.empty() ? 1 : std::max(ks.back(), k_lo + 1);

    constexpr double width = 640, height = 420, left = 80, right = 150, top = 30, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto x_of = [&](int k) { return left + plot_w * (k - k_lo) / static_cast<double>(k_hi - k_lo); };
    auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int k : ks)
        svg << "<text x=\"" << num(x_of(k)) << "\" y=\"" << num(top + plot_h + 18) << "\" text-anchor=\"middle\">"
            << k << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << num(y_of(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << height - 15
        << "\" text-anchor=\"middle\">number of clusters K</text>\n";
    svg << "<text x=\"18\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << num(top + plot_h / 2) << ")\">criterion value</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kColors[i % std::size(kColors)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t p = 0; p < series[i].points.size(); ++p) {
            if (p) svg << ' ';
            svg << num(x_of(series[i].points[p].first)) << ',' << num(y_of(series[i].points[p].second));
        }
        svg << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(i) + 8;
        svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << left + plot_w + 32
            << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << num(ly + 4) << "\">" << series[i].label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_report(const ReportDocument& report, const std::string& path, ReportFormat format) {
    if (format == ReportFormat::Json)
        write_text(path, to_json(report).dump(2) + "\n");
    else
        write_text(path, render_tsv(report));
}

}  // namespace mixsel
