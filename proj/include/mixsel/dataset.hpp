#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "mixsel/errors.hpp"
#include "mixsel/external_variable.hpp"

namespace mixsel {

struct Standardization {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;  // biased standard deviations
};

struct Dataset {
    Eigen::MatrixXd features;  // n x d
    std::vector<std::string> feature_names;
    std::vector<ExternalVariable> externals;
    std::optional<Standardization> standardization;

    long n() const { return static_cast<long>(features.rows()); }
    int d() const { return static_cast<int>(features.cols()); }
};

namespace csv {

// Splits one record. Double quotes delimit fields that may contain the
// delimiter; "" inside a quoted field is a literal quote.
inline std::vector<std::string> split_record(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool is_missing(std::string_view token) {
    static constexpr std::string_view kMissing[] = {"", "NA", "N/A", "na", "NaN", "nan", "NULL", "null", "?", "."};
    return std::find(std::begin(kMissing), std::end(kMissing), token) != std::end(kMissing);
}

}  // namespace csv

// Reads a delimited text file with a header row. Feature columns are parsed
// as reals; external columns become categorical variables.
inline Dataset load_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                        const std::vector<std::string>& external_columns, char delimiter = ',') {
    if (feature_columns.empty()) throw SchemaError("at least one feature column is required");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty (a header row is required)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = csv::split_record(line, delimiter);
    for (auto& h : header) h = std::string(csv::trim(h));

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("column '" + name + "' not found in '" + path + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> feature_idx;
    for (const auto& name : feature_columns) feature_idx.push_back(column_index(name));
    std::vector<std::size_t> external_idx;
    for (const auto& name : external_columns) external_idx.push_back(column_index(name));

    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::string>> external_raw(external_columns.size());
    long row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (csv::trim(line).empty()) continue;
        const std::vector<std::string> fields = csv::split_record(line, delimiter);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row_number) + " has " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(header.size()),
                             row_number, "");
        std::vector<double> values;
        values.reserve(feature_idx.size());
        for (std::size_t c = 0; c < feature_idx.size(); ++c) {
            const std::string_view token = csv::trim(fields[feature_idx[c]]);
            const std::string& column = feature_columns[c];
            const std::string where = "row " + std::to_string(row_number) + ", column '" + column + "'";
            if (csv::is_missing(token)) throw ParseError("missing value at " + where, row_number, column);
            double value = 0.0;
            const char* begin = token.data();
            const char* end = token.data() + token.size();
            if (*begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc() || ptr != end || !std::isfinite(value))
                throw ParseError("cannot parse '" + std::string(token) + "' as a number at " + where, row_number,
                                 column);
            values.push_back(value);
        }
        for (std::size_t c = 0; c < external_idx.size(); ++c) {
            const std::string_view token = csv::trim(fields[external_idx[c]]);
            if (csv::is_missing(token))
                throw ParseError("missing value at row " + std::to_string(row_number) + ", column '" +
                                     external_columns[c] + "'",
                                 row_number, external_columns[c]);
            external_raw[c].emplace_back(token);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw SchemaError("'" + path + "' has no data rows");

    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_idx.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < feature_idx.size(); ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.feature_names = feature_columns;
    for (std::size_t c = 0; c < external_columns.size(); ++c)
        ds.externals.push_back(ExternalVariable::from_strings(external_columns[c], external_raw[c]));
    return ds;
}

// Header names of a delimited file, in file order.
inline std::vector<std::string> read_header(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty (a header row is required)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = csv::split_record(line, delimiter);
    for (auto& h : header) h = std::string(csv::trim(h));
    return header;
}

// Centers each feature and scales it to unit biased variance.
inline Dataset standardize(const Dataset& dataset) {
    const Eigen::Index n = dataset.features.rows();
    if (n == 0) throw DegenerateFeatureError("cannot standardize an empty dataset");
    Standardization t;
    t.means = dataset.features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = dataset.features.rowwise() - t.means.transpose();
    t.scales = (centered.array().square().colwise().sum() / static_cast<double>(n)).sqrt().transpose();
    for (Eigen::Index j = 0; j < t.scales.size(); ++j) {
        if (!(t.scales[j] > 0.0)) {
            const std::string name = j < static_cast<Eigen::Index>(dataset.feature_names.size())
                                         ? dataset.feature_names[static_cast<std::size_t>(j)]
                                         : "#" + std::to_string(j + 1);
            throw DegenerateFeatureError("feature '" + name + "' has zero variance");
        }
    }
    Dataset out = dataset;
    out.features = centered.array().rowwise() / t.scales.transpose().array();
    out.standardization = std::move(t);
    return out;
}

}  // namespace mixsel
