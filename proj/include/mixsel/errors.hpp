#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mixsel {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid mixture parameters: non-PD covariance, bad proportions, ...
class ParameterDomainError : public Error {
public:
    using Error::Error;
};

// Dimension or length mismatch between arguments.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An M-step saw a component whose total responsibility collapsed.
class DegenerateClusterError : public Error {
public:
    DegenerateClusterError(int component, double weight)
        : Error("component " + std::to_string(component) + " has total responsibility " +
                std::to_string(weight) + " below the degeneracy threshold"),
          component_(component), weight_(weight) {}

    DegenerateClusterError(int component, double weight, const std::string& what)
        : Error(what), component_(component), weight_(weight) {}

    int component() const { return component_; }
    double weight() const { return weight_; }

private:
    int component_;
    double weight_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Every restart of a fit failed. Carries one diagnostic line per restart.
class FitError : public Error {
public:
    FitError(const std::string& what, std::vector<std::string> diagnostics)
        : Error(what), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

// Unparseable cell in a delimited file. Row is 1-based and counts the header as row 1.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long row, std::string column)
        : Error(what), row_(row), column_(std::move(column)) {}

    long row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    long row_;
    std::string column_;
};

class DegenerateFeatureError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mixsel
