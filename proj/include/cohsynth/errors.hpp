#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cohsynth {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DivergentIntegral : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A named field failed validation; the CLI maps this to exit status 2.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ToleranceNotMet : public std::runtime_error {
public:
    ToleranceNotMet(const std::string& what, double partial, double error)
        : std::runtime_error(what), partial_(partial), error_(error) {}
    double partial_result() const noexcept { return partial_; }
    double error_estimate() const noexcept { return error_; }

private:
    double partial_;
    double error_;
};

class DimensionExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ValidationError(field, what);
}

}  // namespace cohsynth
