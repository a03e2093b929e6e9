#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace srga {

// Exceptions fall into two families so the CLI can map them onto exit codes:
// validation problems (bad inputs, shapes, formats) exit with 2, numeric
// failures (degenerate fits, rank deficiency) exit with 3.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Payload decoded fine but violates a data invariant (e.g. non-finite values).
class DataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Caller broke an operation precondition (mismatched feature shapes,
/// reference listed as a test set, overlapping content subsets, ...).
class ContractError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public NumericError {
public:
    using NumericError::NumericError;
};

class RankError : public NumericError {
public:
    RankError(const std::string& what, std::size_t achievable_rank)
        : NumericError(what), achievable_rank_(achievable_rank) {}

    std::size_t achievable_rank() const noexcept { return achievable_rank_; }

private:
    std::size_t achievable_rank_;
};

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {
inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}
}  // namespace detail

/// Replaces the process-wide warning sink and returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler) {
    return std::exchange(detail::warning_handler(), std::move(handler));
}

inline void warn(const std::string& msg) {
    if (auto& h = detail::warning_handler()) h(msg);
}

}  // namespace srga
