#pragma once

#include <stdexcept>
#include <string>

namespace h2cgl {

// Bad input data: malformed corpus lines, unknown ids, cache/config mismatches.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Line-numbered corpus parse failure.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Shape mismatches and other programming-contract violations in the numeric core.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values reached a loss or gradient.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace h2cgl
