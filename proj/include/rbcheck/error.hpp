#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbcheck {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input text could not be parsed; carries a 1-based position.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 1)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A configurable size or enumeration cap was hit.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Requested feature lies outside what this tool decides.
class Unsupported : public Error {
public:
    using Error::Error;
};

}  // namespace rbcheck
