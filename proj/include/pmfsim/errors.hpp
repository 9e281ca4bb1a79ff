#pragma once

#include <stdexcept>
#include <string>

namespace pmfsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operator that must be unitary failed the unitarity check.
class NonUnitaryError : public Error {
public:
    using Error::Error;
};

/// Both fidelity arguments were mixed states; the trace formula is not a
/// fidelity in that regime.
class MixedStateError : public Error {
public:
    using Error::Error;
};

/// A quantity is undefined for the given input (e.g. visibility of an
/// all-zero fringe, heralding efficiency with zero singles).
class UndefinedValueError : public Error {
public:
    using Error::Error;
};

/// Arguments were supplied in the wrong order (e.g. c_min > c_max).
class ArgumentOrderError : public Error {
public:
    using Error::Error;
};

/// A dataset does not cover enough of the fringe to extract extrema, or a
/// summary is missing one of the required measurement settings.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// A constructed object violates one of its parameter constraints.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Configuration problem (unknown key, bad value, failed constraint).
/// Carries the offending key so diagnostics can name it.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Filesystem-level failure (cannot open, create, read or write a path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized data. Carries 1-based line/column of the first
/// offending cell where that is meaningful (0 = not applicable).
class SchemaError : public Error {
public:
    SchemaError(const std::string& message, std::size_t line = 0, std::size_t column = 0)
        : Error(locate(message, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string locate(const std::string& message, std::size_t line, std::size_t column) {
        if (line == 0) return message;
        std::string out = "line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
};

} // namespace pmfsim
