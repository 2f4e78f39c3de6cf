#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace okg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidKeyword : public Error {
public:
    using Error::Error;
};

class InvalidKpi : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class NoCategories : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class GenerationFailure : public Error {
public:
    using Error::Error;
};

// Tool-layer failure. `retriable` tells the caller whether backing off and
// trying again can possibly help (HTTP 429/5xx yes; schema mismatch no).
class ToolFailure : public Error {
public:
    explicit ToolFailure(const std::string& msg, bool retriable = false)
        : Error(msg), retriable_(retriable) {}
    bool retriable() const { return retriable_; }

private:
    bool retriable_;
};

class AuthError : public ToolFailure {
public:
    explicit AuthError(const std::string& msg) : ToolFailure(msg, false) {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Dataset/config validation failure; `line` is 1-based, 0 when not tied to a line.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg, std::size_t line = 0)
        : Error(msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class CorruptSnapshot : public Error {
public:
    using Error::Error;
};

class SnapshotVersionMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::string field = {})
        : Error(msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace okg
