#pragma once

#include <stdexcept>
#include <string>

namespace causalkit {

// Base for all toolkit errors. Subclasses map to CLI exit codes:
// ConfigError -> 1, OracleError -> 2, IoError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or input validation failure.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Graph-level misuse: unknown node ids, topological sort of a cyclic graph.
class GraphError : public Error {
public:
    using Error::Error;
};

// Oracle transport or parse failure. Carries the raw backend text when known.
class OracleError : public Error {
public:
    explicit OracleError(const std::string& what, std::string raw_text = {})
        : Error(what), raw_text_(std::move(raw_text)) {}

    const std::string& raw_text() const noexcept { return raw_text_; }

private:
    std::string raw_text_;
};

// Filesystem or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace causalkit
