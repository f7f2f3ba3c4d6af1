#pragma once

#include <stdexcept>
#include <string>

namespace lexpred {

// Error taxonomy mapped onto CLI exit codes:
//   usage -> 1, data -> 2, numeric -> 3.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

// Malformed input text (XML/JSONL/config files). Carries source position.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(ErrorKind::data,
                msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// Structurally valid input violating the document schema (e.g. unknown section name).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Missing or invalid punishment-duration label.
class LabelError : public Error {
public:
    explicit LabelError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Invalid in-memory values: bad specs, bad configs, shape mismatches, format errors.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// A pipeline stage was invoked without the artifact a previous stage produces.
class StagedPipelineError : public Error {
public:
    explicit StagedPipelineError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Training divergence, singular systems, undefined metrics.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

}  // namespace lexpred
