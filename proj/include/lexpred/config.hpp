#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexpred/errors.hpp"

namespace lexpred {

struct ConfigError {
    int line = 0;
    std::string message;
};

// Thrown after validation so that every problem is reported at once.
class ConfigValidationError : public Error {
public:
    explicit ConfigValidationError(std::vector<ConfigError> errors)
        : Error(ErrorKind::data, join(errors)), errors_(std::move(errors)) {}
    const std::vector<ConfigError>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<ConfigError>& errors);
    std::vector<ConfigError> errors_;
};

// Flat `key = value` text, UTF-8, '#' comments. Values are typed on access;
// every access records an error instead of throwing, and finish() raises them
// all together (including unknown keys).
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    std::optional<std::string> get_optional_string(const std::string& key);

    long long get_int(const std::string& key);
    long long get_int(const std::string& key, long long fallback);

    // `range` is a human-readable constraint like "(0,100]"; inclusive flags
    // control the endpoint checks.
    double get_real(const std::string& key);
    double get_real(const std::string& key, double fallback);
    double get_real_in(const std::string& key, double fallback, double lo, double hi,
                       bool lo_inclusive, bool hi_inclusive, const std::string& range);

    bool get_bool(const std::string& key, bool fallback);

    uint64_t get_seed(const std::string& key, uint64_t fallback);

    // Unknown-key detection plus raise of any accumulated errors.
    void finish();

    const std::vector<ConfigError>& errors() const { return errors_; }
    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        bool consumed = false;
    };

    const Entry* fetch(const std::string& key);
    void record(const std::string& key, const std::string& message);

    std::string origin_;
    std::map<std::string, Entry> entries_;
    std::vector<ConfigError> errors_;
};

}  // namespace lexpred
