#include "lexpred/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lexpred {

std::string ConfigValidationError::join(const std::vector<ConfigError>& errors) {
    std::ostringstream out;
    out << "config validation failed (" << errors.size() << " error"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) {
        out << "\n  line " << e.line << ": " << e.message;
    }
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            cfg.errors_.push_back({lineno, "expected 'key = value', got '" + stripped + "'"});
            continue;
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            cfg.errors_.push_back({lineno, "empty key"});
            continue;
        }
        auto [it, inserted] = cfg.entries_.emplace(key, Entry{value, lineno, false});
        if (!inserted) {
            cfg.errors_.push_back(
                {lineno, "duplicate key '" + key + "' (first seen at line " +
                             std::to_string(it->second.line) + ")"});
        }
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

const Config::Entry* Config::fetch(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
}

void Config::record(const std::string& key, const std::string& message) {
    int line = 0;
    auto it = entries_.find(key);
    if (it != entries_.end()) line = it->second.line;
    errors_.push_back({line, message});
}

std::string Config::get_string(const std::string& key) {
    const Entry* e = fetch(key);
    if (!e) {
        record(key, "missing required key '" + key + "'");
        return "";
    }
    return e->value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    const Entry* e = fetch(key);
    return e ? e->value : fallback;
}

std::optional<std::string> Config::get_optional_string(const std::string& key) {
    const Entry* e = fetch(key);
    if (!e) return std::nullopt;
    return e->value;
}

long long Config::get_int(const std::string& key) {
    const Entry* e = fetch(key);
    if (!e) {
        record(key, "missing required key '" + key + "'");
        return 0;
    }
    long long v = 0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
        record(key, "key '" + key + "' expects an integer, got '" + e->value + "'");
        return 0;
    }
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    return get_int(key);
}

double Config::get_real(const std::string& key) {
    const Entry* e = fetch(key);
    if (!e) {
        record(key, "missing required key '" + key + "'");
        return 0.0;
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
        record(key, "key '" + key + "' expects a real number, got '" + e->value + "'");
        return 0.0;
    }
    return v;
}

double Config::get_real(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return get_real(key);
}

double Config::get_real_in(const std::string& key, double fallback, double lo, double hi,
                           bool lo_inclusive, bool hi_inclusive, const std::string& range) {
    if (!has(key)) return fallback;
    size_t errors_before = errors_.size();
    double v = get_real(key);
    if (errors_.size() != errors_before) return fallback;
    bool lo_ok = lo_inclusive ? v >= lo : v > lo;
    bool hi_ok = hi_inclusive ? v <= hi : v < hi;
    if (!lo_ok || !hi_ok) {
        record(key, "key '" + key + "' must lie in " + range + ", got " + std::to_string(v));
        return fallback;
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) {
    const Entry* e = fetch(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    record(key, "key '" + key + "' expects true/false, got '" + e->value + "'");
    return fallback;
}

uint64_t Config::get_seed(const std::string& key, uint64_t fallback) {
    const Entry* e = fetch(key);
    if (!e) return fallback;
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
        record(key, "key '" + key + "' expects an unsigned integer, got '" + e->value + "'");
        return fallback;
    }
    return v;
}

void Config::finish() {
    for (const auto& [key, entry] : entries_) {
        if (!entry.consumed) {
            errors_.push_back({entry.line, "unknown key '" + key + "'"});
        }
    }
    if (!errors_.empty()) throw ConfigValidationError(errors_);
}

}  // namespace lexpred
