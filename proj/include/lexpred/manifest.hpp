#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lexpred::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record written alongside every output artifact. Replaying
// `arguments` through the CLI regenerates the artifacts byte-for-byte.
struct RunManifest {
    std::string command;
    std::vector<std::string> arguments;  // full normalized argv (without program name)
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::string started_at;
    std::string finished_at;

    void write(const std::string& path) const;
    static RunManifest read(const std::string& path);
};

std::string utc_timestamp();

}  // namespace lexpred::cli
