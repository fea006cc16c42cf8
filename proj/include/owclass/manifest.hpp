#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace owclass {

/// FNV-1a over the exact bytes; stable across platforms.
std::uint64_t stable_hash(std::string_view bytes);
std::string stable_hash_hex(std::string_view bytes);

/// Provenance record emitted for every CLI run.
struct RunManifest {
    std::string command;
    std::string config_hash;
    long long seed = 0;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

std::string iso8601_utc_now();

}  // namespace owclass
