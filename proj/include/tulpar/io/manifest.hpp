#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tulpar::io {

// Provenance sidecar written next to every output artifact so runs can be
// reproduced from the artifact alone.
struct RunManifest {
    std::string command;
    std::string config_path;
    int64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string started;   // ISO 8601 UTC
    std::string finished;
    std::string tool_version;
};

std::string iso8601_now();

// Writes <artifact_path>.manifest.json atomically.
void write_manifest(const RunManifest& manifest, const std::string& artifact_path);

}  // namespace tulpar::io
