#include "tulpar/io/manifest.hpp"

#include <ctime>

#include <json.hpp>

#include "tulpar/io/atomic_file.hpp"

namespace tulpar::io {

using ordered_json = nlohmann::ordered_json;

std::string iso8601_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& artifact_path) {
    ordered_json j;
    j["command"] = manifest.command;
    j["config_path"] = manifest.config_path;
    j["seed"] = manifest.seed;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["started"] = manifest.started;
    j["finished"] = manifest.finished;
    j["tool_version"] = manifest.tool_version;
    atomic_write(artifact_path + ".manifest.json", j.dump(2) + "\n");
}

}  // namespace tulpar::io
