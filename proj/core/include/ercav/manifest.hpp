#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ercav::runio {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kManifestName = "manifest.json";

[[nodiscard]] std::string sha256_hex(const std::string& data);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

struct OutputEntry {
    std::string path;  // relative to the output directory
    std::uint64_t bytes = 0;
    std::string sha256;
};

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string output_dir;
    std::string start_time;  // UTC, ISO 8601
    std::string end_time;
    /// ERCAV_OUT_DIR / ERCAV_THREADS values that took effect, if any.
    std::map<std::string, std::string> env_overrides;
    std::vector<OutputEntry> outputs;
};

[[nodiscard]] std::string utc_now_iso8601();

/// Hashes `files` (relative to `manifest.output_dir`) into the manifest.
void record_outputs(RunManifest& manifest, const std::vector<std::string>& files);

/// Writes manifest.json atomically into the output directory; returns its path.
std::filesystem::path write_manifest(const RunManifest& manifest);
[[nodiscard]] RunManifest read_manifest(const std::filesystem::path& path);

struct VerifyReport {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Re-hashes every listed output next to the manifest.
[[nodiscard]] VerifyReport verify_manifest(const std::filesystem::path& path);

}  // namespace ercav::runio
