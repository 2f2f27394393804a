#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lsw {

// FNV-1a of a file's bytes; identifies corpus/checkpoint inputs in manifests.
std::uint64_t file_checksum(const std::string& path);

struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;  // resolved flag -> value
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::uint64_t>> input_checksums;
    std::vector<std::string> artifacts;
    std::string started_at;
    std::string finished_at;

    void add(const std::string& key, const std::string& value) { config.emplace_back(key, value); }
};

std::string timestamp_utc();

// Written atomically (temp file + rename) at the end of a run.
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace lsw
