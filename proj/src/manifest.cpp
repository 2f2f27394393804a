#include "lsw/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "lsw/rng.hpp"

namespace lsw {

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("checksum: cannot open '" + path + "'");
    }
    std::uint64_t h = 14695981039346656037ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.config) cfg[k] = v;
    j["config"] = std::move(cfg);
    j["seed"] = m.seed;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    char hex[32];
    for (const auto& [file, sum] : m.input_checksums) {
        std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(sum));
        inputs[file] = hex;
    }
    j["input_checksums"] = std::move(inputs);
    j["artifacts"] = m.artifacts;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("manifest: cannot open '" + tmp + "'");
        }
        out << j.dump(2) << "\n";
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("manifest: cannot move '" + tmp + "' to '" + path + "'");
    }
}

}  // namespace lsw
