#include "vflux/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "vflux/errors.hpp"
#include "vflux/rng.hpp"

namespace vflux {

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
        if (!in) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return hex;
}

RunManifest::RunManifest(std::string command) {
    doc_["tool"] = kToolName;
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    doc_["inputs"] = nlohmann::json::array();
    doc_["outputs"] = nlohmann::json::array();
}

void RunManifest::set_config(nlohmann::json config) { doc_["config"] = std::move(config); }

void RunManifest::add_input(const std::filesystem::path& path) {
    doc_["inputs"].push_back({{"path", path.string()}, {"digest", file_digest(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) {
    doc_["outputs"].push_back(
        {{"path", path.filename().string()}, {"digest", file_digest(path)}});
}

void RunManifest::add_note(const std::string& note) { doc_["notes"].push_back(note); }

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << doc_.dump(2) << "\n";
    if (!out) throw FormatError(path.string() + ": write failed");
}

} // namespace vflux
