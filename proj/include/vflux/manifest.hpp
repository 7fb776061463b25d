#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vflux {

constexpr const char* kToolName = "vflux";
constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64 digest of a file's bytes, hex-encoded.
std::string file_digest(const std::filesystem::path& path);

/// Accumulates everything needed to reproduce a run: the resolved
/// configuration, input paths and output digests. No clock is consulted, so
/// identical runs produce identical manifests.
class RunManifest {
public:
    explicit RunManifest(std::string command);

    void set_config(nlohmann::json config);
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void add_note(const std::string& note);

    void write(const std::filesystem::path& path) const;

private:
    nlohmann::json doc_;
};

} // namespace vflux
