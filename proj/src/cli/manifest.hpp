#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace deltarank::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Provenance record written next to every output file as `<output>.manifest.json`.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config);

    void add_input(const std::filesystem::path& path);
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    /// Records the seconds elapsed since construction under `label`.
    void mark(const std::string& label);

    nlohmann::json to_json() const;
    /// Writes the manifest for `output`.
    void write_for(const std::filesystem::path& output) const;

private:
    std::string command_;
    nlohmann::json config_;
    std::vector<std::string> inputs_;
    std::optional<std::uint64_t> seed_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace deltarank::cli
