#include "cli/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace deltarank::cli {

std::uint64_t fnv1a(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)), start_(std::chrono::steady_clock::now())
{
}

void RunManifest::add_input(const std::filesystem::path& path)
{
    inputs_.push_back(path.string());
}

void RunManifest::mark(const std::string& label)
{
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    timings_.emplace_back(label, elapsed.count());
}

nlohmann::json RunManifest::to_json() const
{
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_.dump())));
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [label, seconds] : timings_) {
        timings[label] = seconds;
    }
    nlohmann::json j{{"command", command_},
                     {"config", config_},
                     {"config_hash", hash},
                     {"inputs", inputs_},
                     {"version", kToolVersion},
                     {"timings_seconds", timings}};
    j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
    return j;
}

void RunManifest::write_for(const std::filesystem::path& output) const
{
    const std::filesystem::path path = output.string() + ".manifest.json";
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

}  // namespace deltarank::cli
