#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fclm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSeedEnv = "FCLM_SEED";

/// Bad flags, missing or unreadable files: exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Written next to every command's outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::string> inputs;
    std::optional<std::uint64_t> seed;
    std::string tool_version = kToolVersion;
    double wall_time_seconds = 0.0;

    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;
};

/// Explicit flag, else FCLM_SEED, else the command default. A malformed
/// FCLM_SEED is an InputError.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t fallback);

/// Entry point without argv[0]. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fclm::cli
