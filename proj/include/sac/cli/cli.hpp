#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/agent/backend.hpp"
#include "sac/environment/registry.hpp"
#include "sac/intent/analysis.hpp"
#include "sac/qa/gate.hpp"

namespace sac::cli
{

using Json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;

struct Settings
{
    std::filesystem::path fixtures;
    std::filesystem::path script;
    std::filesystem::path rules;
    std::filesystem::path store;
    std::uint16_t port = 7411;
    qa::QaConfig qa;
};

// Values given on the command line; unset ones fall through.
struct Overrides
{
    std::optional<std::string> config;
    std::optional<std::string> fixtures;
    std::optional<std::string> script;
    std::optional<std::string> rules;
    std::optional<std::string> store;
    std::optional<int> port;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// Flag > environment (SAC_STORE, store only) > config file > built-in
// default. Config paths are relative to the config file. Throws ConfigError.
Settings resolve_settings(const Overrides& flags, const EnvLookup& env = process_env);

// Everything a service needs, loaded from disk.
struct Runtime
{
    intent::RuleTable rules;
    env::Registry env;
    std::unique_ptr<agent::ScriptedAgent> agent;
    qa::QaConfig qa;

    static Runtime load(const Settings& settings); // ConfigError on any load failure
};

struct ReplayReport
{
    std::string transcript;
    std::vector<std::string> failures;

    bool ok() const noexcept { return failures.empty(); }
};

// Drives a fresh session through the trace's steps on a logical clock and
// checks each step's expectations. The runtime's environment is mutated by
// the trace, so callers replaying twice load two runtimes.
ReplayReport replay(const Json& trace, Runtime& runtime);

Json load_json(const std::filesystem::path& file); // ConfigError

// Entry point of the `sac` tool.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace sac::cli
