#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sac/cli/cli.hpp"
#include "sac/core/codec.hpp"
#include "sac/error.hpp"

#ifndef SAC_DATA_DIR
#define SAC_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace sac::cli
{

std::optional<std::string> process_env(const char* name)
{
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0')
        return std::nullopt;
    return std::string(v);
}

Json load_json(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::ConfigError, "cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try
    {
        return core::parse_document(ss.str());
    }
    catch (const Error& e)
    {
        throw Error(ErrorKind::ConfigError, file.string() + ": " + e.what());
    }
}

Settings resolve_settings(const Overrides& flags, const EnvLookup& env)
{
    const fs::path data = SAC_DATA_DIR;
    Settings s;
    s.fixtures = data / "fixtures";
    s.script = data / "script.json";
    s.rules = data / "rules.json";
    s.store = "sac-store";

    if (flags.config)
    {
        const fs::path file = *flags.config;
        const auto doc = load_json(file);
        if (!doc.is_object())
            throw Error(ErrorKind::ConfigError, file.string() + ": config must be an object");
        const auto base = file.parent_path();
        auto path_of = [&](const char* key, fs::path& target) {
            if (!doc.contains(key))
                return;
            if (!doc.at(key).is_string())
                throw Error(ErrorKind::ConfigError, std::string(key) + " must be a path string");
            target = base / doc.at(key).get<std::string>();
        };
        for (const auto& [key, _] : doc.items())
            if (key != "fixtures" && key != "script" && key != "rules" && key != "store" && key != "port" && key != "qa")
                throw Error(ErrorKind::ConfigError, "unknown config key " + key);
        path_of("fixtures", s.fixtures);
        path_of("script", s.script);
        path_of("rules", s.rules);
        path_of("store", s.store);
        if (doc.contains("port"))
        {
            const auto& p = doc.at("port");
            if (!p.is_number_integer() || p.get<std::int64_t>() < 0 || p.get<std::int64_t>() > 65535)
                throw Error(ErrorKind::ConfigError, "port must be an integer in 0..65535");
            s.port = static_cast<std::uint16_t>(p.get<std::int64_t>());
        }
        if (doc.contains("qa"))
            s.qa = qa::QaConfig::from_json(doc.at("qa"));
    }

    if (auto v = env("SAC_STORE"))
        s.store = *v;

    if (flags.fixtures)
        s.fixtures = *flags.fixtures;
    if (flags.script)
        s.script = *flags.script;
    if (flags.rules)
        s.rules = *flags.rules;
    if (flags.store)
        s.store = *flags.store;
    if (flags.port)
    {
        if (*flags.port < 0 || *flags.port > 65535)
            throw Error(ErrorKind::ConfigError, "port must be in 0..65535");
        s.port = static_cast<std::uint16_t>(*flags.port);
    }
    return s;
}

Runtime Runtime::load(const Settings& settings)
{
    Runtime rt;
    try
    {
        rt.rules = intent::RuleTable::load(settings.rules);
        if (!fs::is_directory(settings.fixtures))
            throw Error(ErrorKind::ConfigError, "fixtures directory " + settings.fixtures.string() + " does not exist");
        rt.env.load_directory(settings.fixtures);
        rt.agent = std::make_unique<agent::ScriptedAgent>(agent::AgentScript::load(settings.script));
    }
    catch (const Error& e)
    {
        if (e.kind() == ErrorKind::ConfigError)
            throw;
        throw Error(ErrorKind::ConfigError, e.what());
    }
    catch (const std::exception& e)
    {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    rt.qa = settings.qa;
    return rt;
}

} // namespace sac::cli
