#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sac/agent/backend.hpp"
#include "sac/cli/cli.hpp"
#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/environment/registry.hpp"
#include "sac/error.hpp"
#include "sac/intent/analysis.hpp"

namespace sac::test
{

using Json = nlohmann::json;

inline std::filesystem::path data_dir()
{
    return SAC_TEST_DATA;
}

inline std::filesystem::path docs_dir()
{
    return SAC_TEST_DOCS;
}

inline cli::Settings default_settings()
{
    cli::Settings s;
    s.fixtures = data_dir() / "fixtures";
    s.script = data_dir() / "script.json";
    s.rules = data_dir() / "rules.json";
    s.store = std::filesystem::temp_directory_path() / "sac-test-unused";
    return s;
}

inline cli::Runtime load_runtime()
{
    return cli::Runtime::load(default_settings());
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("sac-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline core::ViewNode node(const std::string& id, core::NodeKind kind, Json props = Json::object(),
                           std::vector<core::ViewNode> children = {})
{
    core::ViewNode n;
    n.node_id = id;
    n.kind = kind;
    n.props = props.is_null() ? Json::object() : std::move(props);
    n.children = std::move(children);
    return n;
}

template <class F>
ErrorKind error_kind_of(F&& f)
{
    try
    {
        f();
    }
    catch (const Error& e)
    {
        return e.kind();
    }
    ADD_FAILURE() << "no sac::Error raised";
    return ErrorKind::AssertionFailed;
}

} // namespace sac::test
