#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "sac/service/session.hpp"
#include "sac/store/file_store.hpp"
#include "support.hpp"

namespace sac::test
{
namespace
{

constexpr const char* kCarUtterance =
    "I have a P2 licence and a medium-sized dog, and need a one-way car rental from Sydney to Melbourne for $80-100 a day";

struct Run
{
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "sac");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::string> data_flags(const std::filesystem::path& store)
{
    return {"--fixtures", (data_dir() / "fixtures").string(), "--script", (data_dir() / "script.json").string(),
            "--rules", (data_dir() / "rules.json").string(), "--store", store.string()};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail)
{
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

cli::EnvLookup env_of(std::map<std::string, std::string> vars)
{
    return [vars](const char* name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end())
            return std::nullopt;
        return it->second;
    };
}

TEST(Settings, FlagBeatsEnvironmentBeatsConfigBeatsDefault)
{
    TempDir dir("cfg");
    const auto config = dir.path() / "sac.json";
    std::ofstream(config) << R"({"store":"from-config","fixtures":"fx","port":9000,"qa":{"max_depth":6}})";

    const auto none = env_of({});
    const auto defaults = cli::resolve_settings({}, none);
    EXPECT_EQ(defaults.store, "sac-store");
    EXPECT_EQ(defaults.port, 7411);
    EXPECT_EQ(defaults.script.filename(), "script.json");

    cli::Overrides flags;
    flags.config = config.string();
    const auto from_config = cli::resolve_settings(flags, none);
    EXPECT_EQ(from_config.store, dir.path() / "from-config");
    EXPECT_EQ(from_config.fixtures, dir.path() / "fx");
    EXPECT_EQ(from_config.port, 9000);
    EXPECT_EQ(from_config.qa.max_depth, 6u);
    EXPECT_EQ(from_config.rules, defaults.rules);

    const auto from_env = cli::resolve_settings(flags, env_of({{"SAC_STORE", "/tmp/from-env"}}));
    EXPECT_EQ(from_env.store, "/tmp/from-env");
    EXPECT_EQ(from_env.fixtures, dir.path() / "fx");

    flags.store = "/tmp/from-flag";
    flags.port = 0;
    const auto from_flag = cli::resolve_settings(flags, env_of({{"SAC_STORE", "/tmp/from-env"}}));
    EXPECT_EQ(from_flag.store, "/tmp/from-flag");
    EXPECT_EQ(from_flag.port, 0);
}

TEST(Settings, BadConfigsAreConfigErrors)
{
    TempDir dir("cfg");
    const auto config = dir.path() / "sac.json";
    const auto none = env_of({});
    cli::Overrides flags;
    flags.config = config.string();
    for (const auto* body : {R"({"stor":"x"})", R"({"port":70000})", R"({"store":3})", R"([1])", R"({"qa":{"depth":1}})",
                             "{"})
    {
        std::ofstream(config, std::ios::trunc) << body;
        EXPECT_EQ(error_kind_of([&] { cli::resolve_settings(flags, none); }), ErrorKind::ConfigError) << body;
    }
    flags.config = (dir.path() / "missing.json").string();
    EXPECT_EQ(error_kind_of([&] { cli::resolve_settings(flags, none); }), ErrorKind::ConfigError);
    cli::Overrides port;
    port.port = -1;
    EXPECT_EQ(error_kind_of([&] { cli::resolve_settings(port, none); }), ErrorKind::ConfigError);

    auto s = default_settings();
    s.script = dir.path() / "none.json";
    EXPECT_EQ(error_kind_of([&] { cli::Runtime::load(s); }), ErrorKind::ConfigError);
    s = default_settings();
    s.fixtures = dir.path() / "none";
    EXPECT_EQ(error_kind_of([&] { cli::Runtime::load(s); }), ErrorKind::ConfigError);
}

TEST(Cli, UsageErrorsExitWithTwo)
{
    EXPECT_EQ(run({}).code, cli::kExitConfig);
    EXPECT_EQ(run({"launch"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"replay"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
    TempDir dir("cli");
    EXPECT_EQ(run(with({"replay", (dir.path() / "nope.json").string()}, data_flags(dir.path()))).code, cli::kExitConfig);
    EXPECT_EQ(run(with({"validate"}, data_flags(dir.path() / "absent"))).code, cli::kExitConfig);
}

TEST(Cli, ShippedTracesReplayCleanly)
{
    TempDir dir("cli");
    for (const auto& entry : std::filesystem::directory_iterator(data_dir() / "traces"))
    {
        const auto r = run(with({"replay", entry.path().string()}, data_flags(dir.path())));
        EXPECT_EQ(r.code, cli::kExitOk) << entry.path() << "\n" << r.err;
        EXPECT_FALSE(r.out.empty());
    }
}

TEST(Cli, FailedExpectationExitsWithOne)
{
    TempDir dir("cli");
    const auto trace = dir.path() / "bad.json";
    std::ofstream(trace) << R"({"name":"bad","steps":[{"utter":"hi","expect":{"outcome":"app_created"}}]})";
    const auto r = run(with({"replay", trace.string()}, data_flags(dir.path())));
    EXPECT_EQ(r.code, cli::kExitAssertion);
    EXPECT_NE(r.err.find("AssertionFailed"), std::string::npos);
}

// Oracle: two replays of the same trace on fresh runtimes produce the same
// bytes.
TEST(Cli, ReplayTranscriptsAreByteIdentical)
{
    TempDir dir("cli");
    for (const auto* name : {"car_rental.json", "bbq.json", "ssn.json", "boundary.json"})
    {
        const auto a = dir.path() / (std::string("a-") + name);
        const auto b = dir.path() / (std::string("b-") + name);
        ASSERT_EQ(run(with({"replay", (data_dir() / "traces" / name).string(), "--transcript", a.string()},
                           data_flags(dir.path())))
                      .code,
                  cli::kExitOk);
        ASSERT_EQ(run(with({"replay", (data_dir() / "traces" / name).string(), "--transcript", b.string()},
                           data_flags(dir.path())))
                      .code,
                  cli::kExitOk);
        const auto bytes = store::read_file(a);
        EXPECT_FALSE(bytes.empty());
        EXPECT_EQ(bytes, store::read_file(b)) << name;
    }
}

core::AppId populate(const std::filesystem::path& root)
{
    auto rt = load_runtime();
    store::FileStore fs(root);
    service::SessionService svc(rt.rules, rt.env, *rt.agent, &fs, {});
    const auto sid = svc.open_session();
    const auto app = svc.submit_utterance(sid, kCarUtterance).state->app_id;
    core::Event e;
    e.payload = core::StructuredPayload{"aff.car.sort", core::Verb::sort, Json{{"field", "one_way_fee"}}};
    svc.dispatch_affordance(sid, e);
    return app;
}

TEST(Cli, ValidateFlagsACorruptedSnapshot)
{
    TempDir dir("cli");
    const auto app = populate(dir.path());
    const auto clean = run(with({"validate"}, data_flags(dir.path())));
    EXPECT_EQ(clean.code, cli::kExitOk) << clean.out;
    EXPECT_NE(clean.out.find("2 snapshots, 0 findings"), std::string::npos) << clean.out;

    const auto snap = dir.path() / app / store::snapshot_name(1);
    auto bytes = store::read_file(snap);
    bytes.resize(bytes.size() / 2);
    store::write_atomically(snap, bytes);
    const auto broken = run(with({"validate"}, data_flags(dir.path())));
    EXPECT_EQ(broken.code, cli::kExitAssertion);
    EXPECT_NE(broken.out.find("DecodeError"), std::string::npos) << broken.out;
    EXPECT_NE(broken.out.find("2 snapshots, 1 findings"), std::string::npos) << broken.out;
}

TEST(Cli, ValidateReportsDanglingAnchorsInAWellFormedSnapshot)
{
    TempDir dir("cli");
    const auto app = populate(dir.path());
    const auto snap = dir.path() / app / store::snapshot_name(0);
    auto state = core::deserialize_state(store::read_file(snap));
    state.affordances.structured[0].anchor_node = "car.gone";
    store::write_atomically(snap, core::serialize_state(state));
    const auto r = run(with({"validate"}, data_flags(dir.path())));
    EXPECT_EQ(r.code, cli::kExitAssertion);
    EXPECT_NE(r.out.find("DanglingAffordanceAnchor"), std::string::npos) << r.out;
}

TEST(Cli, ExportThenImportRoundTrips)
{
    TempDir src("cli");
    TempDir dst("cli");
    const auto app = populate(src.path());
    const auto pkg = src.path() / "car.share";
    ASSERT_EQ(run(with({"export", "--app", app, "--seq", "0", "--out", pkg.string()}, data_flags(src.path()))).code,
              cli::kExitOk);
    EXPECT_EQ(store::read_file(pkg).rfind("SAC-SHARE/1 kind=state policy=static_snapshot\n", 0), 0u);
    const auto imported = run(with({"import", "--package", pkg.string()}, data_flags(dst.path())));
    ASSERT_EQ(imported.code, cli::kExitOk) << imported.err;
    EXPECT_NE(imported.out.find("seq=0"), std::string::npos);

    store::FileStore a(src.path());
    store::FileStore b(dst.path());
    ASSERT_EQ(b.apps().size(), 1u);
    auto original = a.load_state(app, 0);
    original.app_id = b.apps()[0];
    EXPECT_EQ(b.load_state(b.apps()[0], 0), original);

    const auto tpl = run(with({"export", "--app", app, "--kind", "template"}, data_flags(src.path())));
    EXPECT_EQ(tpl.code, cli::kExitOk);
    EXPECT_EQ(tpl.out.rfind("SAC-SHARE/1 kind=template\n", 0), 0u);
    EXPECT_EQ(run(with({"export", "--app", "app-404"}, data_flags(src.path()))).code, cli::kExitConfig);
    EXPECT_EQ(run(with({"export", "--app", app, "--kind", "zip"}, data_flags(src.path()))).code, cli::kExitConfig);
}

} // namespace
} // namespace sac::test
