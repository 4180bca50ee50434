#include <csignal>
#include <iostream>
#include <pthread.h>

#include <CLI11.hpp>

#include "sac/cli/cli.hpp"
#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"
#include "sac/service/session.hpp"
#include "sac/service/wire.hpp"
#include "sac/store/distribution.hpp"
#include "sac/store/file_store.hpp"

namespace fs = std::filesystem;

namespace sac::cli
{
namespace
{

void add_common(CLI::App& cmd, Overrides& o)
{
    cmd.add_option("--config", o.config, "JSON config file");
    cmd.add_option("--fixtures", o.fixtures, "fixture directory");
    cmd.add_option("--script", o.script, "agent script");
    cmd.add_option("--rules", o.rules, "intent rule table");
    cmd.add_option("--store", o.store, "store directory (falls back to SAC_STORE)");
}

int serve(const Settings& settings, std::ostream& out)
{
    auto rt = Runtime::load(settings);
    store::FileStore fstore(settings.store);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::SessionService svc(rt.rules, rt.env, *rt.agent, &fstore, service::ServiceOptions{rt.qa, {}});
    service::Server server(svc);
    const auto port = server.start(settings.port);
    out << "listening on 127.0.0.1:" << port << std::endl;
    int received = 0;
    sigwait(&signals, &received);
    server.stop();
    out << "stopped" << std::endl;
    return kExitOk;
}

int replay_cmd(const Settings& settings, const std::string& trace_file, const std::optional<std::string>& transcript_file,
               std::ostream& out, std::ostream& err)
{
    auto rt = Runtime::load(settings);
    const auto trace = load_json(trace_file);
    const auto report = replay(trace, rt);
    if (transcript_file)
        store::write_atomically(*transcript_file, report.transcript);
    else
        out << report.transcript;
    for (const auto& f : report.failures)
        err << "AssertionFailed: " << f << "\n";
    return report.ok() ? kExitOk : kExitAssertion;
}

int validate_cmd(const Settings& settings, std::ostream& out)
{
    auto rt = Runtime::load(settings);
    if (!fs::is_directory(settings.store))
        throw Error(ErrorKind::ConfigError, "no store at " + settings.store.string());
    store::FileStore fstore(settings.store);
    std::size_t errors = 0;
    std::size_t checked = 0;
    for (const auto& app : fstore.apps())
    {
        try
        {
            fstore.load_history(app);
        }
        catch (const Error& e)
        {
            ++errors;
            out << app << "/history.index error " << to_string(e.kind()) << " " << e.what() << "\n";
        }
        for (const auto& snap : fstore.snapshots(app))
        {
            ++checked;
            const auto where = app + "/" + snap.filename().string();
            core::AppState state;
            try
            {
                state = core::deserialize_state(store::read_file(snap));
            }
            catch (const Error& e)
            {
                ++errors;
                out << where << " error " << to_string(e.kind()) << " " << e.what() << "\n";
                continue;
            }
            for (const auto& v : core::validate_state(state))
            {
                ++errors;
                out << where << " error " << core::to_string(v.kind) << " at " << v.locus << ": " << v.message << "\n";
            }
            for (const auto& f : qa::gate(state, rt.env, rt.qa).findings)
            {
                if (f.severity == qa::Severity::error)
                    ++errors;
                out << where << " " << qa::to_string(f.severity) << " " << qa::to_string(f.cls) << " at " << f.locus
                    << ": " << f.message << "\n";
            }
        }
    }
    out << checked << " snapshots, " << errors << " findings\n";
    return errors == 0 ? kExitOk : kExitAssertion;
}

int export_cmd(const Settings& settings, const std::string& app, std::optional<std::int64_t> seq, const std::string& kind,
               const std::string& policy, const std::optional<std::string>& out_file, std::ostream& out)
{
    store::FileStore fstore(settings.store);
    const auto history = fstore.load_history(app);
    if (!history)
        throw Error(ErrorKind::ConfigError, "no stored app " + app);
    const auto state = fstore.load_state(app, seq.value_or(history->head));
    store::SharePackage pkg;
    if (kind == "template")
        pkg = store::export_share(store::extract_template(state));
    else
        pkg = store::export_share(state, policy == "live_reference" ? store::DataPolicy::live_reference
                                                                    : store::DataPolicy::static_snapshot);
    const auto bytes = store::encode_share(pkg);
    if (out_file)
        store::write_atomically(*out_file, bytes);
    else
        out << bytes << "\n";
    return kExitOk;
}

int import_cmd(const Settings& settings, const std::string& package, std::ostream& out)
{
    auto rt = Runtime::load(settings);
    store::FileStore fstore(settings.store);
    service::SessionService svc(rt.rules, rt.env, *rt.agent, &fstore, service::ServiceOptions{rt.qa, {}});
    const auto sid = svc.open_session();
    const auto outcome = svc.share_import(sid, store::read_file(package));
    out << "imported " << outcome.state->app_id << " seq=" << outcome.state->state_seq << "\n";
    return kExitOk;
}

} // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Software-as-content runtime: service host and operator tools", "sac"};
    app.require_subcommand(1);

    Overrides serve_o;
    auto* serve_cmd = app.add_subcommand("serve", "run the session service on a local port");
    add_common(*serve_cmd, serve_o);
    serve_cmd->add_option("--port", serve_o.port, "TCP port (0 picks one)");

    Overrides replay_o;
    std::string trace_file;
    std::optional<std::string> transcript_file;
    auto* replay_sub = app.add_subcommand("replay", "replay a scenario trace and check its expectations");
    add_common(*replay_sub, replay_o);
    replay_sub->add_option("trace", trace_file, "trace file")->required();
    replay_sub->add_option("--transcript", transcript_file, "write the transcript here instead of stdout");

    Overrides validate_o;
    auto* validate_sub = app.add_subcommand("validate", "check every stored snapshot");
    add_common(*validate_sub, validate_o);

    Overrides export_o;
    std::string export_app;
    std::optional<std::int64_t> export_seq;
    std::string export_kind = "state";
    std::string export_policy = "static_snapshot";
    std::optional<std::string> export_out;
    auto* export_sub = app.add_subcommand("export", "write a share package for a stored state");
    add_common(*export_sub, export_o);
    export_sub->add_option("--app", export_app, "app id")->required();
    export_sub->add_option("--seq", export_seq, "state_seq (default: head)");
    export_sub->add_option("--kind", export_kind, "state or template")->check(CLI::IsMember({"state", "template"}));
    export_sub->add_option("--policy", export_policy, "static_snapshot or live_reference")
        ->check(CLI::IsMember({"static_snapshot", "live_reference"}));
    export_sub->add_option("--out", export_out, "output file (default: stdout)");

    Overrides import_o;
    std::string import_package;
    auto* import_sub = app.add_subcommand("import", "import a share package into the store");
    add_common(*import_sub, import_o);
    import_sub->add_option("--package", import_package, "package file")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try
    {
        if (*serve_cmd)
            return serve(resolve_settings(serve_o), out);
        if (*replay_sub)
            return replay_cmd(resolve_settings(replay_o), trace_file, transcript_file, out, err);
        if (*validate_sub)
            return validate_cmd(resolve_settings(validate_o), out);
        if (*export_sub)
            return export_cmd(resolve_settings(export_o), export_app, export_seq, export_kind, export_policy, export_out, out);
        if (*import_sub)
            return import_cmd(resolve_settings(import_o), import_package, out);
    }
    catch (const Error& e)
    {
        err << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::IoError ? kExitConfig : kExitAssertion;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

} // namespace sac::cli
