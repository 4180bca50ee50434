#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/agent/backend.hpp"
#include "sac/agent/plan.hpp"
#include "sac/core/types.hpp"
#include "sac/environment/registry.hpp"
#include "sac/intent/analysis.hpp"

namespace sac::store
{

using Json = nlohmann::json;

// The generative form of an app with none of its content: no context, no
// record payloads, no preference values.
struct AppTemplate
{
    std::string template_id;
    intent::IntentAssessment assessment;
    agent::Architecture architecture = agent::Architecture::parallel_items;
    std::vector<env::QuerySpec> queries; // sources and projections only
    core::ViewNode skeleton;
    std::vector<core::StructuredAffordance> affordances;

    bool operator==(const AppTemplate&) const = default;
};

void to_json(Json& j, const AppTemplate& t);
void from_json(const Json& j, AppTemplate& t);

// Requires the generation plan the state was built from (kept in
// task_progress.plan); throws SchemaViolation without one.
AppTemplate extract_template(const core::AppState& state);

// What the pipeline needs to build a fresh s0.
struct GenerationEnv
{
    const intent::RuleTable& rules;
    env::Registry& env;
    const agent::AgentBackend& agent;
    core::AppId app_id;
    core::Timestamp now = 0;
};

// Runs cold start with the template's plan. Query predicates come from the
// utterance's own assessment when it names the same source. Throws
// UnknownSource when the environment lacks a template source.
core::AppState instantiate_template(const AppTemplate& t, std::string_view utterance, const GenerationEnv& g);

// Re-fetches every stale cited record and rewrites the props that showed
// its old values. Structure and state_seq are kept; content_rev always
// advances. Derived props are left as they were.
core::AppState refresh_data(const core::AppState& state, const env::Registry& env);

enum class ShareKind
{
    state,
    app_template,
};

enum class DataPolicy
{
    static_snapshot,
    live_reference,
};

struct SharePackage
{
    ShareKind kind = ShareKind::state;
    DataPolicy policy = DataPolicy::static_snapshot;
    std::string body; // canonical state or template document

    bool operator==(const SharePackage&) const = default;
};

SharePackage export_share(const core::AppState& state, DataPolicy policy);
SharePackage export_share(const AppTemplate& t);

// Single-file container: "SAC-SHARE/1 kind=<k> policy=<p>\n" then the body.
std::string encode_share(const SharePackage& pkg);
SharePackage decode_share(std::string_view bytes); // DecodeError

// static_snapshot: the state as exported; live_reference: that state after
// refresh_data; template: instantiate_template with an empty utterance.
core::AppState import_share(const SharePackage& pkg, const GenerationEnv& g);

} // namespace sac::store
