#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/agent/plan.hpp"
#include "sac/core/types.hpp"
#include "sac/environment/types.hpp"
#include "sac/intent/analysis.hpp"

namespace sac::agent
{

using Json = nlohmann::json;

enum class Compatibility
{
    same_shape,
    new_facet,
    unrelated,
};

std::string_view to_string(Compatibility c) noexcept;

// Field-set algebra between incoming records and the record groups already
// rendered in `view`. A group is any node with at least one child that cites
// records; its rendered field set is the union of those children's prop keys.
// No new records counts as same_shape.
Compatibility assess_compatibility(const core::ViewNode& view, const std::vector<env::Record>& new_data);

// replace -> app_replacement; converge on a same-shape result ->
// element_update; anything else -> structural_extension.
core::Strategy select_strategy(intent::Hint hint, Compatibility compat) noexcept;

struct RenderRequest
{
    std::optional<core::AppState> prior_state; // absent on cold start
    std::variant<intent::InterpretedEvent, GenerationPlan> input;
    std::vector<env::Record> retrieved;
};

struct WriteRequest
{
    std::string action;
    Json params = Json::object();
};

// Environment interaction the agent wants before rendering.
struct ExecutionPlan
{
    std::vector<env::QuerySpec> queries;
    std::vector<WriteRequest> writes;
};

// The render contract. A model-backed agent implements the same two calls.
class AgentBackend
{
public:
    virtual ~AgentBackend() = default;

    virtual ExecutionPlan plan(const RenderRequest& request) const = 0;
    virtual core::Delta render(const RenderRequest& request) const = 0;
};

struct ScriptEntry
{
    std::string id;
    Json when = Json::object();
    std::vector<Json> queries; // QuerySpec documents, values may hold $param:/$pref: refs
    std::vector<WriteRequest> writes;
    std::optional<std::string> reply;
    Json view = Json::array(); // cold start: templates for the root's children
    Json ops = Json::array();  // evolution: op templates
    Json anticipatory = Json::array();
    Json preferences = Json::object();
    Json progress = Json::object();
    std::string summary;
};

struct AgentScript
{
    std::vector<ScriptEntry> entries;
    Json affordances = Json::array(); // structured affordance catalog

    static AgentScript from_json(const Json& doc);
    static AgentScript load(const std::filesystem::path& file);

    // Every entry whose trigger matches; rendering requires exactly one.
    std::vector<const ScriptEntry*> matching(const RenderRequest& request) const;
    const ScriptEntry* find(const std::string& id) const;
};

// Structured affordances: catalog items whose anchor exists in `view`.
// Anticipatory: the list of the script entry named by task_progress.stage.
core::AffordanceSet generate_affordances(const core::ViewNode& view, const core::AgentContext& context,
                                         const AgentScript& script);

struct ScriptedAgentOptions
{
    // Once history exceeds this many entries, older ones are compressed.
    std::size_t history_limit = 6;
    std::size_t history_keep = 4;
};

// Deterministic test double for a model-backed agent. Never improvises:
// a request no entry matches raises ScriptMiss.
class ScriptedAgent final : public AgentBackend
{
public:
    explicit ScriptedAgent(AgentScript script, ScriptedAgentOptions options = {});

    ExecutionPlan plan(const RenderRequest& request) const override;
    core::Delta render(const RenderRequest& request) const override;

    const AgentScript& script() const noexcept { return script_; }

private:
    const ScriptEntry& entry_for(const RenderRequest& request) const;
    core::Delta render_cold_start(const GenerationPlan& plan, const RenderRequest& request) const;
    core::Delta render_evolution(const intent::InterpretedEvent& event, const RenderRequest& request) const;

    AgentScript script_;
    ScriptedAgentOptions options_;
};

} // namespace sac::agent
