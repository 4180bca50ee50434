#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/agent/plan.hpp"
#include "sac/environment/types.hpp"

namespace sac::core
{

using Json = nlohmann::json;
using NodeId = std::string;
using AffordanceId = std::string;
using AppId = std::string;
using Timestamp = std::int64_t; // unix milliseconds

enum class NodeKind
{
    text,
    heading,
    badge,
    card,
    table,
    tab_group,
    tab,
    panel,
    list,
    map_view,
    stepper,
    checklist,
    image_ref,
    metric,
};

std::string_view to_string(NodeKind k) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view s);

// Node of the declarative view tree. `props` is a JSON object of scalars and
// lists of scalars; the reserved key "derived" marks computed values.
struct ViewNode
{
    NodeId node_id;
    NodeKind kind = NodeKind::panel;
    Json props = Json::object();
    std::vector<ViewNode> children;
    std::vector<env::RecordRef> source_refs;

    bool operator==(const ViewNode&) const = default;
};

enum class Verb
{
    filter,
    sort,
    select,
    toggle_view,
    expand,
    trigger_action,
};

std::string_view to_string(Verb v) noexcept;
std::optional<Verb> parse_verb(std::string_view s);

// Declared type of one affordance parameter.
struct ParamSpec
{
    std::string type; // string | number | integer | boolean
    std::optional<std::vector<Json>> allowed_values;
    std::optional<std::pair<double, double>> range;

    bool operator==(const ParamSpec&) const = default;
};

struct StructuredAffordance
{
    AffordanceId affordance_id;
    std::string label;
    NodeId anchor_node;
    Verb verb = Verb::select;
    std::map<std::string, ParamSpec> param_schema;
    std::optional<Json> resolved_params;

    bool operator==(const StructuredAffordance&) const = default;
};

struct AnticipatoryAffordance
{
    AffordanceId affordance_id;
    std::string label;
    std::string intent_text;

    bool operator==(const AnticipatoryAffordance&) const = default;
};

struct AffordanceSet
{
    std::vector<StructuredAffordance> structured;
    std::vector<AnticipatoryAffordance> anticipatory;
    bool nl_enabled = true;

    bool operator==(const AffordanceSet&) const = default;
};

enum class Strategy
{
    element_update,
    structural_extension,
    app_replacement,
    text_reply,
};

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view s);

struct HistoryEntry
{
    std::int64_t state_seq = 0; // basis the event acted on
    std::string event;
    Strategy strategy = Strategy::element_update;
    std::string summary;

    bool operator==(const HistoryEntry&) const = default;
};

struct AgentContext
{
    std::vector<env::Record> retrieved;
    Json preferences = Json::object();
    Json task_progress = Json::object();
    std::vector<HistoryEntry> history;
    std::optional<std::string> compressed_summary;

    bool operator==(const AgentContext&) const = default;

    const env::Record* find(const env::RecordRef& ref) const;
};

struct AppState
{
    AppId app_id;
    std::int64_t state_seq = 0;
    ViewNode view;
    AffordanceSet affordances;
    AgentContext context;
    std::int64_t content_rev = 0;
    Timestamp created_at = 0;

    bool operator==(const AppState&) const = default;

    // The empty prior state a cold start renders against: a bare root panel.
    static AppState empty(AppId app_id, Timestamp created_at);
};

enum class Channel
{
    structured,
    nl,
};

struct StructuredPayload
{
    AffordanceId affordance_id;
    Verb verb = Verb::select;
    Json params = Json::object();

    bool operator==(const StructuredPayload&) const = default;
};

struct NlPayload
{
    std::string text;
    std::optional<AffordanceId> via_anticipatory;

    bool operator==(const NlPayload&) const = default;
};

struct Event
{
    std::string event_id;
    std::string session_id;
    std::variant<StructuredPayload, NlPayload> payload;
    std::int64_t basis_state_seq = 0;

    Channel channel() const noexcept
    {
        return std::holds_alternative<StructuredPayload>(payload) ? Channel::structured : Channel::nl;
    }

    bool operator==(const Event&) const = default;
};

struct SetProps
{
    NodeId node_id;
    Json props = Json::object(); // null values erase the key

    bool operator==(const SetProps&) const = default;
};

struct InsertChild
{
    NodeId parent_id;
    std::size_t index = 0;
    ViewNode node;

    bool operator==(const InsertChild&) const = default;
};

struct RemoveNode
{
    NodeId node_id;

    bool operator==(const RemoveNode&) const = default;
};

using NodeOp = std::variant<SetProps, InsertChild, RemoveNode>;

struct AffordanceOps
{
    std::vector<StructuredAffordance> structured;
    std::vector<AnticipatoryAffordance> anticipatory;

    bool operator==(const AffordanceOps&) const = default;
};

struct ContextOps
{
    std::vector<env::Record> append_retrieved;
    Json merge_preferences = Json::object();
    Json merge_task_progress = Json::object();
    std::vector<HistoryEntry> append_history;
    // Fold all but the newest N history entries into compressed_summary.
    std::optional<std::size_t> compress_keep_last;

    bool operator==(const ContextOps&) const = default;
};

struct Delta
{
    Strategy strategy = Strategy::element_update;
    std::vector<NodeOp> node_ops;
    std::optional<AffordanceOps> affordance_ops; // absent = lists unchanged
    ContextOps context_ops;
    std::optional<std::string> reply_text;
    std::optional<agent::GenerationPlan> replacement_seed;

    bool operator==(const Delta&) const = default;
};

struct TextReply
{
    std::string text;

    bool operator==(const TextReply&) const = default;
};

struct NewAppRequest
{
    agent::GenerationPlan seed;

    bool operator==(const NewAppRequest&) const = default;
};

using TransitionResult = std::variant<AppState, TextReply, NewAppRequest>;

} // namespace sac::core
