#include "sac/core/codec.hpp"

#include <stdexcept>

#include "sac/error.hpp"

namespace sac
{
namespace
{

using nlohmann::json;

template <typename E, typename Parser>
E parse_enum(const json& j, const char* key, Parser parser)
{
    const auto& text = j.at(key).get_ref<const std::string&>();
    auto parsed = parser(text);
    if (!parsed)
        throw std::invalid_argument(std::string("bad value for '") + key + "': " + text);
    return *parsed;
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null())
        out = it->get<T>();
    else
        out.reset();
}

json object_or_empty(const json& j, const char* key)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null())
    {
        if (!it->is_object())
            throw std::invalid_argument(std::string("'") + key + "' must be an object");
        return *it;
    }
    return json::object();
}

} // namespace

namespace env
{

std::string to_string(const RecordRef& ref)
{
    return ref.source + "/" + ref.record_id + "@" + std::to_string(ref.version);
}

void to_json(Json& j, const Condition& c) { j = Json{{"op", c.op}, {"value", c.value}}; }

void from_json(const Json& j, Condition& c)
{
    c.op = j.at("op").get<std::string>();
    c.value = j.at("value");
}

void to_json(Json& j, const QuerySpec& q)
{
    j = Json{{"source", q.source}, {"predicate", q.predicate}, {"projection", q.projection}};
    if (q.limit)
        j["limit"] = *q.limit;
}

void from_json(const Json& j, QuerySpec& q)
{
    q.source = j.at("source").get<std::string>();
    q.predicate = object_or_empty(j, "predicate").get<std::map<std::string, Condition>>();
    q.projection = j.value("projection", std::vector<std::string>{});
    read_optional(j, "limit", q.limit);
}

void to_json(Json& j, const RecordRef& r)
{
    j = Json{{"source", r.source}, {"record_id", r.record_id}, {"version", r.version}};
}

void from_json(const Json& j, RecordRef& r)
{
    r.source = j.at("source").get<std::string>();
    r.record_id = j.at("record_id").get<std::string>();
    r.version = j.at("version").get<std::int64_t>();
}

void to_json(Json& j, const Record& r) { j = Json{{"ref", r.ref}, {"payload", r.payload}}; }

void from_json(const Json& j, Record& r)
{
    r.ref = j.at("ref").get<RecordRef>();
    r.payload = j.at("payload");
    if (!r.payload.is_object())
        throw std::invalid_argument("record payload must be an object");
}

void to_json(Json& j, const WriteResult& w)
{
    j = Json{{"status", w.status == WriteStatus::ok ? "ok" : "rejected"},
             {"detail", w.detail},
             {"resulting_refs", w.resulting_refs}};
}

} // namespace env

namespace intent
{

void to_json(nlohmann::json& j, const IntentAssessment& a)
{
    j = nlohmann::json{{"modality", to_string(a.modality)},
                       {"confidence", a.confidence},
                       {"data_requirements", a.data_requirements}};
    if (a.category)
        j["category"] = to_string(*a.category);
    if (a.boundary_flag)
        j["boundary_flag"] = to_string(*a.boundary_flag);
}

void from_json(const nlohmann::json& j, IntentAssessment& a)
{
    a.modality = parse_enum<Modality>(j, "modality", parse_modality);
    a.confidence = j.at("confidence").get<double>();
    a.category.reset();
    a.boundary_flag.reset();
    if (j.contains("category"))
        a.category = parse_enum<Category>(j, "category", parse_category);
    if (j.contains("boundary_flag"))
        a.boundary_flag = parse_enum<Boundary>(j, "boundary_flag", parse_boundary);
    a.data_requirements = j.value("data_requirements", std::vector<env::QuerySpec>{});
}

} // namespace intent

namespace agent
{

void to_json(nlohmann::json& j, const GenerationPlan& p)
{
    j = nlohmann::json{{"assessment", p.assessment}, {"architecture", to_string(p.architecture)}, {"queries", p.queries}};
}

void from_json(const nlohmann::json& j, GenerationPlan& p)
{
    p.assessment = j.at("assessment").get<intent::IntentAssessment>();
    p.architecture = parse_enum<Architecture>(j, "architecture", parse_architecture);
    p.queries = j.value("queries", std::vector<env::QuerySpec>{});
}

} // namespace agent

namespace core
{

void to_json(Json& j, const ViewNode& n)
{
    j = Json{{"id", n.node_id},
             {"kind", to_string(n.kind)},
             {"props", n.props},
             {"children", n.children},
             {"source_refs", n.source_refs}};
}

void from_json(const Json& j, ViewNode& n)
{
    n.node_id = j.at("id").get<std::string>();
    n.kind = parse_enum<NodeKind>(j, "kind", parse_node_kind);
    n.props = object_or_empty(j, "props");
    n.children = j.value("children", std::vector<ViewNode>{});
    n.source_refs = j.value("source_refs", std::vector<env::RecordRef>{});
}

void to_json(Json& j, const ParamSpec& p)
{
    j = Json{{"type", p.type}};
    if (p.allowed_values)
        j["allowed_values"] = *p.allowed_values;
    if (p.range)
        j["range"] = Json::array({p.range->first, p.range->second});
}

void from_json(const Json& j, ParamSpec& p)
{
    p.type = j.at("type").get<std::string>();
    read_optional(j, "allowed_values", p.allowed_values);
    if (auto it = j.find("range"); it != j.end() && !it->is_null())
        p.range = std::pair{it->at(0).get<double>(), it->at(1).get<double>()};
    else
        p.range.reset();
}

void to_json(Json& j, const StructuredAffordance& a)
{
    j = Json{{"id", a.affordance_id},
             {"label", a.label},
             {"anchor_node", a.anchor_node},
             {"verb", to_string(a.verb)},
             {"param_schema", a.param_schema}};
    if (a.resolved_params)
        j["resolved_params"] = *a.resolved_params;
}

void from_json(const Json& j, StructuredAffordance& a)
{
    a.affordance_id = j.at("id").get<std::string>();
    a.label = j.value("label", std::string{});
    a.anchor_node = j.at("anchor_node").get<std::string>();
    a.verb = parse_enum<Verb>(j, "verb", parse_verb);
    a.param_schema = object_or_empty(j, "param_schema").get<std::map<std::string, ParamSpec>>();
    read_optional(j, "resolved_params", a.resolved_params);
}

void to_json(Json& j, const AnticipatoryAffordance& a)
{
    j = Json{{"id", a.affordance_id}, {"label", a.label}, {"intent_text", a.intent_text}};
}

void from_json(const Json& j, AnticipatoryAffordance& a)
{
    a.affordance_id = j.at("id").get<std::string>();
    a.label = j.at("label").get<std::string>();
    a.intent_text = j.at("intent_text").get<std::string>();
}

void to_json(Json& j, const AffordanceSet& a)
{
    j = Json{{"structured", a.structured}, {"anticipatory", a.anticipatory}, {"nl_enabled", a.nl_enabled}};
}

void from_json(const Json& j, AffordanceSet& a)
{
    a.structured = j.value("structured", std::vector<StructuredAffordance>{});
    a.anticipatory = j.value("anticipatory", std::vector<AnticipatoryAffordance>{});
    a.nl_enabled = j.at("nl_enabled").get<bool>();
}

void to_json(Json& j, const HistoryEntry& h)
{
    j = Json{{"state_seq", h.state_seq}, {"event", h.event}, {"strategy", to_string(h.strategy)}, {"summary", h.summary}};
}

void from_json(const Json& j, HistoryEntry& h)
{
    h.state_seq = j.at("state_seq").get<std::int64_t>();
    h.event = j.at("event").get<std::string>();
    h.strategy = parse_enum<Strategy>(j, "strategy", parse_strategy);
    h.summary = j.value("summary", std::string{});
}

void to_json(Json& j, const AgentContext& c)
{
    j = Json{{"retrieved", c.retrieved},
             {"preferences", c.preferences},
             {"task_progress", c.task_progress},
             {"history", c.history}};
    if (c.compressed_summary)
        j["compressed_summary"] = *c.compressed_summary;
}

void from_json(const Json& j, AgentContext& c)
{
    c.retrieved = j.value("retrieved", std::vector<env::Record>{});
    c.preferences = object_or_empty(j, "preferences");
    c.task_progress = object_or_empty(j, "task_progress");
    c.history = j.value("history", std::vector<HistoryEntry>{});
    read_optional(j, "compressed_summary", c.compressed_summary);
}

void to_json(Json& j, const AppState& s)
{
    j = Json{{"format", kStateFormat},
             {"app_id", s.app_id},
             {"state_seq", s.state_seq},
             {"view", s.view},
             {"affordances", s.affordances},
             {"context", s.context},
             {"content_rev", s.content_rev},
             {"created_at", s.created_at}};
}

void from_json(const Json& j, AppState& s)
{
    if (j.at("format").get<std::string>() != kStateFormat)
        throw std::invalid_argument("unsupported state format");
    s.app_id = j.at("app_id").get<std::string>();
    s.state_seq = j.at("state_seq").get<std::int64_t>();
    s.view = j.at("view").get<ViewNode>();
    s.affordances = j.at("affordances").get<AffordanceSet>();
    s.context = j.at("context").get<AgentContext>();
    s.content_rev = j.at("content_rev").get<std::int64_t>();
    s.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const Event& e)
{
    j = Json{{"event_id", e.event_id}, {"session_id", e.session_id}, {"basis_state_seq", e.basis_state_seq}};
    if (const auto* s = std::get_if<StructuredPayload>(&e.payload))
    {
        j["channel"] = "structured";
        j["payload"] = Json{{"affordance_id", s->affordance_id}, {"verb", to_string(s->verb)}, {"params", s->params}};
    }
    else
    {
        const auto& nl = std::get<NlPayload>(e.payload);
        j["channel"] = "nl";
        j["payload"] = Json{{"text", nl.text}};
        if (nl.via_anticipatory)
            j["payload"]["via_anticipatory"] = *nl.via_anticipatory;
    }
}

void from_json(const Json& j, Event& e)
{
    e.event_id = j.value("event_id", std::string{});
    e.session_id = j.value("session_id", std::string{});
    e.basis_state_seq = j.at("basis_state_seq").get<std::int64_t>();
    const auto channel = j.at("channel").get<std::string>();
    const auto& payload = j.at("payload");
    if (channel == "structured")
    {
        StructuredPayload s;
        s.affordance_id = payload.at("affordance_id").get<std::string>();
        s.verb = parse_enum<Verb>(payload, "verb", parse_verb);
        s.params = object_or_empty(payload, "params");
        e.payload = std::move(s);
    }
    else if (channel == "nl")
    {
        NlPayload nl;
        nl.text = payload.at("text").get<std::string>();
        read_optional(payload, "via_anticipatory", nl.via_anticipatory);
        e.payload = std::move(nl);
    }
    else
        throw std::invalid_argument("unknown channel: " + channel);
}

void to_json(Json& j, const NodeOp& op)
{
    std::visit(
        [&j](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, SetProps>)
                j = Json{{"op", "set_props"}, {"node_id", o.node_id}, {"props", o.props}};
            else if constexpr (std::is_same_v<T, InsertChild>)
                j = Json{{"op", "insert_child"}, {"parent_id", o.parent_id}, {"index", o.index}, {"node", o.node}};
            else
                j = Json{{"op", "remove_node"}, {"node_id", o.node_id}};
        },
        op);
}

void from_json(const Json& j, NodeOp& op)
{
    const auto kind = j.at("op").get<std::string>();
    if (kind == "set_props")
        op = SetProps{j.at("node_id").get<std::string>(), object_or_empty(j, "props")};
    else if (kind == "insert_child")
        op = InsertChild{j.at("parent_id").get<std::string>(), j.at("index").get<std::size_t>(), j.at("node").get<ViewNode>()};
    else if (kind == "remove_node")
        op = RemoveNode{j.at("node_id").get<std::string>()};
    else
        throw std::invalid_argument("unknown node op: " + kind);
}

void to_json(Json& j, const Delta& d)
{
    Json context{{"append_retrieved", d.context_ops.append_retrieved},
                 {"merge_preferences", d.context_ops.merge_preferences},
                 {"merge_task_progress", d.context_ops.merge_task_progress},
                 {"append_history", d.context_ops.append_history}};
    if (d.context_ops.compress_keep_last)
        context["compress_keep_last"] = *d.context_ops.compress_keep_last;
    j = Json{{"strategy", to_string(d.strategy)}, {"node_ops", d.node_ops}, {"context_ops", std::move(context)}};
    if (d.affordance_ops)
        j["affordance_ops"] = Json{{"structured", d.affordance_ops->structured}, {"anticipatory", d.affordance_ops->anticipatory}};
    if (d.reply_text)
        j["reply_text"] = *d.reply_text;
    if (d.replacement_seed)
        j["replacement_seed"] = *d.replacement_seed;
}

void from_json(const Json& j, Delta& d)
{
    d.strategy = parse_enum<Strategy>(j, "strategy", parse_strategy);
    d.node_ops = j.value("node_ops", std::vector<NodeOp>{});
    if (auto it = j.find("affordance_ops"); it != j.end() && !it->is_null())
        d.affordance_ops = AffordanceOps{it->value("structured", std::vector<StructuredAffordance>{}),
                                         it->value("anticipatory", std::vector<AnticipatoryAffordance>{})};
    else
        d.affordance_ops.reset();
    const auto context = object_or_empty(j, "context_ops");
    d.context_ops.append_retrieved = context.value("append_retrieved", std::vector<env::Record>{});
    d.context_ops.merge_preferences = object_or_empty(context, "merge_preferences");
    d.context_ops.merge_task_progress = object_or_empty(context, "merge_task_progress");
    d.context_ops.append_history = context.value("append_history", std::vector<HistoryEntry>{});
    read_optional(context, "compress_keep_last", d.context_ops.compress_keep_last);
    read_optional(j, "reply_text", d.reply_text);
    read_optional(j, "replacement_seed", d.replacement_seed);
}

std::string canonical(const Json& doc) { return doc.dump(); }

std::string serialize_state(const AppState& state) { return canonical(Json(state)); }

Json parse_document(std::string_view bytes)
{
    try
    {
        return Json::parse(bytes.begin(), bytes.end());
    }
    catch (const Json::parse_error& e)
    {
        throw DecodeError(e.byte, e.what());
    }
}

AppState deserialize_state(std::string_view bytes)
{
    const auto doc = parse_document(bytes);
    try
    {
        return doc.get<AppState>();
    }
    catch (const std::exception& e)
    {
        throw DecodeError(0, std::string("schema: ") + e.what());
    }
}

} // namespace core
} // namespace sac
