#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "recipe.hpp"
#include "sac/agent/backend.hpp"
#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"

namespace sac::agent
{
namespace
{

const std::set<std::string> kTriggerKeys{"phase", "category", "modality", "boundary", "sources", "has_node",
                                         "text",  "affordance", "hint", "channel", "stage"};

std::set<std::string> plan_sources(const GenerationPlan& plan)
{
    std::set<std::string> out;
    for (const auto& q : plan.queries)
        out.insert(q.source);
    return out;
}

bool matches_cold_start(const Json& when, const GenerationPlan& plan)
{
    if (when.value("phase", std::string{}) != "cold_start")
        return false;
    const auto& a = plan.assessment;
    if (when.contains("modality") && when.at("modality").get<std::string>() != intent::to_string(a.modality))
        return false;
    if (when.contains("category"))
        if (!a.category || when.at("category").get<std::string>() != intent::to_string(*a.category))
            return false;
    if (when.contains("boundary"))
    {
        const auto want = when.at("boundary").get<std::string>();
        const auto have = a.boundary_flag ? std::string(intent::to_string(*a.boundary_flag)) : std::string("none");
        if (want != have)
            return false;
    }
    if (when.contains("sources"))
    {
        const auto have = plan_sources(plan);
        for (const auto& s : when.at("sources"))
            if (!have.contains(s.get<std::string>()))
                return false;
    }
    return true;
}

bool matches_evolution(const Json& when, const intent::InterpretedEvent& event, const core::AppState& prior)
{
    if (when.value("phase", std::string{}) != "evolution")
        return false;
    if (when.contains("has_node") && core::find_node(prior.view, when.at("has_node").get<std::string>()) == nullptr)
        return false;
    if (when.contains("stage") && prior.context.task_progress.value("stage", std::string{}) != when.at("stage").get<std::string>())
        return false;
    if (when.contains("hint") && when.at("hint").get<std::string>() != intent::to_string(event.hint))
        return false;
    const auto channel = event.source.channel() == core::Channel::structured ? "structured" : "nl";
    if (when.contains("channel") && when.at("channel").get<std::string>() != channel)
        return false;
    if (when.contains("affordance"))
    {
        const auto* s = std::get_if<core::StructuredPayload>(&event.source.payload);
        if (s == nullptr || s->affordance_id != when.at("affordance").get<std::string>())
            return false;
    }
    if (when.contains("text"))
    {
        const auto text = intent::normalize(event.resolved_intent);
        for (const auto& phrase : when.at("text"))
            if (!intent::contains_phrase(text, phrase.get<std::string>()))
                return false;
    }
    return true;
}

} // namespace

AgentScript AgentScript::from_json(const Json& doc)
{
    AgentScript script;
    try
    {
        script.affordances = doc.value("affordances", Json::array());
        std::set<std::string> ids;
        for (const auto& e : doc.at("entries"))
        {
            ScriptEntry entry;
            entry.id = e.at("id").get<std::string>();
            if (!ids.insert(entry.id).second)
                throw Error(ErrorKind::ConfigError, "duplicate script entry " + entry.id);
            entry.when = e.at("when");
            for (const auto& [key, _] : entry.when.items())
                if (!kTriggerKeys.contains(key))
                    throw Error(ErrorKind::ConfigError, "entry " + entry.id + ": unknown trigger key " + key);
            const auto phase = entry.when.value("phase", std::string{});
            if (phase != "cold_start" && phase != "evolution")
                throw Error(ErrorKind::ConfigError, "entry " + entry.id + ": phase must be cold_start or evolution");
            entry.queries = e.value("queries", std::vector<Json>{});
            for (const auto& w : e.value("writes", Json::array()))
                entry.writes.push_back({w.at("action").get<std::string>(), w.value("params", Json::object())});
            if (e.contains("reply"))
                entry.reply = e.at("reply").get<std::string>();
            entry.view = e.value("view", Json::array());
            entry.ops = e.value("ops", Json::array());
            entry.anticipatory = e.value("anticipatory", Json::array());
            entry.preferences = e.value("preferences", Json::object());
            entry.progress = e.value("progress", Json::object());
            entry.summary = e.value("summary", std::string{});
            script.entries.push_back(std::move(entry));
        }
    }
    catch (const Json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, std::string("agent script: ") + e.what());
    }
    return script;
}

AgentScript AgentScript::load(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read agent script " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(core::parse_document(buffer.str()));
}

std::vector<const ScriptEntry*> AgentScript::matching(const RenderRequest& request) const
{
    std::vector<const ScriptEntry*> out;
    for (const auto& entry : entries)
    {
        bool hit = false;
        if (const auto* plan = std::get_if<GenerationPlan>(&request.input))
            hit = matches_cold_start(entry.when, *plan);
        else if (request.prior_state)
            hit = matches_evolution(entry.when, std::get<intent::InterpretedEvent>(request.input), *request.prior_state);
        if (hit)
            out.push_back(&entry);
    }
    return out;
}

const ScriptEntry* AgentScript::find(const std::string& id) const
{
    auto it = std::find_if(entries.begin(), entries.end(), [&](const ScriptEntry& e) { return e.id == id; });
    return it == entries.end() ? nullptr : &*it;
}

core::AffordanceSet generate_affordances(const core::ViewNode& view, const core::AgentContext& context,
                                         const AgentScript& script)
{
    core::AffordanceSet out;
    recipe::Scope scope;
    scope.preferences = context.preferences;
    scope.known = &context.retrieved;

    try
    {
        for (const auto& a : script.affordances)
        {
            const auto anchor = a.at("anchor").get<std::string>();
            if (core::find_node(view, anchor) == nullptr)
                continue;
            core::StructuredAffordance affordance;
            affordance.affordance_id = a.at("id").get<std::string>();
            affordance.label = a.value("label", std::string{});
            affordance.anchor_node = anchor;
            const auto verb = core::parse_verb(a.at("verb").get<std::string>());
            if (!verb)
                throw Error(ErrorKind::ConfigError, "affordance " + affordance.affordance_id + ": unknown verb");
            affordance.verb = *verb;
            const auto params = a.value("params", Json::object());
            for (const auto& [name, spec] : params.items())
            {
                Json resolved = spec;
                if (auto it = spec.find("allowed_values"); it != spec.end() && it->is_object())
                {
                    auto v = recipe::evaluate(*it, scope);
                    resolved["allowed_values"] = v ? v->value : Json::array();
                }
                affordance.param_schema[name] = resolved.get<core::ParamSpec>();
            }
            if (auto it = a.find("bind"); it != a.end())
            {
                Json bound = Json::object();
                for (const auto& [name, expr] : it->items())
                    if (auto v = recipe::evaluate(expr, scope))
                        bound[name] = v->value;
                affordance.resolved_params = std::move(bound);
            }
            out.structured.push_back(std::move(affordance));
        }

        if (const auto* entry = script.find(context.task_progress.value("stage", std::string{})))
            for (const auto& a : entry->anticipatory)
                out.anticipatory.push_back(
                    {a.at("id").get<std::string>(), a.at("label").get<std::string>(), a.at("intent").get<std::string>()});
    }
    catch (const Json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, std::string("affordance catalog: ") + e.what());
    }
    out.nl_enabled = true;
    return out;
}

} // namespace sac::agent
