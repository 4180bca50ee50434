#include "sac/store/distribution.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"

namespace sac::store
{
namespace
{

constexpr std::string_view kTemplateFormat = "sac.template/1";
constexpr std::string_view kShareMagic = "SAC-SHARE/1";

// Every scalar a state learned from its user or environment.
struct Taint
{
    std::vector<Json> values;
    std::vector<std::string> phrases; // long enough to look for inside text

    void add(const Json& j)
    {
        if (j.is_object() || j.is_array())
        {
            for (const auto& v : j)
                add(v);
            return;
        }
        if (j.is_null() || j.is_boolean())
            return;
        if (std::find(values.begin(), values.end(), j) == values.end())
            values.push_back(j);
        if (j.is_string() && j.get_ref<const std::string&>().size() >= 4)
            phrases.push_back(j.get<std::string>());
    }

    bool hits(const Json& leaf) const
    {
        if (leaf.is_null() || leaf.is_boolean())
            return false;
        if (std::find(values.begin(), values.end(), leaf) != values.end())
            return true;
        if (!leaf.is_string())
            return false;
        const auto& s = leaf.get_ref<const std::string&>();
        return std::any_of(phrases.begin(), phrases.end(), [&](const std::string& p) { return s.find(p) != std::string::npos; });
    }

    bool hits_any(const Json& j) const
    {
        if (j.is_object() || j.is_array())
            return std::any_of(j.begin(), j.end(), [&](const Json& v) { return hits_any(v); });
        return hits(j);
    }
};

bool is_derived(const core::ViewNode& n)
{
    auto it = n.props.find("derived");
    return it != n.props.end() && it->is_boolean() && it->get<bool>();
}

void blank(core::ViewNode& node, const Taint& taint)
{
    const bool data_bearing = !node.source_refs.empty() || is_derived(node);
    for (auto& [key, value] : node.props.items())
    {
        if (key == "derived")
            continue;
        if (data_bearing || taint.hits_any(value))
            value = nullptr;
    }
    node.source_refs.clear();
    for (auto& c : node.children)
        blank(c, taint);
}

env::QuerySpec strip(env::QuerySpec q)
{
    q.predicate.clear();
    return q;
}

agent::GenerationPlan plan_of(const core::AppState& state)
{
    auto it = state.context.task_progress.find("plan");
    if (it == state.context.task_progress.end())
        throw Error(ErrorKind::SchemaViolation, "state " + state.app_id + " carries no generation plan");
    return it->get<agent::GenerationPlan>();
}

core::AppState build_initial(const agent::GenerationPlan& plan, const GenerationEnv& g)
{
    agent::RenderRequest request{std::nullopt, plan, {}};
    const auto execution = g.agent.plan(request);
    for (const auto& q : execution.queries)
    {
        auto records = g.env.execute_query(q);
        request.retrieved.insert(request.retrieved.end(), records.begin(), records.end());
    }
    const auto delta = g.agent.render(request);
    if (delta.strategy != core::Strategy::app_replacement)
        throw Error(ErrorKind::SchemaViolation, "template plan did not render an app");
    return core::apply_initial(core::AppState::empty(g.app_id, g.now), delta);
}

// Field of `old` unambiguously holding `v`, if any.
std::optional<std::string> field_holding(const Json& old, const Json& v)
{
    std::optional<std::string> found;
    for (const auto& [key, value] : old.items())
        if (value == v)
        {
            if (found)
                return std::nullopt;
            found = key;
        }
    return found;
}

struct Stale
{
    env::RecordRef current;
    Json old_payload;
    Json new_payload;
};

Json rewrite(const std::string& key, const Json& value, const std::vector<const Stale*>& stale)
{
    for (const auto* s : stale)
    {
        auto same = s->old_payload.find(key);
        if (same != s->old_payload.end() && *same == value)
        {
            auto fresh = s->new_payload.find(key);
            return fresh == s->new_payload.end() ? value : *fresh;
        }
    }
    if (value.is_array())
    {
        Json out = Json::array();
        for (const auto& v : value)
            out.push_back(rewrite("", v, stale));
        return out;
    }
    for (const auto* s : stale)
        if (auto f = field_holding(s->old_payload, value))
        {
            auto fresh = s->new_payload.find(*f);
            if (fresh != s->new_payload.end())
                return *fresh;
        }
    return value;
}

void refresh_node(core::ViewNode& node, const std::map<env::RecordRef, Stale>& stale)
{
    std::vector<const Stale*> cited;
    for (auto& ref : node.source_refs)
        if (auto it = stale.find(ref); it != stale.end())
        {
            cited.push_back(&it->second);
            ref = it->second.current;
        }
    if (!cited.empty() && !is_derived(node))
        for (auto& [key, value] : node.props.items())
            value = rewrite(key, value, cited);
    for (auto& c : node.children)
        refresh_node(c, stale);
}

std::string_view policy_name(DataPolicy p)
{
    return p == DataPolicy::static_snapshot ? "static_snapshot" : "live_reference";
}

} // namespace

void to_json(Json& j, const AppTemplate& t)
{
    j = Json{{"format", std::string(kTemplateFormat)},
             {"template_id", t.template_id},
             {"assessment", t.assessment},
             {"architecture", agent::to_string(t.architecture)},
             {"queries", t.queries},
             {"skeleton", t.skeleton},
             {"affordances", t.affordances}};
}

void from_json(const Json& j, AppTemplate& t)
{
    if (j.value("format", std::string{}) != kTemplateFormat)
        throw Error(ErrorKind::DecodeError, "not a template document");
    t.template_id = j.at("template_id").get<std::string>();
    t.assessment = j.at("assessment").get<intent::IntentAssessment>();
    auto arch = agent::parse_architecture(j.at("architecture").get<std::string>());
    if (!arch)
        throw Error(ErrorKind::DecodeError, "unknown architecture in template");
    t.architecture = *arch;
    t.queries = j.at("queries").get<std::vector<env::QuerySpec>>();
    t.skeleton = j.at("skeleton").get<core::ViewNode>();
    t.affordances = j.at("affordances").get<std::vector<core::StructuredAffordance>>();
}

AppTemplate extract_template(const core::AppState& state)
{
    const auto plan = plan_of(state);

    Taint taint;
    for (const auto& r : state.context.retrieved)
        taint.add(r.payload);
    taint.add(state.context.preferences);
    for (const auto& q : plan.queries)
        for (const auto& [_, c] : q.predicate)
            taint.add(c.value);
    for (const auto& a : state.affordances.structured)
        if (a.resolved_params)
            taint.add(*a.resolved_params);

    AppTemplate t;
    t.assessment = plan.assessment;
    for (auto& q : t.assessment.data_requirements)
        q = strip(q);
    t.architecture = plan.architecture;
    for (const auto& q : plan.queries)
        t.queries.push_back(strip(q));
    t.skeleton = state.view;
    blank(t.skeleton, taint);
    for (auto a : state.affordances.structured)
    {
        a.resolved_params.reset();
        for (auto& [_, spec] : a.param_schema)
            if (spec.allowed_values && taint.hits_any(Json(*spec.allowed_values)))
                spec.allowed_values.reset();
        if (taint.hits(Json(a.label)))
            a.label.clear();
        t.affordances.push_back(std::move(a));
    }

    Json body = t;
    body.erase("template_id");
    t.template_id = "tpl-" + core::hex(std::hash<std::string>{}(core::canonical(body)) ^ core::view_hash(t.skeleton));
    return t;
}

core::AppState instantiate_template(const AppTemplate& t, std::string_view utterance, const GenerationEnv& g)
{
    for (const auto& q : t.queries)
        if (!g.env.has_source(q.source))
            throw Error(ErrorKind::UnknownSource, "template source '" + q.source + "' is not in the environment");

    agent::GenerationPlan plan{t.assessment, t.architecture, t.queries};
    if (!utterance.empty())
    {
        const auto own = intent::assess_cold_start(g.rules, utterance);
        for (auto& q : plan.queries)
            for (const auto& mine : own.data_requirements)
                if (mine.source == q.source)
                {
                    q.predicate = mine.predicate;
                    q.limit = mine.limit;
                }
    }
    plan.assessment.data_requirements = plan.queries;
    return build_initial(plan, g);
}

core::AppState refresh_data(const core::AppState& state, const env::Registry& env)
{
    std::set<env::RecordRef> refs;
    core::visit(state.view, [&](const core::ViewNode& n, std::size_t) { refs.insert(n.source_refs.begin(), n.source_refs.end()); });
    for (const auto& r : state.context.retrieved)
        refs.insert(r.ref);

    std::map<env::RecordRef, Stale> stale;
    for (const auto& ref : refs)
    {
        std::int64_t version = ref.version;
        try
        {
            version = env.current_versions({ref}).at(ref);
        }
        catch (const Error&)
        {
            continue; // source gone; nothing newer to show
        }
        if (version <= ref.version)
            continue;
        env::RecordRef current{ref.source, ref.record_id, version};
        auto fresh = env.resolve(current);
        if (!fresh)
            continue;
        Json old;
        if (const auto* r = state.context.find(ref))
            old = r->payload;
        else if (auto p = env.resolve(ref))
            old = *p;
        stale.emplace(ref, Stale{current, old, *fresh});
    }

    core::AppState out = state;
    refresh_node(out.view, stale);
    std::vector<env::Record> retrieved;
    for (const auto& r : state.context.retrieved)
    {
        env::Record next = r;
        if (auto it = stale.find(r.ref); it != stale.end())
            next = env::Record{it->second.current, it->second.new_payload};
        const bool seen = std::any_of(retrieved.begin(), retrieved.end(), [&](const env::Record& x) { return x.ref == next.ref; });
        if (!seen)
            retrieved.push_back(std::move(next));
    }
    out.context.retrieved = std::move(retrieved);
    out.content_rev = state.content_rev + 1;
    return out;
}

SharePackage export_share(const core::AppState& state, DataPolicy policy)
{
    return SharePackage{ShareKind::state, policy, core::serialize_state(state)};
}

SharePackage export_share(const AppTemplate& t)
{
    return SharePackage{ShareKind::app_template, DataPolicy::static_snapshot, core::canonical(Json(t))};
}

std::string encode_share(const SharePackage& pkg)
{
    std::string header(kShareMagic);
    if (pkg.kind == ShareKind::state)
        header += " kind=state policy=" + std::string(policy_name(pkg.policy));
    else
        header += " kind=template";
    return header + "\n" + pkg.body;
}

SharePackage decode_share(std::string_view bytes)
{
    const auto eol = bytes.find('\n');
    if (eol == std::string_view::npos || !bytes.starts_with(kShareMagic))
        throw DecodeError(0, "missing share header");
    std::istringstream header{std::string(bytes.substr(kShareMagic.size(), eol - kShareMagic.size()))};
    SharePackage pkg;
    bool kind_seen = false;
    bool policy_seen = false;
    std::string token;
    while (header >> token)
    {
        const auto eq = token.find('=');
        const auto key = token.substr(0, eq);
        const auto value = eq == std::string::npos ? std::string{} : token.substr(eq + 1);
        if (key == "kind" && (value == "state" || value == "template"))
        {
            pkg.kind = value == "state" ? ShareKind::state : ShareKind::app_template;
            kind_seen = true;
        }
        else if (key == "policy" && (value == "static_snapshot" || value == "live_reference"))
        {
            pkg.policy = value == "static_snapshot" ? DataPolicy::static_snapshot : DataPolicy::live_reference;
            policy_seen = true;
        }
        else
            throw DecodeError(0, "bad share header field '" + token + "'");
    }
    if (!kind_seen || (pkg.kind == ShareKind::state && !policy_seen))
        throw DecodeError(0, "incomplete share header");
    pkg.body = std::string(bytes.substr(eol + 1));
    return pkg;
}

core::AppState import_share(const SharePackage& pkg, const GenerationEnv& g)
{
    if (pkg.kind == ShareKind::app_template)
    {
        AppTemplate t;
        try
        {
            t = core::parse_document(pkg.body).get<AppTemplate>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw DecodeError(0, std::string("template body: ") + e.what());
        }
        return instantiate_template(t, "", g);
    }
    auto state = core::deserialize_state(pkg.body);
    if (pkg.policy == DataPolicy::live_reference)
        return refresh_data(state, g.env);
    return state;
}

} // namespace sac::store
