#include "recipe.hpp"

#include <algorithm>
#include <set>

#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/environment/registry.hpp"
#include "sac/error.hpp"

namespace sac::agent::recipe
{
namespace
{

std::vector<const env::Record*> select_records(const Json& repeat, const Scope& scope)
{
    std::vector<const env::Record*> out;
    if (scope.retrieved == nullptr)
        return out;
    const auto source = repeat.at("source").get<std::string>();
    const auto where = repeat.value("where", Json::object()).get<std::map<std::string, env::Condition>>();
    const auto limit = repeat.value("limit", std::size_t{0});
    for (const auto& r : *scope.retrieved)
    {
        if (r.ref.source != source)
            continue;
        const bool keep = std::all_of(where.begin(), where.end(), [&](const auto& clause) {
            env::Condition c = clause.second;
            if (c.value.is_string())
                if (auto v = evaluate(c.value, Scope{nullptr, scope.params, scope.preferences, scope.retrieved, scope.known}))
                    c.value = v->value;
            auto field = r.payload.find(clause.first);
            return env::matches(c, field == r.payload.end() ? nullptr : &*field);
        });
        if (keep)
            out.push_back(&r);
        if (limit != 0 && out.size() >= limit)
            break;
    }
    return out;
}

const env::Record* find_record(const Scope& scope, const std::string& source, const std::string& id)
{
    for (const auto* list : {scope.retrieved, scope.known})
    {
        if (list == nullptr)
            continue;
        // Latest version wins.
        const env::Record* best = nullptr;
        for (const auto& r : *list)
            if (r.ref.source == source && r.ref.record_id == id && (best == nullptr || r.ref.version > best->ref.version))
                best = &r;
        if (best != nullptr)
            return best;
    }
    return nullptr;
}

std::optional<Json> lookup_token(const std::string& token, const Scope& scope)
{
    if (token.starts_with("param:"))
    {
        auto it = scope.params.find(token.substr(6));
        return it == scope.params.end() ? std::nullopt : std::optional<Json>(*it);
    }
    if (token.starts_with("pref:"))
    {
        auto it = scope.preferences.find(token.substr(5));
        return it == scope.preferences.end() ? std::nullopt : std::optional<Json>(*it);
    }
    if (token.starts_with("count:"))
    {
        const auto source = token.substr(6);
        std::int64_t n = 0;
        if (scope.retrieved != nullptr)
            n = std::count_if(scope.retrieved->begin(), scope.retrieved->end(),
                              [&](const env::Record& r) { return r.ref.source == source; });
        return Json(n);
    }
    if (scope.record == nullptr)
        return std::nullopt;
    if (token == "record_id")
        return Json(scope.record->ref.record_id);
    auto it = scope.record->payload.find(token);
    return it == scope.record->payload.end() ? std::nullopt : std::optional<Json>(*it);
}

Scope with_record(const Scope& scope, const env::Record* record)
{
    Scope s = scope;
    s.record = record;
    return s;
}

core::ViewNode expand_single(const Json& tmpl, const Scope& scope)
{
    core::ViewNode node;
    node.node_id = interpolate(tmpl.at("id").get<std::string>(), scope);
    const auto kind_name = tmpl.at("kind").get<std::string>();
    auto kind = core::parse_node_kind(kind_name);
    if (!kind)
        throw Error(ErrorKind::ConfigError, "unknown node kind in script: " + kind_name);
    node.kind = *kind;

    bool cites = false;
    bool computed = false;
    for (const auto& field : tmpl.value("fields", std::vector<std::string>{}))
    {
        if (scope.record == nullptr)
            throw Error(ErrorKind::ConfigError, "node " + node.node_id + " lists fields without a bound record");
        if (auto it = scope.record->payload.find(field); it != scope.record->payload.end())
        {
            node.props[field] = *it;
            cites = true;
        }
    }
    const auto props = tmpl.value("props", Json::object());
    for (const auto& [key, expr] : props.items())
    {
        auto v = evaluate(expr, scope);
        if (!v)
            continue;
        node.props[key] = std::move(v->value);
        cites = cites || v->from_record;
        computed = computed || v->computed;
    }
    if (computed)
        node.props["derived"] = true;
    if (cites && scope.record != nullptr)
        node.source_refs.push_back(scope.record->ref);

    for (const auto& child : tmpl.value("children", Json::array()))
        for (auto& c : expand_node(child, scope))
            node.children.push_back(std::move(c));
    return node;
}

} // namespace

std::string interpolate(const std::string& pattern, const Scope& scope)
{
    std::string out;
    for (std::size_t i = 0; i < pattern.size(); ++i)
    {
        if (pattern[i] == '{')
        {
            const auto close = pattern.find('}', i);
            if (close != std::string::npos)
            {
                if (auto v = lookup_token(pattern.substr(i + 1, close - i - 1), scope))
                {
                    out += v->is_string() ? v->get<std::string>() : v->dump();
                    i = close;
                    continue;
                }
            }
        }
        out += pattern[i];
    }
    return out;
}

std::optional<Value> evaluate(const Json& expr, const Scope& scope)
{
    if (expr.is_string())
    {
        const auto& s = expr.get_ref<const std::string&>();
        if (s.starts_with("$$"))
            return Value{Json(s.substr(1))};
        if (s.starts_with("$count:"))
        {
            const auto source = s.substr(7);
            std::int64_t n = 0;
            if (scope.retrieved != nullptr)
                n = std::count_if(scope.retrieved->begin(), scope.retrieved->end(),
                                  [&](const env::Record& r) { return r.ref.source == source; });
            return Value{Json(n), false, true};
        }
        if (s.starts_with("$"))
        {
            const auto token = s.substr(1);
            auto v = lookup_token(token, scope);
            if (!v)
                return std::nullopt;
            const bool from_record = !token.starts_with("param:") && !token.starts_with("pref:");
            // Numbers the user supplied are not facts from the environment.
            return Value{*v, from_record, !from_record && v->is_number()};
        }
        if (s.find('{') != std::string::npos)
            return Value{Json(interpolate(s, scope)), false, s.find("{count:") != std::string::npos};
        return Value{expr};
    }
    if (expr.is_object() && expr.contains("sum"))
    {
        if (scope.record == nullptr)
            return std::nullopt;
        double total = 0.0;
        bool integral = true;
        for (const auto& f : expr.at("sum"))
        {
            auto it = scope.record->payload.find(f.get<std::string>());
            if (it == scope.record->payload.end() || !it->is_number())
                return std::nullopt;
            integral = integral && it->is_number_integer();
            total += it->get<double>();
        }
        return Value{integral ? Json(static_cast<std::int64_t>(total)) : Json(total), false, true};
    }
    if (expr.is_object() && expr.contains("within"))
    {
        const auto& args = expr.at("within");
        auto value = lookup_token(args.at(0).get<std::string>(), scope);
        auto bound = lookup_token(args.at(1).get<std::string>(), scope);
        if (!value || !bound || !value->is_number() || !bound->is_number())
            return std::nullopt;
        const bool ok = value->get<double>() <= bound->get<double>();
        return Value{ok ? expr.at("then") : expr.at("else"), false, true};
    }
    if (expr.is_object() && expr.contains("values"))
    {
        const auto spec = expr.at("values").get<std::string>();
        const auto dot = spec.find('.');
        const auto source = spec.substr(0, dot);
        const auto field = dot == std::string::npos ? std::string("record_id") : spec.substr(dot + 1);
        Json out = Json::array();
        std::set<std::string> seen;
        for (const auto* list : {scope.retrieved, scope.known})
        {
            if (list == nullptr)
                continue;
            for (const auto& r : *list)
            {
                if (r.ref.source != source)
                    continue;
                auto it = r.payload.find(field);
                if (it != r.payload.end() && seen.insert(it->dump()).second)
                    out.push_back(*it);
            }
        }
        return Value{out, false, true};
    }
    return Value{expr};
}

std::vector<core::ViewNode> expand_node(const Json& tmpl, const Scope& scope)
{
    try
    {
        std::vector<core::ViewNode> out;
        if (auto it = tmpl.find("repeat"); it != tmpl.end())
        {
            for (const auto* r : select_records(*it, scope))
                out.push_back(expand_single(tmpl, with_record(scope, r)));
            return out;
        }
        if (auto it = tmpl.find("bind"); it != tmpl.end())
        {
            const auto source = it->at("source").get<std::string>();
            const auto id = interpolate(it->at("record").get<std::string>(), scope);
            const auto* r = find_record(scope, source, id);
            if (r == nullptr)
            {
                if (it->value("optional", false))
                    return out;
                throw Error(ErrorKind::ScriptMiss, "bound record " + source + "/" + id + " was not retrieved");
            }
            out.push_back(expand_single(tmpl, with_record(scope, r)));
            return out;
        }
        out.push_back(expand_single(tmpl, scope));
        return out;
    }
    catch (const Json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, std::string("node template: ") + e.what());
    }
}

std::vector<core::NodeOp> expand_ops(const Json& ops, const core::AppState& prior, const Scope& scope)
{
    std::vector<core::NodeOp> out;
    core::AppState scratch = prior;
    auto push = [&](core::NodeOp op) {
        core::Delta step;
        step.strategy = core::Strategy::structural_extension;
        step.node_ops = {op};
        step.affordance_ops = core::AffordanceOps{};
        scratch = std::get<core::AppState>(core::apply_delta(scratch, step));
        out.push_back(std::move(op));
    };

    try
    {
        for (const auto& t : ops)
        {
            const auto kind = t.at("op").get<std::string>();
            const bool if_exists = t.value("if_exists", false);
            std::vector<const env::Record*> records{scope.record};
            if (auto it = t.find("repeat"); it != t.end() && kind != "insert")
                records = select_records(*it, scope);

            for (const auto* record : records)
            {
                const auto local = with_record(scope, record);
                if (kind == "insert")
                {
                    const auto parent = interpolate(t.at("parent").get<std::string>(), local);
                    const auto* parent_node = core::find_node(scratch.view, parent);
                    if (parent_node == nullptr)
                        throw Error(ErrorKind::DanglingNodeRef, "insert parent " + parent);
                    std::size_t index = parent_node->children.size();
                    if (const auto& at = t.value("index", Json("end")); at.is_number_unsigned())
                        index = std::min(at.get<std::size_t>(), index);
                    for (auto& node : expand_node(t.at("node"), local))
                        push(core::InsertChild{parent, index++, std::move(node)});
                }
                else if (kind == "set")
                {
                    const auto id = interpolate(t.at("node").get<std::string>(), local);
                    if (if_exists && core::find_node(scratch.view, id) == nullptr)
                        continue;
                    Json props = Json::object();
                    const auto templ = t.value("props", Json::object());
                    for (const auto& [key, expr] : templ.items())
                        if (auto v = evaluate(expr, local))
                        {
                            props[key] = v->value;
                            if (v->computed)
                                props["derived"] = true;
                        }
                    push(core::SetProps{id, std::move(props)});
                }
                else if (kind == "remove")
                {
                    const auto id = interpolate(t.at("node").get<std::string>(), local);
                    if (if_exists && core::find_node(scratch.view, id) == nullptr)
                        continue;
                    push(core::RemoveNode{id});
                }
                else
                    throw Error(ErrorKind::ConfigError, "unknown op template: " + kind);
            }
        }
    }
    catch (const Json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, std::string("op template: ") + e.what());
    }
    return out;
}

env::QuerySpec expand_query(const Json& tmpl, const Scope& scope)
{
    auto q = tmpl.get<env::QuerySpec>();
    for (auto& [field, condition] : q.predicate)
        if (auto v = evaluate(condition.value, scope))
            condition.value = v->value;
    return q;
}

} // namespace sac::agent::recipe
