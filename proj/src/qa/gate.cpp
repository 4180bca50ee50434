#include "sac/qa/gate.hpp"

#include <algorithm>

#include "sac/core/state.hpp"
#include "sac/error.hpp"

namespace sac::qa
{
namespace
{

Finding make(FindingClass cls, Severity severity, std::string locus, std::string message)
{
    return Finding{cls, severity, std::move(locus), std::move(message)};
}

// Keys rendered anywhere in the subtree plus the fields of every record it cites.
std::set<std::string> rendered_fields(const core::ViewNode& root, const core::AgentContext& context)
{
    std::set<std::string> out;
    core::visit(root, [&](const core::ViewNode& n, std::size_t) {
        for (const auto& [key, _] : n.props.items())
            out.insert(key);
        for (const auto& ref : n.source_refs)
            if (const auto* r = context.find(ref))
                for (const auto& [key, _] : r->payload.items())
                    out.insert(key);
    });
    return out;
}

bool is_derived(const core::ViewNode& n)
{
    auto it = n.props.find("derived");
    return it != n.props.end() && it->is_boolean() && it->get<bool>();
}

} // namespace

std::string_view to_string(FindingClass c) noexcept
{
    switch (c)
    {
    case FindingClass::runnability: return "runnability";
    case FindingClass::fidelity_accuracy: return "fidelity_accuracy";
    case FindingClass::fidelity_richness: return "fidelity_richness";
    case FindingClass::architecture: return "architecture";
    }
    return "?";
}

std::string_view to_string(Severity s) noexcept
{
    return s == Severity::error ? "error" : "warn";
}

bool QaReport::has(FindingClass cls, Severity severity) const
{
    return std::any_of(findings.begin(), findings.end(),
                       [&](const Finding& f) { return f.cls == cls && f.severity == severity; });
}

QaConfig QaConfig::from_json(const Json& doc)
{
    QaConfig c;
    if (!doc.is_object())
        throw Error(ErrorKind::ConfigError, "qa config must be an object");
    for (const auto& [key, value] : doc.items())
    {
        if (key == "max_flat_children")
            c.max_flat_children = value.get<std::size_t>();
        else if (key == "max_depth")
            c.max_depth = value.get<std::size_t>();
        else if (key == "min_fields_per_record")
            c.min_fields_per_record = value.get<std::size_t>();
        else if (key == "presentational_numeric_keys")
            c.presentational_numeric_keys = value.get<std::set<std::string>>();
        else
            throw Error(ErrorKind::ConfigError, "unknown qa setting: " + key);
    }
    return c;
}

std::vector<Finding> check_runnability(const core::AppState& state, const env::Registry& env)
{
    std::vector<Finding> out;
    for (const auto& a : state.affordances.structured)
    {
        const auto* anchor = core::find_node(state.view, a.anchor_node);
        if (anchor == nullptr)
        {
            out.push_back(make(FindingClass::runnability, Severity::error, a.affordance_id,
                               "anchor " + a.anchor_node + " is not in the view"));
            continue;
        }
        auto field_spec = a.param_schema.find("field");
        if (field_spec == a.param_schema.end())
            continue;
        std::vector<Json> named;
        if (field_spec->second.allowed_values)
            named = *field_spec->second.allowed_values;
        if (a.resolved_params && a.resolved_params->contains("field"))
            named.push_back(a.resolved_params->at("field"));
        const auto fields = rendered_fields(*anchor, state.context);
        for (const auto& f : named)
            if (f.is_string() && !fields.contains(f.get<std::string>()))
                out.push_back(make(FindingClass::runnability, Severity::error, a.affordance_id,
                                   "field '" + f.get<std::string>() + "' is not rendered under " + a.anchor_node));
    }

    core::visit(state.view, [&](const core::ViewNode& n, std::size_t) {
        for (const auto& ref : n.source_refs)
        {
            bool resolvable = false;
            try
            {
                resolvable = env.resolve(ref).has_value();
            }
            catch (const Error&)
            {
            }
            if (!resolvable)
                out.push_back(make(FindingClass::runnability, Severity::error, n.node_id,
                                   "source " + env::to_string(ref) + " does not resolve"));
        }
    });
    return out;
}

std::vector<Finding> check_fidelity(const core::AppState& state, const QaConfig& config)
{
    std::vector<Finding> out;
    core::GroundingOptions grounding{config.presentational_numeric_keys};
    for (const auto& u : core::find_ungrounded_props(state.view, state.context, grounding))
        out.push_back(make(FindingClass::fidelity_accuracy, Severity::error, u.node_id,
                           "prop '" + u.key + "': " + u.reason));

    core::visit(state.view, [&](const core::ViewNode& group, std::size_t) {
        std::size_t items = 0;
        std::size_t thin = 0;
        for (const auto& child : group.children)
        {
            if (child.source_refs.empty() || is_derived(child))
                continue;
            ++items;
            std::set<std::string> record_fields;
            for (const auto& ref : child.source_refs)
                if (const auto* r = state.context.find(ref))
                    for (const auto& [key, _] : r->payload.items())
                        record_fields.insert(key);
            std::set<std::string> shown;
            core::visit(child, [&](const core::ViewNode& n, std::size_t) {
                for (const auto& [key, _] : n.props.items())
                    if (record_fields.contains(key))
                        shown.insert(key);
            });
            if (shown.size() < config.min_fields_per_record)
                ++thin;
        }
        if (thin > 0)
            out.push_back(make(FindingClass::fidelity_richness, Severity::warn, group.node_id,
                               std::to_string(thin) + " of " + std::to_string(items) + " items render fewer than " +
                                   std::to_string(config.min_fields_per_record) + " record fields"));
    });
    return out;
}

std::vector<Finding> lint_architecture(const core::AppState& state, const QaConfig& config)
{
    std::vector<Finding> out;
    bool too_deep = false;
    core::visit(state.view, [&](const core::ViewNode& n, std::size_t depth) {
        if ((n.kind == core::NodeKind::list || n.kind == core::NodeKind::table) &&
            n.children.size() > config.max_flat_children)
            out.push_back(make(FindingClass::architecture, Severity::warn, n.node_id,
                               std::to_string(n.children.size()) + " ungrouped children"));
        if (n.kind == core::NodeKind::tab_group && n.children.size() == 1)
            out.push_back(make(FindingClass::architecture, Severity::warn, n.node_id, "tab group with a single tab"));
        if (!too_deep && depth + 1 > config.max_depth)
        {
            too_deep = true;
            out.push_back(make(FindingClass::architecture, Severity::error, n.node_id,
                               "view nests " + std::to_string(core::tree_levels(state.view)) + " levels deep, limit " +
                                   std::to_string(config.max_depth)));
        }
    });
    return out;
}

QaReport gate(const core::AppState& state, const env::Registry& env, const QaConfig& config)
{
    QaReport report;
    for (auto&& part : {check_runnability(state, env), check_fidelity(state, config), lint_architecture(state, config)})
        report.findings.insert(report.findings.end(), part.begin(), part.end());
    const bool failed = std::any_of(report.findings.begin(), report.findings.end(),
                                    [](const Finding& f) { return f.severity == Severity::error; });
    report.verdict = failed ? Verdict::fail : Verdict::pass;
    return report;
}

Json to_json(const QaReport& report)
{
    Json findings = Json::array();
    for (const auto& f : report.findings)
        findings.push_back({{"class", to_string(f.cls)},
                            {"severity", to_string(f.severity)},
                            {"locus", f.locus},
                            {"message", f.message}});
    return {{"verdict", report.verdict == Verdict::pass ? "pass" : "fail"}, {"findings", findings}};
}

} // namespace sac::qa
