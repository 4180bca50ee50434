#include <algorithm>
#include <map>
#include <sstream>

#include "sac/cli/cli.hpp"
#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"
#include "sac/service/session.hpp"

namespace sac::cli
{
namespace
{

std::string fnv_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return core::hex(h);
}

std::string join(const std::set<core::NodeId>& ids)
{
    std::string out;
    for (const auto& id : ids)
        out += (out.empty() ? "" : ",") + id;
    return out;
}

std::string quoted(const std::string& s)
{
    return Json(s).dump();
}

std::map<std::string, std::int64_t> kind_counts(const core::ViewNode& view)
{
    std::map<std::string, std::int64_t> out;
    core::visit(view, [&](const core::ViewNode& n, std::size_t) { ++out[std::string(core::to_string(n.kind))]; });
    return out;
}

std::string label_of(const core::ViewNode& n)
{
    auto it = n.props.find("label");
    return it != n.props.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

struct StepResult
{
    std::optional<service::Outcome> outcome;
    std::optional<std::string> error_kind;
    std::string error_message;
    std::optional<core::AppState> before;
    std::optional<core::AppState> current;
};

class Checker
{
public:
    Checker(std::size_t step, std::vector<std::string>& failures) : step_(step), failures_(failures) {}

    void require(bool ok, const std::string& what)
    {
        if (!ok)
            failures_.push_back("step " + std::to_string(step_) + ": " + what);
    }

    template <class A, class B>
    void equal(const A& expected, const B& actual, const std::string& what)
    {
        if (!(Json(expected) == Json(actual)))
            require(false, what + ": expected " + Json(expected).dump() + ", got " + Json(actual).dump());
    }

private:
    std::size_t step_;
    std::vector<std::string>& failures_;
};

void check(const Json& expect, const StepResult& r, const env::Registry& env, const qa::QaConfig& qa, Checker& c)
{
    static const std::set<std::string> known{
        "outcome", "strategy", "error", "gate", "state_seq", "content_rev", "kind_counts", "children", "anticipatory_labels",
        "structured_labels", "valid_affordances", "added_tabs", "removed_ids", "added_includes", "mutated_includes",
        "unchanged", "text_contains", "no_app", "node_props", "preserves_all_ids"};
    for (const auto& [key, _] : expect.items())
        c.require(known.contains(key), "unknown expectation '" + key + "'");

    if (expect.contains("error"))
    {
        c.equal(expect.at("error"), r.error_kind.value_or("none"), "error");
        return;
    }
    if (r.error_kind)
    {
        c.require(false, "unexpected error " + *r.error_kind + ": " + r.error_message);
        return;
    }

    if (expect.contains("outcome"))
        c.equal(expect.at("outcome"), r.outcome ? std::string(service::to_string(r.outcome->kind)) : "none", "outcome");
    if (expect.contains("strategy"))
        c.equal(expect.at("strategy"),
                r.outcome && r.outcome->strategy ? std::string(core::to_string(*r.outcome->strategy)) : "none", "strategy");
    if (expect.contains("text_contains"))
    {
        const auto needle = expect.at("text_contains").get<std::string>();
        c.require(r.outcome && r.outcome->text.find(needle) != std::string::npos, "reply lacks " + quoted(needle));
    }
    if (expect.contains("no_app"))
        c.require(!r.current, "an app exists");

    if (!r.current)
    {
        for (const char* key : {"gate", "state_seq", "kind_counts", "children", "anticipatory_labels", "structured_labels",
                                "valid_affordances", "node_props"})
            if (expect.contains(key))
                c.require(false, std::string(key) + ": no app");
        return;
    }
    const auto& state = *r.current;

    if (expect.contains("gate"))
    {
        const auto report = qa::gate(state, env, qa);
        c.equal(expect.at("gate"), report.verdict == qa::Verdict::pass ? "pass" : "fail", "gate");
    }
    if (expect.contains("state_seq"))
        c.equal(expect.at("state_seq"), state.state_seq, "state_seq");
    if (expect.contains("content_rev"))
        c.equal(expect.at("content_rev"), state.content_rev, "content_rev");
    if (expect.contains("kind_counts"))
    {
        const auto counts = kind_counts(state.view);
        for (const auto& [kind, n] : expect.at("kind_counts").items())
            c.equal(n, counts.contains(kind) ? counts.at(kind) : 0, "count of " + kind);
    }
    if (expect.contains("children"))
        for (const auto& [id, n] : expect.at("children").items())
        {
            const auto* node = core::find_node(state.view, id);
            c.require(node != nullptr, "node " + id + " missing");
            if (node != nullptr)
                c.equal(n, node->children.size(), "children of " + id);
        }
    if (expect.contains("node_props"))
        for (const auto& [id, props] : expect.at("node_props").items())
        {
            const auto* node = core::find_node(state.view, id);
            c.require(node != nullptr, "node " + id + " missing");
            if (node != nullptr)
                for (const auto& [k, v] : props.items())
                    c.equal(v, node->props.value(k, Json()), id + "." + k);
        }
    if (expect.contains("anticipatory_labels"))
    {
        std::vector<std::string> labels;
        for (const auto& a : state.affordances.anticipatory)
            labels.push_back(a.label);
        c.equal(expect.at("anticipatory_labels"), labels, "anticipatory labels");
    }
    auto find_structured = [&](const std::string& label) -> const core::StructuredAffordance* {
        for (const auto& a : state.affordances.structured)
            if (a.label == label)
                return &a;
        return nullptr;
    };
    if (expect.contains("structured_labels"))
        for (const auto& label : expect.at("structured_labels"))
            c.require(find_structured(label.get<std::string>()) != nullptr, "no structured affordance " + label.dump());
    if (expect.contains("valid_affordances"))
        for (const auto& label : expect.at("valid_affordances"))
        {
            const auto* a = find_structured(label.get<std::string>());
            c.require(a != nullptr, "no structured affordance " + label.dump());
            if (a == nullptr)
                continue;
            c.require(core::find_node(state.view, a->anchor_node) != nullptr, label.dump() + " has a dangling anchor");
            const auto problem = service::param_error(*a, Json::object());
            c.require(!problem, label.dump() + " does not validate: " + problem.value_or(""));
        }

    if (expect.contains("unchanged"))
    {
        c.require(r.before.has_value(), "unchanged: no prior state");
        if (r.before)
        {
            c.equal(r.before->state_seq, state.state_seq, "state_seq after the step");
            c.equal(core::hex(core::view_hash(r.before->view)), core::hex(core::view_hash(state.view)), "view hash");
        }
    }

    const bool wants_diff = expect.contains("added_tabs") || expect.contains("removed_ids") ||
                            expect.contains("added_includes") || expect.contains("mutated_includes") ||
                            expect.contains("preserves_all_ids");
    if (!wants_diff)
        return;
    if (!r.before)
    {
        c.require(false, "diff expectations need a prior state");
        return;
    }
    const auto diff = core::diff_view(r.before->view, state.view);
    if (expect.contains("removed_ids"))
        c.equal(expect.at("removed_ids"), diff.removed_ids, "removed ids");
    if (expect.contains("preserves_all_ids"))
        c.require(diff.removed_ids.empty(), "ids removed: " + join(diff.removed_ids));
    if (expect.contains("added_includes"))
        for (const auto& id : expect.at("added_includes"))
            c.require(diff.added_ids.contains(id.get<std::string>()), "node " + id.dump() + " not added");
    if (expect.contains("mutated_includes"))
        for (const auto& id : expect.at("mutated_includes"))
            c.require(diff.mutated_ids.contains(id.get<std::string>()), "node " + id.dump() + " not mutated in place");
    if (expect.contains("added_tabs"))
    {
        std::vector<std::string> tabs;
        for (const auto& id : diff.added_ids)
            if (const auto* n = core::find_node(state.view, id); n && n->kind == core::NodeKind::tab)
                tabs.push_back(label_of(*n));
        c.equal(expect.at("added_tabs"), tabs, "added tabs");
    }
}

core::Event dispatch_event(const Json& spec, const core::AppState& state)
{
    const auto want_label = spec.value("label", std::string{});
    const auto want_id = spec.value("id", std::string{});
    auto match = [&](const std::string& id, const std::string& label) {
        return (!want_id.empty() && id == want_id) || (!want_label.empty() && label == want_label);
    };
    core::Event event;
    event.basis_state_seq = spec.value("basis_state_seq", state.state_seq);
    for (const auto& a : state.affordances.structured)
        if (match(a.affordance_id, a.label))
        {
            event.payload = core::StructuredPayload{a.affordance_id, a.verb, spec.value("params", Json::object())};
            return event;
        }
    for (const auto& a : state.affordances.anticipatory)
        if (match(a.affordance_id, a.label))
        {
            event.payload = core::NlPayload{a.intent_text, a.affordance_id};
            return event;
        }
    const auto verb = core::parse_verb(spec.value("verb", std::string("select")));
    event.payload = core::StructuredPayload{want_id.empty() ? want_label : want_id, verb.value_or(core::Verb::select),
                                            spec.value("params", Json::object())};
    return event;
}

} // namespace

ReplayReport replay(const Json& trace, Runtime& rt)
{
    ReplayReport report;
    std::ostringstream t;
    const auto clock_start = trace.value("clock_start", std::int64_t{1700000000000});
    const auto clock_step = trace.value("clock_step", std::int64_t{1000});
    std::int64_t tick = 0;

    service::ServiceOptions options{rt.qa, [&] { return clock_start + clock_step * tick; }};
    service::SessionService svc(rt.rules, rt.env, *rt.agent, nullptr, options);
    const auto sid = svc.open_session();
    std::optional<core::AppState> current;

    t << "trace " << trace.value("name", std::string("unnamed")) << "\n";
    const auto& steps = trace.at("steps");
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
        const auto& step = steps[i];
        ++tick;
        StepResult r;
        r.before = current;
        std::string action;
        try
        {
            if (step.contains("utter"))
            {
                action = "utter " + quoted(step.at("utter").get<std::string>());
                r.outcome = svc.submit_utterance(sid, step.at("utter").get<std::string>());
            }
            else if (step.contains("dispatch"))
            {
                const auto& spec = step.at("dispatch");
                action = "dispatch " + quoted(spec.value("label", spec.value("id", std::string{})));
                if (!current)
                    throw Error(ErrorKind::NoApp, "nothing to dispatch against");
                r.outcome = svc.dispatch_affordance(sid, dispatch_event(spec, *current));
            }
            else if (step.contains("write"))
            {
                const auto& w = step.at("write");
                action = "write " + w.at("action").get<std::string>();
                const auto result = rt.env.execute_write(w.at("action").get<std::string>(), w.value("params", Json::object()));
                if (result.status == env::WriteStatus::rejected)
                    throw Error(ErrorKind::SchemaViolation, result.detail);
            }
            else if (step.contains("refresh"))
            {
                action = "refresh";
                r.outcome = svc.refresh(sid);
            }
            else if (step.contains("share"))
            {
                const auto& s = step.at("share");
                const auto kind = s.value("kind", std::string("state"));
                const auto policy = s.value("policy", std::string("static_snapshot"));
                action = "share " + kind + " " + policy;
                const auto pkg = svc.share_export(
                    sid, kind == "template" ? store::ShareKind::app_template : store::ShareKind::state,
                    policy == "live_reference" ? store::DataPolicy::live_reference : store::DataPolicy::static_snapshot);
                r.outcome = svc.share_import(sid, pkg);
            }
            else
                throw Error(ErrorKind::ConfigError, "step " + std::to_string(i + 1) + " has no action");
        }
        catch (const Error& e)
        {
            if (e.kind() == ErrorKind::ConfigError)
                throw;
            r.error_kind = std::string(to_string(e.kind()));
            if (const auto* fault = dynamic_cast<const PipelineFault*>(&e))
                r.error_kind = *r.error_kind + ":" + std::string(to_string(fault->stage()));
            r.error_message = e.what();
        }
        if (r.outcome && r.outcome->state)
            current = r.outcome->state;
        r.current = current;

        t << "[" << (i + 1) << "] " << action << " => ";
        if (r.error_kind)
            t << "error " << *r.error_kind << " " << quoted(r.error_message);
        else if (!r.outcome)
            t << "ok";
        else
        {
            const auto& o = *r.outcome;
            t << service::to_string(o.kind);
            if (o.strategy)
                t << " strategy=" << core::to_string(*o.strategy);
            if (o.kind == service::Outcome::Kind::text_reply)
                t << " text=" << quoted(o.text);
            if (o.state)
                t << " app=" << o.state->app_id << " seq=" << o.state->state_seq << " rev=" << o.state->content_rev
                  << " view=" << core::hex(core::view_hash(o.state->view))
                  << " state=" << fnv_hex(core::serialize_state(*o.state));
            if (o.diff)
                t << " added=[" << join(o.diff->added_ids) << "] removed=[" << join(o.diff->removed_ids) << "] mutated=["
                  << join(o.diff->mutated_ids) << "]";
            if (o.state)
                t << " gate=" << (qa::gate(*o.state, rt.env, rt.qa).verdict == qa::Verdict::pass ? "pass" : "fail");
        }
        t << "\n";

        const auto before = report.failures.size();
        Checker c(i + 1, report.failures);
        check(step.value("expect", Json::object()), r, rt.env, rt.qa, c);
        for (auto k = before; k < report.failures.size(); ++k)
            t << "  FAIL " << report.failures[k] << "\n";
    }
    t << "result " << (report.failures.empty() ? "pass" : "fail (" + std::to_string(report.failures.size()) + ")") << "\n";
    report.transcript = t.str();
    return report;
}

} // namespace sac::cli
