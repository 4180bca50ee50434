#include <algorithm>

#include "recipe.hpp"
#include "sac/agent/backend.hpp"
#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"

namespace sac::agent
{
namespace
{

std::string describe(const RenderRequest& request)
{
    if (const auto* plan = std::get_if<GenerationPlan>(&request.input))
        return "cold start " + core::canonical(Json(plan->assessment));
    return "evolution '" + std::get<intent::InterpretedEvent>(request.input).resolved_intent + "'";
}

Json merged(Json base, const Json& patch)
{
    for (const auto& [key, value] : patch.items())
        base[key] = value;
    return base;
}

} // namespace

ScriptedAgent::ScriptedAgent(AgentScript script, ScriptedAgentOptions options)
    : script_(std::move(script)), options_(options)
{
}

const ScriptEntry& ScriptedAgent::entry_for(const RenderRequest& request) const
{
    const auto hits = script_.matching(request);
    if (hits.empty())
        throw Error(ErrorKind::ScriptMiss, "no entry for " + describe(request));
    if (hits.size() > 1)
    {
        std::string ids;
        for (const auto* h : hits)
            ids += (ids.empty() ? "" : ", ") + h->id;
        throw Error(ErrorKind::ScriptMiss, "ambiguous entries [" + ids + "] for " + describe(request));
    }
    return *hits.front();
}

ExecutionPlan ScriptedAgent::plan(const RenderRequest& request) const
{
    if (const auto* plan = std::get_if<GenerationPlan>(&request.input))
        return {plan->queries, {}};

    const auto& event = std::get<intent::InterpretedEvent>(request.input);
    if (event.hint == intent::Hint::replace)
        return {};
    const auto& entry = entry_for(request);

    recipe::Scope scope;
    scope.params = event.effective_params;
    if (request.prior_state)
    {
        scope.preferences = merged(request.prior_state->context.preferences, entry.preferences);
        scope.known = &request.prior_state->context.retrieved;
    }

    ExecutionPlan out;
    for (const auto& q : entry.queries)
        out.queries.push_back(recipe::expand_query(q, scope));
    for (const auto& w : entry.writes)
    {
        WriteRequest write{w.action, Json::object()};
        for (const auto& [key, expr] : w.params.items())
            if (auto v = recipe::evaluate(expr, scope))
                write.params[key] = v->value;
        out.writes.push_back(std::move(write));
    }
    return out;
}

core::Delta ScriptedAgent::render(const RenderRequest& request) const
{
    if (const auto* plan = std::get_if<GenerationPlan>(&request.input))
        return render_cold_start(*plan, request);
    if (!request.prior_state)
        throw Error(ErrorKind::SchemaViolation, "evolution render needs a prior state");
    return render_evolution(std::get<intent::InterpretedEvent>(request.input), request);
}

core::Delta ScriptedAgent::render_cold_start(const GenerationPlan& plan, const RenderRequest& request) const
{
    const auto& entry = entry_for(request);
    core::Delta delta;
    if (entry.reply)
    {
        delta.strategy = core::Strategy::text_reply;
        delta.reply_text = *entry.reply;
        return delta;
    }
    if (plan.assessment.modality != intent::Modality::structured_app || entry.view.empty())
        throw Error(ErrorKind::ScriptMiss, "entry " + entry.id + " has neither a reply nor a view");

    recipe::Scope scope;
    scope.retrieved = &request.retrieved;
    scope.preferences = entry.preferences;

    delta.strategy = core::Strategy::app_replacement;
    delta.replacement_seed = plan;
    std::size_t index = 0;
    for (const auto& tmpl : entry.view)
        for (auto& node : recipe::expand_node(tmpl, scope))
            delta.node_ops.emplace_back(core::InsertChild{"root", index++, std::move(node)});

    auto& ctx = delta.context_ops;
    ctx.append_retrieved = request.retrieved;
    ctx.merge_preferences = entry.preferences;
    ctx.merge_task_progress = merged(merged(Json{{"stage", entry.id}}, entry.progress), Json{{"plan", plan}});
    ctx.append_history.push_back(
        {0, "cold_start " + std::string(intent::to_string(*plan.assessment.category)), core::Strategy::app_replacement, entry.summary});

    delta.affordance_ops = core::AffordanceOps{};
    const auto s0 = core::apply_initial(core::AppState::empty("pending", 0), delta);
    const auto affordances = generate_affordances(s0.view, s0.context, script_);
    delta.affordance_ops = core::AffordanceOps{affordances.structured, affordances.anticipatory};
    return delta;
}

core::Delta ScriptedAgent::render_evolution(const intent::InterpretedEvent& event, const RenderRequest& request) const
{
    const auto& prior = *request.prior_state;
    core::Delta delta;

    if (event.hint == intent::Hint::replace)
    {
        if (!event.assessment || !event.assessment->category)
            throw Error(ErrorKind::ScriptMiss, "replacement without an assessable task: " + event.resolved_intent);
        delta.strategy = core::Strategy::app_replacement;
        delta.replacement_seed = make_plan(*event.assessment);
        return delta;
    }

    const auto& entry = entry_for(request);
    recipe::Scope scope;
    scope.params = event.effective_params;
    scope.preferences = merged(prior.context.preferences, entry.preferences);
    scope.retrieved = &request.retrieved;
    scope.known = &prior.context.retrieved;

    if (entry.reply)
    {
        delta.strategy = core::Strategy::text_reply;
        delta.reply_text = recipe::interpolate(*entry.reply, scope);
        return delta;
    }

    delta.strategy = select_strategy(event.hint, assess_compatibility(prior.view, request.retrieved));
    delta.node_ops = recipe::expand_ops(entry.ops, prior, scope);

    auto& ctx = delta.context_ops;
    ctx.append_retrieved = request.retrieved;
    ctx.merge_preferences = entry.preferences;
    // Entries without follow-ups of their own keep the current stage, so its
    // anticipatory list stays on offer.
    ctx.merge_task_progress = entry.anticipatory.empty() ? entry.progress : merged(Json{{"stage", entry.id}}, entry.progress);
    ctx.append_history.push_back({prior.state_seq, event.resolved_intent, delta.strategy, entry.summary});
    if (prior.context.history.size() + 1 > options_.history_limit)
        ctx.compress_keep_last = options_.history_keep;

    delta.affordance_ops = core::AffordanceOps{};
    const auto next = std::get<core::AppState>(core::apply_delta(prior, delta));
    const auto affordances = generate_affordances(next.view, next.context, script_);
    delta.affordance_ops = core::AffordanceOps{affordances.structured, affordances.anticipatory};
    return delta;
}

} // namespace sac::agent
