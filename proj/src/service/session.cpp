#include "sac/service/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sac/agent/plan.hpp"
#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace sac::service
{
namespace
{

template <class F>
auto staged(Stage stage, F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (const PipelineFault&)
    {
        throw;
    }
    catch (const Error& e)
    {
        throw PipelineFault(stage, e.kind(), e.what());
    }
    catch (const nlohmann::json::exception& e)
    {
        throw PipelineFault(stage, ErrorKind::SchemaViolation, e.what());
    }
}

core::Timestamp system_now()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

bool type_admits(const std::string& type, const Json& v)
{
    if (type == "string")
        return v.is_string();
    if (type == "number")
        return v.is_number();
    if (type == "integer")
        return v.is_number_integer() || (v.is_number_float() && std::trunc(v.get<double>()) == v.get<double>());
    if (type == "boolean")
        return v.is_boolean();
    return false;
}

std::uint64_t numeric_suffix(const std::string& id, const std::string& prefix)
{
    if (!id.starts_with(prefix))
        return 0;
    const auto rest = id.substr(prefix.size());
    if (rest.empty() || !std::all_of(rest.begin(), rest.end(), [](unsigned char c) { return std::isdigit(c); }))
        return 0;
    return std::stoull(rest);
}

} // namespace

std::string_view to_string(Outcome::Kind k) noexcept
{
    switch (k)
    {
    case Outcome::Kind::text_reply: return "text_reply";
    case Outcome::Kind::app_created: return "app_created";
    case Outcome::Kind::app_updated: return "app_updated";
    }
    return "?";
}

Json to_json(const Outcome& o)
{
    Json j{{"kind", to_string(o.kind)}, {"event_id", o.event_id}};
    if (o.kind == Outcome::Kind::text_reply)
        j["text"] = o.text;
    if (o.state)
        j["state"] = *o.state;
    if (o.strategy)
        j["strategy"] = core::to_string(*o.strategy);
    if (o.diff)
        j["diff"] = {{"preserved", o.diff->preserved_ids},
                     {"added", o.diff->added_ids},
                     {"removed", o.diff->removed_ids},
                     {"mutated", o.diff->mutated_ids}};
    return j;
}

Json to_json(const Update& u)
{
    Json j{{"update_seq", u.update_seq}};
    if (u.snapshot)
        j["snapshot"] = *u.snapshot;
    if (u.outcome)
        j["outcome"] = to_json(*u.outcome);
    return j;
}

std::optional<std::string> param_error(const core::StructuredAffordance& affordance, const Json& params)
{
    if (!params.is_object())
        return "params must be an object";
    Json effective = affordance.resolved_params.value_or(Json::object());
    for (const auto& [key, value] : params.items())
        effective[key] = value;
    for (const auto& [key, value] : effective.items())
    {
        auto spec = affordance.param_schema.find(key);
        if (spec == affordance.param_schema.end())
            return "unknown param '" + key + "'";
        if (!type_admits(spec->second.type, value))
            return "param '" + key + "' is not of type " + spec->second.type;
        if (spec->second.allowed_values)
        {
            const auto& allowed = *spec->second.allowed_values;
            if (std::find(allowed.begin(), allowed.end(), value) == allowed.end())
                return "param '" + key + "' has a value outside its allowed set";
        }
        if (spec->second.range && value.is_number())
        {
            const double v = value.get<double>();
            if (v < spec->second.range->first || v > spec->second.range->second)
                return "param '" + key + "' is out of range";
        }
    }
    for (const auto& [key, _] : affordance.param_schema)
        if (!effective.contains(key))
            return "param '" + key + "' is missing";
    return std::nullopt;
}

SessionService::SessionService(intent::RuleTable rules, env::Registry& env, const agent::AgentBackend& agent,
                               store::FileStore* store, ServiceOptions options)
    : rules_(std::move(rules)), env_(env), agent_(agent), store_(store), options_(std::move(options))
{
    if (!options_.clock)
        options_.clock = system_now;
    if (store_ != nullptr)
    {
        std::uint64_t highest = 0;
        for (const auto& app : store_->apps())
            highest = std::max(highest, numeric_suffix(app, "app-"));
        app_counter_ = highest;
    }
}

std::string SessionService::next_id(const char* prefix, std::atomic<std::uint64_t>& counter)
{
    return prefix + std::to_string(++counter);
}

std::shared_ptr<SessionService::Session> SessionService::session(const std::string& id) const
{
    std::lock_guard guard(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw Error(ErrorKind::NoSession, "no session " + id);
    return it->second;
}

std::size_t SessionService::session_count() const
{
    std::lock_guard guard(sessions_mutex_);
    return sessions_.size();
}

std::string SessionService::open_session(const std::optional<core::AppId>& resume)
{
    auto s = std::make_shared<Session>();
    if (resume)
    {
        if (store_ == nullptr)
            throw Error(ErrorKind::NoApp, "no store to resume " + *resume + " from");
        auto history = store_->load_history(*resume);
        if (!history)
            throw Error(ErrorKind::NoApp, "no stored app " + *resume);
        s->state = store_->load_state(*resume, history->head);
        s->history = std::move(history);
    }
    s->id = next_id("s-", session_counter_);
    std::lock_guard guard(sessions_mutex_);
    sessions_.emplace(s->id, s);
    return s->id;
}

core::AppState SessionService::get_state(const std::string& session_id) const
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    if (!s->state)
        throw Error(ErrorKind::NoApp, "session " + session_id + " has no app");
    return *s->state;
}

Outcome SessionService::submit_utterance(const std::string& session_id, const std::string& text)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    const auto event_id = next_id("e-", event_counter_);
    Outcome outcome;
    if (!s->state)
    {
        const auto assessment = staged(Stage::intent, [&] { return intent::assess_cold_start(rules_, text); });
        outcome = cold_start(*s, event_id, assessment);
    }
    else
    {
        core::Event event{event_id, session_id, core::NlPayload{text, std::nullopt}, s->state->state_seq};
        outcome = run_event(*s, std::move(event));
    }
    publish(*s, outcome);
    return outcome;
}

Outcome SessionService::dispatch_affordance(const std::string& session_id, const core::Event& incoming)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    if (!s->state)
        throw Error(ErrorKind::NoApp, "session " + session_id + " has no app");
    const auto& state = *s->state;
    if (incoming.basis_state_seq != state.state_seq)
        throw Error(ErrorKind::StaleEvent, "event basis " + std::to_string(incoming.basis_state_seq) +
                                               " but the app is at " + std::to_string(state.state_seq));

    core::Event event = incoming;
    event.event_id = next_id("e-", event_counter_);
    event.session_id = session_id;
    if (const auto* p = std::get_if<core::StructuredPayload>(&incoming.payload))
    {
        const auto& anticipatory = state.affordances.anticipatory;
        auto hint = std::find_if(anticipatory.begin(), anticipatory.end(),
                                 [&](const core::AnticipatoryAffordance& a) { return a.affordance_id == p->affordance_id; });
        if (hint != anticipatory.end())
            event.payload = core::NlPayload{hint->intent_text, hint->affordance_id};
        else
        {
            const auto& structured = state.affordances.structured;
            auto a = std::find_if(structured.begin(), structured.end(),
                                  [&](const core::StructuredAffordance& x) { return x.affordance_id == p->affordance_id; });
            if (a == structured.end())
                throw Error(ErrorKind::UnknownAffordance, "no affordance " + p->affordance_id);
            if (a->verb != p->verb)
                throw Error(ErrorKind::SchemaViolation, "affordance " + a->affordance_id + " takes verb " +
                                                            std::string(core::to_string(a->verb)));
            if (auto problem = param_error(*a, p->params))
                throw Error(ErrorKind::SchemaViolation, a->affordance_id + ": " + *problem);
        }
    }
    else if (const auto* nl = std::get_if<core::NlPayload>(&incoming.payload); nl && nl->via_anticipatory)
    {
        const auto& anticipatory = state.affordances.anticipatory;
        if (std::none_of(anticipatory.begin(), anticipatory.end(),
                         [&](const core::AnticipatoryAffordance& a) { return a.affordance_id == *nl->via_anticipatory; }))
            throw Error(ErrorKind::UnknownAffordance, "no anticipatory affordance " + *nl->via_anticipatory);
    }

    auto outcome = run_event(*s, std::move(event));
    publish(*s, outcome);
    return outcome;
}

std::variant<core::AppState, core::TextReply> SessionService::build_app(const agent::GenerationPlan& plan,
                                                                       const core::AppId& app_id)
{
    agent::RenderRequest request{std::nullopt, plan, {}};
    const auto execution = staged(Stage::agent, [&] { return agent_.plan(request); });
    staged(Stage::environment, [&] {
        for (const auto& q : execution.queries)
        {
            auto records = env_.execute_query(q);
            request.retrieved.insert(request.retrieved.end(), records.begin(), records.end());
        }
    });
    const auto delta = staged(Stage::agent, [&] { return agent_.render(request); });
    if (delta.strategy == core::Strategy::text_reply)
        return core::TextReply{delta.reply_text.value_or("")};
    return staged(Stage::transition,
                  [&] { return core::apply_initial(core::AppState::empty(app_id, options_.clock()), delta); });
}

void SessionService::admit(const core::AppState& state) const
{
    const auto report = qa::gate(state, env_, options_.qa);
    if (report.verdict == qa::Verdict::fail)
    {
        std::string message = "gate failed";
        for (const auto& f : report.findings)
            if (f.severity == qa::Severity::error)
                message += "; " + std::string(qa::to_string(f.cls)) + " at " + f.locus + ": " + f.message;
        throw PipelineFault(Stage::qa, ErrorKind::AssertionFailed, message);
    }
}

void SessionService::persist(Session& s, const core::AppState& state)
{
    if (store_ != nullptr)
        staged(Stage::store, [&] { store_->commit(state, *s.history); });
}

Outcome SessionService::text_only(Session& s, const std::string& event_id, const intent::IntentAssessment& assessment)
{
    agent::GenerationPlan plan{assessment, agent::Architecture::parallel_items, {}};
    agent::RenderRequest request{std::nullopt, plan, {}};
    const auto delta = staged(Stage::agent, [&] { return agent_.render(request); });
    if (delta.strategy != core::Strategy::text_reply)
        throw PipelineFault(Stage::agent, ErrorKind::StrategyViolation, "a text-only request was answered with an app");
    Outcome outcome{Outcome::Kind::text_reply, event_id, delta.reply_text.value_or(""), std::nullopt,
                    core::Strategy::text_reply, std::nullopt};
    if (s.state)
    {
        auto history = store::record_transition(*s.history, core::TextReply{outcome.text});
        std::swap(*s.history, history);
        try
        {
            persist(s, *s.state);
        }
        catch (...)
        {
            std::swap(*s.history, history);
            throw;
        }
    }
    return outcome;
}

Outcome SessionService::cold_start(Session& s, const std::string& event_id, const intent::IntentAssessment& assessment)
{
    if (assessment.boundary_flag || assessment.modality == intent::Modality::plain_text || !assessment.category)
        return text_only(s, event_id, assessment);

    const auto plan = staged(Stage::intent, [&] { return agent::make_plan(assessment); });
    const auto app_id = next_id("app-", app_counter_);
    auto built = build_app(plan, app_id);
    if (auto* reply = std::get_if<core::TextReply>(&built))
        return Outcome{Outcome::Kind::text_reply, event_id, reply->text, std::nullopt, core::Strategy::text_reply,
                       std::nullopt};
    auto& s0 = std::get<core::AppState>(built);
    admit(s0);
    s.history = store::StateHistory::rooted(s0);
    persist(s, s0);
    s.state = s0;
    return Outcome{Outcome::Kind::app_created, event_id, {}, s0, core::Strategy::app_replacement, std::nullopt};
}

Outcome SessionService::run_event(Session& s, core::Event event)
{
    const auto& prior = *s.state;

    if (const auto* nl = std::get_if<core::NlPayload>(&event.payload))
    {
        const auto fresh = staged(Stage::intent, [&] { return intent::assess_cold_start(rules_, nl->text); });
        if (fresh.boundary_flag)
            return text_only(s, event.event_id, fresh);
    }

    const auto interpreted = staged(Stage::intent, [&] { return intent::interpret_event(rules_, event, prior); });
    agent::RenderRequest request{prior, interpreted, {}};
    const auto execution = staged(Stage::agent, [&] { return agent_.plan(request); });
    staged(Stage::environment, [&] {
        for (const auto& w : execution.writes)
        {
            auto result = env_.execute_write(w.action, w.params);
            if (result.status == env::WriteStatus::rejected)
                throw Error(ErrorKind::SchemaViolation, "write " + w.action + " rejected: " + result.detail);
        }
        for (const auto& q : execution.queries)
        {
            auto records = env_.execute_query(q);
            request.retrieved.insert(request.retrieved.end(), records.begin(), records.end());
        }
    });
    const auto delta = staged(Stage::agent, [&] { return agent_.render(request); });
    const auto result = staged(Stage::transition, [&] { return core::apply_delta(prior, delta, options_.clock()); });

    if (const auto* reply = std::get_if<core::TextReply>(&result))
    {
        auto history = store::record_transition(*s.history, *reply);
        std::swap(*s.history, history);
        try
        {
            persist(s, prior);
        }
        catch (...)
        {
            std::swap(*s.history, history);
            throw;
        }
        return Outcome{Outcome::Kind::text_reply, event.event_id, reply->text, std::nullopt, core::Strategy::text_reply,
                       std::nullopt};
    }

    if (const auto* request_new = std::get_if<core::NewAppRequest>(&result))
    {
        const auto app_id = next_id("app-", app_counter_);
        auto built = build_app(request_new->seed, app_id);
        if (auto* reply = std::get_if<core::TextReply>(&built))
            return Outcome{Outcome::Kind::text_reply, event.event_id, reply->text, std::nullopt,
                           core::Strategy::text_reply, std::nullopt};
        auto& s0 = std::get<core::AppState>(built);
        admit(s0);
        auto old_history = store::record_transition(*s.history, result, app_id);
        if (store_ != nullptr)
            staged(Stage::store, [&] { store_->commit(prior, old_history); });
        s.history = store::StateHistory::rooted(s0);
        persist(s, s0);
        s.state = s0;
        return Outcome{Outcome::Kind::app_created, event.event_id, {}, s0, core::Strategy::app_replacement, std::nullopt};
    }

    const auto& next = std::get<core::AppState>(result);
    admit(next);
    auto history = staged(Stage::store, [&] { return store::record_transition(*s.history, next); });
    std::swap(*s.history, history);
    try
    {
        persist(s, next);
    }
    catch (...)
    {
        std::swap(*s.history, history);
        throw;
    }
    Outcome outcome{Outcome::Kind::app_updated, event.event_id, {}, next, delta.strategy, core::diff_view(prior.view, next.view)};
    s.state = next;
    return outcome;
}

void SessionService::publish(Session& s, const Outcome& outcome)
{
    for (auto it = s.subscribers.begin(); it != s.subscribers.end();)
    {
        auto& [fn, last] = it->second;
        try
        {
            fn(Update{++last, std::nullopt, outcome});
            ++it;
        }
        catch (...)
        {
            it = s.subscribers.erase(it);
        }
    }
}

std::uint64_t SessionService::subscribe(const std::string& session_id, Subscriber subscriber)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    const auto id = ++subscription_counter_;
    std::uint64_t last = 0;
    if (s->state)
        subscriber(Update{++last, s->state, std::nullopt});
    s->subscribers.emplace(id, std::make_pair(std::move(subscriber), last));
    return id;
}

void SessionService::unsubscribe(const std::string& session_id, std::uint64_t subscription)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    s->subscribers.erase(subscription);
}

std::string SessionService::share_export(const std::string& session_id, store::ShareKind kind, store::DataPolicy policy)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    if (!s->state)
        throw Error(ErrorKind::NoApp, "session " + session_id + " has no app");
    if (kind == store::ShareKind::app_template)
        return store::encode_share(store::export_share(store::extract_template(*s->state)));
    return store::encode_share(store::export_share(*s->state, policy));
}

Outcome SessionService::share_import(const std::string& session_id, const std::string& package)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    const auto pkg = store::decode_share(package);
    const auto event_id = next_id("e-", event_counter_);
    const auto app_id = next_id("app-", app_counter_);
    auto state = staged(Stage::store, [&] {
        return store::import_share(pkg, store::GenerationEnv{rules_, env_, agent_, app_id, options_.clock()});
    });
    state.app_id = app_id;
    admit(state);
    s->history = store::StateHistory::rooted(state);
    persist(*s, state);
    s->state = state;
    Outcome outcome{Outcome::Kind::app_created, event_id, {}, state, std::nullopt, std::nullopt};
    publish(*s, outcome);
    return outcome;
}

Outcome SessionService::refresh(const std::string& session_id)
{
    auto s = session(session_id);
    std::lock_guard guard(s->mutex);
    if (!s->state)
        throw Error(ErrorKind::NoApp, "session " + session_id + " has no app");
    const auto event_id = next_id("e-", event_counter_);
    auto next = store::refresh_data(*s->state, env_);
    admit(next);
    persist(*s, next);
    Outcome outcome{Outcome::Kind::app_updated, event_id, {}, next, std::nullopt, core::diff_view(s->state->view, next.view)};
    s->state = std::move(next);
    publish(*s, outcome);
    return outcome;
}

} // namespace sac::service
