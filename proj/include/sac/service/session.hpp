#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sac/agent/backend.hpp"
#include "sac/core/state.hpp"
#include "sac/environment/registry.hpp"
#include "sac/intent/analysis.hpp"
#include "sac/qa/gate.hpp"
#include "sac/store/distribution.hpp"
#include "sac/store/file_store.hpp"
#include "sac/store/history.hpp"

namespace sac::service
{

using Json = nlohmann::json;
using Clock = std::function<core::Timestamp()>;

struct Outcome
{
    enum class Kind
    {
        text_reply,
        app_created,
        app_updated,
    };

    Kind kind = Kind::text_reply;
    std::string event_id;
    std::string text;                       // text_reply
    std::optional<core::AppState> state;    // app_created / app_updated
    std::optional<core::Strategy> strategy; // absent for refresh and import
    std::optional<core::ViewDiff> diff;     // app_updated against the prior view
};

std::string_view to_string(Outcome::Kind k) noexcept;
Json to_json(const Outcome& o);

// What a subscriber receives: the current state when it subscribes, then
// every outcome of the session in transition order.
struct Update
{
    std::uint64_t update_seq = 0; // per subscriber, starting at 1
    std::optional<core::AppState> snapshot;
    std::optional<Outcome> outcome;
};

Json to_json(const Update& u);

using Subscriber = std::function<void(const Update&)>;

// Rejects params the affordance's schema does not admit: unknown keys, type
// or allowed-value mismatches, out-of-range numbers, and schema keys left
// unbound after merging with resolved_params.
std::optional<std::string> param_error(const core::StructuredAffordance& affordance, const Json& params);

struct ServiceOptions
{
    qa::QaConfig qa;
    Clock clock; // defaults to the system clock
};

// Hosts sessions and runs the interaction cycle: intent -> environment ->
// agent -> transition -> qa -> store. Every session processes one request
// at a time; distinct sessions run in parallel.
class SessionService
{
public:
    // `store` may be null, in which case nothing is persisted.
    SessionService(intent::RuleTable rules, env::Registry& env, const agent::AgentBackend& agent,
                   store::FileStore* store, ServiceOptions options = {});

    // Opens an empty session, or one presenting the stored head of `resume`.
    std::string open_session(const std::optional<core::AppId>& resume = std::nullopt);

    Outcome submit_utterance(const std::string& session_id, const std::string& text);

    // Structured events go through the affordance's schema. An event naming
    // an anticipatory affordance is re-routed as its natural-language intent.
    Outcome dispatch_affordance(const std::string& session_id, const core::Event& event);

    core::AppState get_state(const std::string& session_id) const;

    std::uint64_t subscribe(const std::string& session_id, Subscriber subscriber);
    void unsubscribe(const std::string& session_id, std::uint64_t subscription);

    std::string share_export(const std::string& session_id, store::ShareKind kind, store::DataPolicy policy);
    Outcome share_import(const std::string& session_id, const std::string& package);
    Outcome refresh(const std::string& session_id);

    std::size_t session_count() const;

private:
    struct Session
    {
        std::string id;
        std::mutex mutex;
        std::optional<core::AppState> state;
        std::optional<store::StateHistory> history;
        std::map<std::uint64_t, std::pair<Subscriber, std::uint64_t>> subscribers; // id -> (fn, last update_seq)
    };

    std::shared_ptr<Session> session(const std::string& id) const;
    std::string next_id(const char* prefix, std::atomic<std::uint64_t>& counter);

    Outcome run_event(Session& s, core::Event event);
    Outcome cold_start(Session& s, const std::string& event_id, const intent::IntentAssessment& assessment);
    Outcome text_only(Session& s, const std::string& event_id, const intent::IntentAssessment& assessment);
    std::variant<core::AppState, core::TextReply> build_app(const agent::GenerationPlan& plan, const core::AppId& app_id);
    void admit(const core::AppState& state) const;
    void persist(Session& s, const core::AppState& state);
    void publish(Session& s, const Outcome& outcome);

    intent::RuleTable rules_;
    env::Registry& env_;
    const agent::AgentBackend& agent_;
    store::FileStore* store_;
    ServiceOptions options_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> session_counter_{0};
    std::atomic<std::uint64_t> app_counter_{0};
    std::atomic<std::uint64_t> event_counter_{0};
    std::atomic<std::uint64_t> subscription_counter_{0};
};

} // namespace sac::service
