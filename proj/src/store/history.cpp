#include "sac/store/history.hpp"

#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace sac::store
{

StateHistory StateHistory::rooted(const core::AppState& s0)
{
    StateHistory h;
    h.app_id = s0.app_id;
    HistoryNode root;
    root.state_seq = s0.state_seq;
    if (!s0.context.history.empty())
    {
        root.event = s0.context.history.back().event;
        root.strategy = s0.context.history.back().strategy;
    }
    h.nodes.emplace(s0.state_seq, std::move(root));
    h.head = s0.state_seq;
    return h;
}

StateHistory record_transition(StateHistory history, const core::TransitionResult& result,
                               const std::optional<core::AppId>& child_app)
{
    if (const auto* reply = std::get_if<core::TextReply>(&result))
    {
        history.nodes.at(history.head).annotations.push_back("text_reply: " + reply->text);
        return history;
    }
    if (std::holds_alternative<core::NewAppRequest>(result))
    {
        if (!child_app)
            throw Error(ErrorKind::SchemaViolation, "a fork needs the id of the app it creates");
        history.forks.push_back({history.head, *child_app});
        return history;
    }

    const auto& state = std::get<core::AppState>(result);
    if (state.app_id != history.app_id)
        throw Error(ErrorKind::SchemaViolation, "state of app " + state.app_id + " recorded in history of " + history.app_id);
    if (history.nodes.contains(state.state_seq))
        throw Error(ErrorKind::SeqConflict, "state_seq " + std::to_string(state.state_seq) + " already recorded");

    HistoryNode node;
    node.state_seq = state.state_seq;
    node.parent_seq = history.head;
    if (!state.context.history.empty())
    {
        node.event = state.context.history.back().event;
        node.strategy = state.context.history.back().strategy;
    }
    history.nodes.emplace(state.state_seq, std::move(node));
    history.head = state.state_seq;
    return history;
}

void to_json(Json& j, const StateHistory& h)
{
    Json nodes = Json::array();
    for (const auto& [seq, n] : h.nodes)
    {
        Json node{{"state_seq", seq}, {"event", n.event}, {"strategy", core::to_string(n.strategy)},
                  {"annotations", n.annotations}};
        node["parent_seq"] = n.parent_seq ? Json(*n.parent_seq) : Json(nullptr);
        nodes.push_back(std::move(node));
    }
    Json forks = Json::array();
    for (const auto& f : h.forks)
        forks.push_back({{"parent_seq", f.parent_seq}, {"child_app_id", f.child_app_id}});
    j = Json{{"app_id", h.app_id}, {"head", h.head}, {"nodes", nodes}, {"forks", forks}};
}

void from_json(const Json& j, StateHistory& h)
{
    h = StateHistory{};
    h.app_id = j.at("app_id").get<std::string>();
    h.head = j.at("head").get<std::int64_t>();
    for (const auto& n : j.at("nodes"))
    {
        HistoryNode node;
        node.state_seq = n.at("state_seq").get<std::int64_t>();
        if (!n.at("parent_seq").is_null())
            node.parent_seq = n.at("parent_seq").get<std::int64_t>();
        node.event = n.at("event").get<std::string>();
        auto strategy = core::parse_strategy(n.at("strategy").get<std::string>());
        if (!strategy)
            throw Error(ErrorKind::DecodeError, "unknown strategy in history index");
        node.strategy = *strategy;
        node.annotations = n.at("annotations").get<std::vector<std::string>>();
        h.nodes.emplace(node.state_seq, std::move(node));
    }
    for (const auto& f : j.at("forks"))
        h.forks.push_back({f.at("parent_seq").get<std::int64_t>(), f.at("child_app_id").get<std::string>()});
    if (!h.nodes.contains(h.head))
        throw Error(ErrorKind::DecodeError, "history head is not a recorded state");
}

} // namespace sac::store
