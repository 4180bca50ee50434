#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/core/types.hpp"

namespace sac::store
{

using Json = nlohmann::json;

struct HistoryNode
{
    std::int64_t state_seq = 0;
    std::optional<std::int64_t> parent_seq; // absent for the root
    std::string event;
    core::Strategy strategy = core::Strategy::app_replacement;
    std::vector<std::string> annotations; // text replies given while this state was current

    bool operator==(const HistoryNode&) const = default;
};

struct Fork
{
    std::int64_t parent_seq = 0;
    core::AppId child_app_id;

    bool operator==(const Fork&) const = default;
};

// Lifecycle tree of one app. `head` is the state currently presented.
struct StateHistory
{
    core::AppId app_id;
    std::map<std::int64_t, HistoryNode> nodes;
    std::vector<Fork> forks;
    std::int64_t head = 0;

    bool operator==(const StateHistory&) const = default;

    // History holding only s0.
    static StateHistory rooted(const core::AppState& s0);
};

// Successor states become children of the head, text replies annotate the
// head, replacements add a fork to `child_app`. Throws SeqConflict when the
// successor's seq is already recorded.
StateHistory record_transition(StateHistory history, const core::TransitionResult& result,
                               const std::optional<core::AppId>& child_app = std::nullopt);

void to_json(Json& j, const StateHistory& h);
void from_json(const Json& j, StateHistory& h);

} // namespace sac::store
