#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sac/core/types.hpp"

namespace sac::core
{

// Applies a render delta to a state (the transition operator).
//
// element_update / structural_extension produce the successor state with
// state_seq + 1 and content_rev reset to 0. text_reply and app_replacement
// leave the state untouched and return TextReply / NewAppRequest.
// `at` stamps the successor's created_at; defaults to the predecessor's.
//
// Throws Error{DanglingNodeRef | StrategyViolation | SchemaViolation}.
TransitionResult apply_delta(const AppState& state, const Delta& delta, std::optional<Timestamp> at = std::nullopt);

// Builds s0 from AppState::empty() and a cold-start delta (strategy
// app_replacement carrying the construction ops). state_seq stays 0.
AppState apply_initial(const AppState& empty, const Delta& delta);

enum class ViolationKind
{
    DuplicateNodeId,
    TabOutsideTabGroup,
    DanglingAffordanceAnchor,
    DuplicateAffordanceId,
    NLChannelDisabled,
    ResolvedParamOutsideSchema,
    UnresolvableSourceRef,
    UngroundedScalar,
    EmptyId,
};

std::string_view to_string(ViolationKind k) noexcept;

struct Violation
{
    ViolationKind kind;
    std::string locus; // offending node / affordance id
    std::string message;

    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_state(const AppState& state);

struct ViewDiff
{
    std::set<NodeId> preserved_ids;
    std::set<NodeId> added_ids;
    std::set<NodeId> removed_ids;
    std::set<NodeId> mutated_ids;

    bool operator==(const ViewDiff&) const = default;
};

// Partitions old ∪ new node ids. A node present in both trees is "mutated"
// when its kind, props or source_refs differ; child list changes alone do not
// mutate the parent.
ViewDiff diff_view(const ViewNode& old_view, const ViewNode& new_view);

// Tree helpers.
const ViewNode* find_node(const ViewNode& root, const NodeId& id);
std::vector<NodeId> collect_ids(const ViewNode& root);
void visit(const ViewNode& root, const std::function<void(const ViewNode&, std::size_t depth)>& fn);
std::size_t tree_levels(const ViewNode& root); // root alone = 1

// Keys of `props` excluded from factual grounding.
struct GroundingOptions
{
    std::set<std::string> presentational_numeric_keys{"level", "index", "columns", "zoom", "span"};
};

struct UngroundedProp
{
    NodeId node_id;
    std::string key;
    std::string reason;
};

// Factual-scalar grounding: every non-derived prop whose key names a field of
// a cited record must equal that field in one of the cited payloads; every
// other numeric prop must equal some field value of a cited record.
std::vector<UngroundedProp> find_ungrounded_props(
    const ViewNode& root, const AgentContext& context, const GroundingOptions& options = {});

// Stable 64-bit FNV-1a over the canonical serialization of a view.
std::uint64_t view_hash(const ViewNode& view);
std::string hex(std::uint64_t value);

} // namespace sac::core
