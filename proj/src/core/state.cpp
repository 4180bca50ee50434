#include "sac/core/state.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace sac::core
{
namespace
{

bool is_structural(NodeKind kind)
{
    return kind == NodeKind::tab || kind == NodeKind::tab_group || kind == NodeKind::panel;
}

// Path from root to the node with `id` (inclusive); empty if absent.
bool find_path(ViewNode& node, const NodeId& id, std::vector<ViewNode*>& path)
{
    path.push_back(&node);
    if (node.node_id == id)
        return true;
    for (auto& child : node.children)
        if (find_path(child, id, path))
            return true;
    path.pop_back();
    return false;
}

std::vector<ViewNode*> path_to(ViewNode& root, const NodeId& id)
{
    std::vector<ViewNode*> path;
    find_path(root, id, path);
    return path;
}

// Depth of a node at `depth` plus its descendants; returns true if any
// tab/tab_group/panel sits at absolute depth <= 2.
bool touches_structure(const ViewNode& node, std::size_t depth)
{
    if (depth > 2)
        return false;
    if (is_structural(node.kind))
        return true;
    return std::any_of(node.children.begin(), node.children.end(),
                       [depth](const ViewNode& c) { return touches_structure(c, depth + 1); });
}

void merge_object(Json& target, const Json& patch)
{
    for (const auto& [key, value] : patch.items())
    {
        if (value.is_null())
            target.erase(key);
        else
            target[key] = value;
    }
}

void check_structure(const ViewNode& root)
{
    std::set<NodeId> seen;
    std::string problem;
    std::function<void(const ViewNode&, const ViewNode*)> walk = [&](const ViewNode& node, const ViewNode* parent) {
        if (!problem.empty())
            return;
        if (node.node_id.empty())
            problem = "empty node id";
        else if (!seen.insert(node.node_id).second)
            problem = "duplicate node id " + node.node_id;
        else if (node.kind == NodeKind::tab && (parent == nullptr || parent->kind != NodeKind::tab_group))
            problem = "tab " + node.node_id + " outside a tab_group";
        for (const auto& child : node.children)
            walk(child, &node);
    };
    walk(root, nullptr);
    if (!problem.empty())
        throw Error(ErrorKind::SchemaViolation, problem);
}

void apply_node_op(ViewNode& root, const NodeOp& op, Strategy strategy)
{
    const bool guard = strategy == Strategy::element_update;
    if (const auto* set = std::get_if<SetProps>(&op))
    {
        auto path = path_to(root, set->node_id);
        if (path.empty())
            throw Error(ErrorKind::DanglingNodeRef, "set_props target " + set->node_id);
        if (!set->props.is_object())
            throw Error(ErrorKind::SchemaViolation, "set_props payload must be an object");
        merge_object(path.back()->props, set->props);
    }
    else if (const auto* insert = std::get_if<InsertChild>(&op))
    {
        auto path = path_to(root, insert->parent_id);
        if (path.empty())
            throw Error(ErrorKind::DanglingNodeRef, "insert_child parent " + insert->parent_id);
        const std::size_t depth = path.size(); // depth of the inserted node; root is 0
        if (guard && touches_structure(insert->node, depth))
            throw Error(ErrorKind::StrategyViolation,
                        "element_update inserts structural node " + insert->node.node_id + " at depth " + std::to_string(depth));
        auto& children = path.back()->children;
        if (insert->index > children.size())
            throw Error(ErrorKind::SchemaViolation, "insert_child index out of range under " + insert->parent_id);
        children.insert(children.begin() + static_cast<std::ptrdiff_t>(insert->index), insert->node);
    }
    else
    {
        const auto& remove = std::get<RemoveNode>(op);
        auto path = path_to(root, remove.node_id);
        if (path.empty())
            throw Error(ErrorKind::DanglingNodeRef, "remove_node target " + remove.node_id);
        if (path.size() == 1)
            throw Error(ErrorKind::SchemaViolation, "cannot remove the root node");
        const std::size_t depth = path.size() - 1;
        if (guard && touches_structure(*path.back(), depth))
            throw Error(ErrorKind::StrategyViolation,
                        "element_update removes structural node " + remove.node_id + " at depth " + std::to_string(depth));
        auto& siblings = path[path.size() - 2]->children;
        siblings.erase(std::find_if(siblings.begin(), siblings.end(),
                                    [&](const ViewNode& n) { return n.node_id == remove.node_id; }));
    }
}

void apply_context_ops(AgentContext& context, const ContextOps& ops)
{
    for (const auto& record : ops.append_retrieved)
    {
        auto it = std::find_if(context.retrieved.begin(), context.retrieved.end(),
                               [&](const env::Record& r) { return r.ref == record.ref; });
        if (it == context.retrieved.end())
            context.retrieved.push_back(record);
        else if (it->payload != record.payload)
            throw Error(ErrorKind::SchemaViolation, "record " + env::to_string(record.ref) + " re-appended with a different payload");
    }
    if (!ops.merge_preferences.is_object() || !ops.merge_task_progress.is_object())
        throw Error(ErrorKind::SchemaViolation, "context merges must be objects");
    merge_object(context.preferences, ops.merge_preferences);
    merge_object(context.task_progress, ops.merge_task_progress);
    context.history.insert(context.history.end(), ops.append_history.begin(), ops.append_history.end());

    if (ops.compress_keep_last && context.history.size() > *ops.compress_keep_last)
    {
        const auto fold = context.history.size() - *ops.compress_keep_last;
        std::string summary = context.compressed_summary.value_or("");
        for (std::size_t i = 0; i < fold; ++i)
        {
            const auto& h = context.history[i];
            if (!summary.empty())
                summary += '\n';
            summary += "[" + std::to_string(h.state_seq) + "] " + std::string(to_string(h.strategy)) + ": " + h.summary;
        }
        context.compressed_summary = std::move(summary);
        context.history.erase(context.history.begin(), context.history.begin() + static_cast<std::ptrdiff_t>(fold));
    }
}

void check_delta_shape(const Delta& delta)
{
    const bool is_reply = delta.strategy == Strategy::text_reply;
    if (is_reply != delta.reply_text.has_value())
        throw Error(ErrorKind::StrategyViolation, "reply_text must be present iff strategy is text_reply");
    if ((delta.strategy == Strategy::app_replacement) != delta.replacement_seed.has_value())
        throw Error(ErrorKind::StrategyViolation, "replacement_seed must be present iff strategy is app_replacement");
    if (is_reply)
    {
        const bool affordances_empty =
            !delta.affordance_ops || (delta.affordance_ops->structured.empty() && delta.affordance_ops->anticipatory.empty());
        if (!delta.node_ops.empty() || !affordances_empty)
            throw Error(ErrorKind::StrategyViolation, "text_reply carries node or affordance ops");
    }
}

AppState transform(const AppState& state, const Delta& delta, Strategy guard)
{
    AppState next = state;
    for (const auto& op : delta.node_ops)
        apply_node_op(next.view, op, guard);
    check_structure(next.view);

    if (delta.affordance_ops)
    {
        next.affordances.structured = delta.affordance_ops->structured;
        next.affordances.anticipatory = delta.affordance_ops->anticipatory;
    }
    std::set<AffordanceId> ids;
    for (const auto& a : next.affordances.structured)
    {
        if (!ids.insert(a.affordance_id).second)
            throw Error(ErrorKind::SchemaViolation, "duplicate affordance id " + a.affordance_id);
        if (find_node(next.view, a.anchor_node) == nullptr)
            throw Error(ErrorKind::DanglingNodeRef, "affordance " + a.affordance_id + " anchored to " + a.anchor_node);
    }
    apply_context_ops(next.context, delta.context_ops);
    return next;
}

} // namespace

const env::Record* AgentContext::find(const env::RecordRef& ref) const
{
    auto it = std::find_if(retrieved.begin(), retrieved.end(), [&](const env::Record& r) { return r.ref == ref; });
    return it == retrieved.end() ? nullptr : &*it;
}

AppState AppState::empty(AppId app_id, Timestamp created_at)
{
    AppState s;
    s.app_id = std::move(app_id);
    s.view.node_id = "root";
    s.view.kind = NodeKind::panel;
    s.created_at = created_at;
    return s;
}

TransitionResult apply_delta(const AppState& state, const Delta& delta, std::optional<Timestamp> at)
{
    check_delta_shape(delta);
    switch (delta.strategy)
    {
    case Strategy::text_reply:
        return TextReply{*delta.reply_text};
    case Strategy::app_replacement:
        return NewAppRequest{*delta.replacement_seed};
    case Strategy::element_update:
    case Strategy::structural_extension:
        break;
    }
    AppState next = transform(state, delta, delta.strategy);
    next.state_seq = state.state_seq + 1;
    next.content_rev = 0;
    next.created_at = at.value_or(state.created_at);
    next.affordances.nl_enabled = true;
    return next;
}

AppState apply_initial(const AppState& empty, const Delta& delta)
{
    check_delta_shape(delta);
    if (delta.strategy != Strategy::app_replacement)
        throw Error(ErrorKind::StrategyViolation, "cold start must be an app_replacement construction");
    AppState s = transform(empty, delta, Strategy::structural_extension);
    s.content_rev = 0;
    s.affordances.nl_enabled = true;
    return s;
}

const ViewNode* find_node(const ViewNode& root, const NodeId& id)
{
    if (root.node_id == id)
        return &root;
    for (const auto& child : root.children)
        if (const auto* found = find_node(child, id))
            return found;
    return nullptr;
}

void visit(const ViewNode& root, const std::function<void(const ViewNode&, std::size_t)>& fn)
{
    std::function<void(const ViewNode&, std::size_t)> walk = [&](const ViewNode& node, std::size_t depth) {
        fn(node, depth);
        for (const auto& child : node.children)
            walk(child, depth + 1);
    };
    walk(root, 0);
}

std::vector<NodeId> collect_ids(const ViewNode& root)
{
    std::vector<NodeId> ids;
    visit(root, [&](const ViewNode& n, std::size_t) { ids.push_back(n.node_id); });
    return ids;
}

std::size_t tree_levels(const ViewNode& root)
{
    std::size_t levels = 0;
    visit(root, [&](const ViewNode&, std::size_t depth) { levels = std::max(levels, depth + 1); });
    return levels;
}

std::vector<UngroundedProp> find_ungrounded_props(const ViewNode& root, const AgentContext& context,
                                                  const GroundingOptions& options)
{
    std::vector<UngroundedProp> out;
    visit(root, [&](const ViewNode& node, std::size_t) {
        if (node.props.value("derived", false))
            return;
        std::vector<const Json*> cited;
        for (const auto& ref : node.source_refs)
            if (const auto* record = context.find(ref))
                cited.push_back(&record->payload);

        for (const auto& [key, value] : node.props.items())
        {
            if (key == "derived")
                continue;
            const bool is_field = std::any_of(cited.begin(), cited.end(), [&](const Json* p) { return p->contains(key); });
            if (is_field)
            {
                const bool matches = std::any_of(cited.begin(), cited.end(), [&](const Json* p) {
                    auto it = p->find(key);
                    return it != p->end() && *it == value;
                });
                if (!matches)
                    out.push_back({node.node_id, key, "value differs from every cited record"});
            }
            else if (value.is_number() && !options.presentational_numeric_keys.contains(key))
            {
                const bool appears = std::any_of(cited.begin(), cited.end(), [&](const Json* p) {
                    return std::any_of(p->begin(), p->end(), [&](const Json& v) { return v == value; });
                });
                if (!appears)
                    out.push_back({node.node_id, key, "numeric value not present in any cited record"});
            }
        }
    });
    return out;
}

std::vector<Violation> validate_state(const AppState& state)
{
    std::vector<Violation> out;
    std::set<NodeId> ids;

    std::function<void(const ViewNode&, const ViewNode*)> walk = [&](const ViewNode& node, const ViewNode* parent) {
        if (node.node_id.empty())
            out.push_back({ViolationKind::EmptyId, "", "node with empty id"});
        else if (!ids.insert(node.node_id).second)
            out.push_back({ViolationKind::DuplicateNodeId, node.node_id, "node id appears more than once"});
        if (node.kind == NodeKind::tab && (parent == nullptr || parent->kind != NodeKind::tab_group))
            out.push_back({ViolationKind::TabOutsideTabGroup, node.node_id, "tab must be a child of a tab_group"});
        for (const auto& ref : node.source_refs)
            if (state.context.find(ref) == nullptr)
                out.push_back({ViolationKind::UnresolvableSourceRef, node.node_id, env::to_string(ref) + " not in context"});
        for (const auto& child : node.children)
            walk(child, &node);
    };
    walk(state.view, nullptr);

    if (!state.affordances.nl_enabled)
        out.push_back({ViolationKind::NLChannelDisabled, "", "natural language channel must stay enabled"});

    std::set<AffordanceId> affordance_ids;
    for (const auto& a : state.affordances.structured)
    {
        if (!affordance_ids.insert(a.affordance_id).second)
            out.push_back({ViolationKind::DuplicateAffordanceId, a.affordance_id, "affordance id appears more than once"});
        if (!ids.contains(a.anchor_node))
            out.push_back({ViolationKind::DanglingAffordanceAnchor, a.affordance_id, "anchor " + a.anchor_node + " missing"});
        if (a.resolved_params)
            for (const auto& [key, _] : a.resolved_params->items())
                if (!a.param_schema.contains(key))
                    out.push_back({ViolationKind::ResolvedParamOutsideSchema, a.affordance_id, "param " + key + " not in schema"});
    }
    for (const auto& a : state.affordances.anticipatory)
        if (!affordance_ids.insert(a.affordance_id).second)
            out.push_back({ViolationKind::DuplicateAffordanceId, a.affordance_id, "affordance id appears more than once"});

    for (const auto& u : find_ungrounded_props(state.view, state.context))
        out.push_back({ViolationKind::UngroundedScalar, u.node_id, u.key + ": " + u.reason});
    return out;
}

ViewDiff diff_view(const ViewNode& old_view, const ViewNode& new_view)
{
    std::map<NodeId, const ViewNode*> before;
    std::map<NodeId, const ViewNode*> after;
    visit(old_view, [&](const ViewNode& n, std::size_t) { before.emplace(n.node_id, &n); });
    visit(new_view, [&](const ViewNode& n, std::size_t) { after.emplace(n.node_id, &n); });

    ViewDiff diff;
    for (const auto& [id, node] : before)
    {
        auto it = after.find(id);
        if (it == after.end())
            diff.removed_ids.insert(id);
        else if (node->kind != it->second->kind || node->props != it->second->props || node->source_refs != it->second->source_refs)
            diff.mutated_ids.insert(id);
        else
            diff.preserved_ids.insert(id);
    }
    for (const auto& [id, _] : after)
        if (!before.contains(id))
            diff.added_ids.insert(id);
    return diff;
}

std::uint64_t view_hash(const ViewNode& view)
{
    const auto text = canonical(Json(view));
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

} // namespace sac::core
