#include <algorithm>
#include <set>

#include "sac/agent/backend.hpp"
#include "sac/core/state.hpp"

namespace sac::agent
{

std::string_view to_string(Compatibility c) noexcept
{
    switch (c)
    {
    case Compatibility::same_shape:
        return "same_shape";
    case Compatibility::new_facet:
        return "new_facet";
    case Compatibility::unrelated:
        return "unrelated";
    }
    return "?";
}

Compatibility assess_compatibility(const core::ViewNode& view, const std::vector<env::Record>& new_data)
{
    std::set<std::string> incoming;
    for (const auto& r : new_data)
        for (const auto& [key, _] : r.payload.items())
            incoming.insert(key);
    if (incoming.empty())
        return Compatibility::same_shape;

    bool overlap = false;
    bool equal = false;
    core::visit(view, [&](const core::ViewNode& node, std::size_t) {
        std::set<std::string> rendered;
        for (const auto& child : node.children)
        {
            if (child.source_refs.empty())
                continue;
            for (const auto& [key, _] : child.props.items())
                if (key != "derived")
                    rendered.insert(key);
        }
        if (rendered.empty())
            return;
        if (rendered == incoming)
            equal = true;
        else if (std::any_of(incoming.begin(), incoming.end(), [&](const std::string& f) { return rendered.contains(f); }))
            overlap = true;
    });
    if (equal)
        return Compatibility::same_shape;
    return overlap ? Compatibility::new_facet : Compatibility::unrelated;
}

core::Strategy select_strategy(intent::Hint hint, Compatibility compat) noexcept
{
    if (hint == intent::Hint::replace)
        return core::Strategy::app_replacement;
    if (hint == intent::Hint::converge && compat == Compatibility::same_shape)
        return core::Strategy::element_update;
    return core::Strategy::structural_extension;
}

} // namespace sac::agent
