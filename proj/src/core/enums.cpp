#include <array>
#include <string_view>
#include <utility>

#include "sac/agent/plan.hpp"
#include "sac/core/state.hpp"
#include "sac/core/types.hpp"
#include "sac/error.hpp"
#include "sac/intent/types.hpp"

namespace sac
{
namespace
{

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) noexcept
{
    for (const auto& [e, name] : table)
        if (e == value)
            return name;
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> parse_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s)
{
    for (const auto& [e, name] : table)
        if (name == s)
            return e;
    return std::nullopt;
}

constexpr std::array<std::pair<ErrorKind, std::string_view>, 17> kErrorKinds{{
    {ErrorKind::DanglingNodeRef, "DanglingNodeRef"},
    {ErrorKind::StrategyViolation, "StrategyViolation"},
    {ErrorKind::SchemaViolation, "SchemaViolation"},
    {ErrorKind::DecodeError, "DecodeError"},
    {ErrorKind::UnknownAffordance, "UnknownAffordance"},
    {ErrorKind::UnknownSource, "UnknownSource"},
    {ErrorKind::BadPredicate, "BadPredicate"},
    {ErrorKind::UnknownAction, "UnknownAction"},
    {ErrorKind::ScriptMiss, "ScriptMiss"},
    {ErrorKind::SeqConflict, "SeqConflict"},
    {ErrorKind::PipelineFault, "PipelineFault"},
    {ErrorKind::StaleEvent, "StaleEvent"},
    {ErrorKind::NoApp, "NoApp"},
    {ErrorKind::NoSession, "NoSession"},
    {ErrorKind::AssertionFailed, "AssertionFailed"},
    {ErrorKind::ConfigError, "ConfigError"},
    {ErrorKind::IoError, "IoError"},
}};

constexpr std::array<std::pair<Stage, std::string_view>, 6> kStages{{
    {Stage::intent, "intent"},
    {Stage::environment, "environment"},
    {Stage::agent, "agent"},
    {Stage::transition, "transition"},
    {Stage::qa, "qa"},
    {Stage::store, "store"},
}};

} // namespace

std::string_view to_string(ErrorKind kind) noexcept { return name_of(kErrorKinds, kind); }
std::string_view to_string(Stage stage) noexcept { return name_of(kStages, stage); }

namespace intent
{
namespace
{
constexpr std::array<std::pair<Modality, std::string_view>, 2> kModalities{{
    {Modality::structured_app, "structured_app"},
    {Modality::plain_text, "plain_text"},
}};
constexpr std::array<std::pair<Category, std::string_view>, 5> kCategories{{
    {Category::selection, "selection"},
    {Category::exploration, "exploration"},
    {Category::execution, "execution"},
    {Category::monitoring, "monitoring"},
    {Category::creation, "creation"},
}};
constexpr std::array<std::pair<Boundary, std::string_view>, 2> kBoundaries{{
    {Boundary::socio_emotional, "socio_emotional"},
    {Boundary::pre_structural, "pre_structural"},
}};
constexpr std::array<std::pair<Hint, std::string_view>, 3> kHints{{
    {Hint::converge, "converge"},
    {Hint::diverge, "diverge"},
    {Hint::replace, "replace"},
}};
} // namespace

std::string_view to_string(Modality m) noexcept { return name_of(kModalities, m); }
std::string_view to_string(Category c) noexcept { return name_of(kCategories, c); }
std::string_view to_string(Boundary b) noexcept { return name_of(kBoundaries, b); }
std::string_view to_string(Hint h) noexcept { return name_of(kHints, h); }
std::optional<Modality> parse_modality(std::string_view s) { return parse_of(kModalities, s); }
std::optional<Category> parse_category(std::string_view s) { return parse_of(kCategories, s); }
std::optional<Boundary> parse_boundary(std::string_view s) { return parse_of(kBoundaries, s); }
std::optional<Hint> parse_hint(std::string_view s) { return parse_of(kHints, s); }
} // namespace intent

namespace agent
{
namespace
{
constexpr std::array<std::pair<Architecture, std::string_view>, 5> kArchitectures{{
    {Architecture::parallel_items, "parallel_items"},
    {Architecture::hierarchical_progressive, "hierarchical_progressive"},
    {Architecture::sequential_steps, "sequential_steps"},
    {Architecture::dashboard_metrics, "dashboard_metrics"},
    {Architecture::editable_workspace, "editable_workspace"},
}};
} // namespace

std::string_view to_string(Architecture a) noexcept { return name_of(kArchitectures, a); }
std::optional<Architecture> parse_architecture(std::string_view s) { return parse_of(kArchitectures, s); }
} // namespace agent

namespace core
{
namespace
{
constexpr std::array<std::pair<NodeKind, std::string_view>, 14> kNodeKinds{{
    {NodeKind::text, "text"},
    {NodeKind::heading, "heading"},
    {NodeKind::badge, "badge"},
    {NodeKind::card, "card"},
    {NodeKind::table, "table"},
    {NodeKind::tab_group, "tab_group"},
    {NodeKind::tab, "tab"},
    {NodeKind::panel, "panel"},
    {NodeKind::list, "list"},
    {NodeKind::map_view, "map_view"},
    {NodeKind::stepper, "stepper"},
    {NodeKind::checklist, "checklist"},
    {NodeKind::image_ref, "image_ref"},
    {NodeKind::metric, "metric"},
}};
constexpr std::array<std::pair<Verb, std::string_view>, 6> kVerbs{{
    {Verb::filter, "filter"},
    {Verb::sort, "sort"},
    {Verb::select, "select"},
    {Verb::toggle_view, "toggle_view"},
    {Verb::expand, "expand"},
    {Verb::trigger_action, "trigger_action"},
}};
constexpr std::array<std::pair<Strategy, std::string_view>, 4> kStrategies{{
    {Strategy::element_update, "element_update"},
    {Strategy::structural_extension, "structural_extension"},
    {Strategy::app_replacement, "app_replacement"},
    {Strategy::text_reply, "text_reply"},
}};
constexpr std::array<std::pair<ViolationKind, std::string_view>, 9> kViolations{{
    {ViolationKind::DuplicateNodeId, "DuplicateNodeId"},
    {ViolationKind::TabOutsideTabGroup, "TabOutsideTabGroup"},
    {ViolationKind::DanglingAffordanceAnchor, "DanglingAffordanceAnchor"},
    {ViolationKind::DuplicateAffordanceId, "DuplicateAffordanceId"},
    {ViolationKind::NLChannelDisabled, "NLChannelDisabled"},
    {ViolationKind::ResolvedParamOutsideSchema, "ResolvedParamOutsideSchema"},
    {ViolationKind::UnresolvableSourceRef, "UnresolvableSourceRef"},
    {ViolationKind::UngroundedScalar, "UngroundedScalar"},
    {ViolationKind::EmptyId, "EmptyId"},
}};
} // namespace

std::string_view to_string(NodeKind k) noexcept { return name_of(kNodeKinds, k); }
std::optional<NodeKind> parse_node_kind(std::string_view s) { return parse_of(kNodeKinds, s); }
std::string_view to_string(Verb v) noexcept { return name_of(kVerbs, v); }
std::optional<Verb> parse_verb(std::string_view s) { return parse_of(kVerbs, s); }
std::string_view to_string(Strategy s) noexcept { return name_of(kStrategies, s); }
std::optional<Strategy> parse_strategy(std::string_view s) { return parse_of(kStrategies, s); }
std::string_view to_string(ViolationKind k) noexcept { return name_of(kViolations, k); }
} // namespace core

} // namespace sac
