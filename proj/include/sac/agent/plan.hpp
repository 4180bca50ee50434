#pragma once

#include <string_view>
#include <optional>
#include <vector>

#include "sac/environment/types.hpp"
#include "sac/intent/types.hpp"

namespace sac::agent
{

enum class Architecture
{
    parallel_items,
    hierarchical_progressive,
    sequential_steps,
    dashboard_metrics,
    editable_workspace,
};

std::string_view to_string(Architecture a) noexcept;
std::optional<Architecture> parse_architecture(std::string_view s);

// Intent category -> information architecture, one row per category.
Architecture architecture_for(intent::Category category) noexcept;

struct GenerationPlan
{
    intent::IntentAssessment assessment;
    Architecture architecture = Architecture::parallel_items;
    std::vector<env::QuerySpec> queries;

    bool operator==(const GenerationPlan&) const = default;
};

// Builds a plan whose architecture follows the category and whose queries are
// the assessment's data requirements. Requires assessment.category.
GenerationPlan make_plan(const intent::IntentAssessment& assessment);

} // namespace sac::agent
