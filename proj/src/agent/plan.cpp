#include "sac/agent/plan.hpp"

#include "sac/error.hpp"

namespace sac::agent
{

Architecture architecture_for(intent::Category category) noexcept
{
    switch (category)
    {
    case intent::Category::selection:
        return Architecture::parallel_items;
    case intent::Category::exploration:
        return Architecture::hierarchical_progressive;
    case intent::Category::execution:
        return Architecture::sequential_steps;
    case intent::Category::monitoring:
        return Architecture::dashboard_metrics;
    case intent::Category::creation:
        return Architecture::editable_workspace;
    }
    return Architecture::parallel_items;
}

GenerationPlan make_plan(const intent::IntentAssessment& assessment)
{
    if (!assessment.category)
        throw Error(ErrorKind::SchemaViolation, "generation plan needs an intent category");
    return GenerationPlan{assessment, architecture_for(*assessment.category), assessment.data_requirements};
}

} // namespace sac::agent
