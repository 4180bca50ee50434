#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sac/core/types.hpp"
#include "sac/intent/types.hpp"

namespace sac::intent
{

// One cold-start rule. Exactly one target is set: a structured category, a
// boundary class, or plain-text routing (greetings, small talk).
struct Rule
{
    std::string pattern; // normalized phrase, matched on word boundaries
    std::optional<Category> category;
    std::optional<Boundary> boundary;
    bool plain_text = false;
    double weight = 1.0;
    std::vector<env::QuerySpec> requires_data;
};

// Evolution-time rule: a phrase that signals the trajectory of an NL event.
struct EvolutionRule
{
    std::string pattern;
    Hint hint = Hint::converge;
    double weight = 1.0;
};

struct RuleTable
{
    std::vector<Rule> rules;
    std::vector<EvolutionRule> evolution;

    static RuleTable from_json(const nlohmann::json& doc);
    static RuleTable load(const std::filesystem::path& file);
};

// Lower-cases, maps every non-alphanumeric byte to a space and collapses runs;
// the result is padded with one space on each side.
std::string normalize(std::string_view text);

// True when `phrase` occurs in `text` on word boundaries.
bool contains_phrase(std::string_view text, std::string_view phrase);

IntentAssessment assess_cold_start(const RuleTable& table, std::string_view utterance);

struct InterpretedEvent
{
    core::Event source;
    std::string resolved_intent;
    bool references_visible_data = false;
    Hint hint = Hint::converge;
    // Cold-start assessment of the utterance when it names an unrelated task.
    std::optional<IntentAssessment> assessment;
    // Parameters after merging the affordance's pre-bound values with the event.
    nlohmann::json effective_params = nlohmann::json::object();

    bool operator==(const InterpretedEvent&) const = default;
};

// Throws UnknownAffordance for a structured event naming a missing affordance,
// StaleEvent when the event's basis is not the state's sequence number.
InterpretedEvent interpret_event(const RuleTable& table, const core::Event& event, const core::AppState& state);

} // namespace sac::intent
