#include "sac/intent/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sac/core/codec.hpp"
#include "sac/core/state.hpp"
#include "sac/error.hpp"

namespace sac::intent
{
namespace
{

using nlohmann::json;

void merge_requirement(std::vector<env::QuerySpec>& out, const env::QuerySpec& q)
{
    auto it = std::find_if(out.begin(), out.end(), [&](const env::QuerySpec& e) { return e.source == q.source; });
    if (it == out.end())
    {
        out.push_back(q);
        return;
    }
    for (const auto& [field, condition] : q.predicate)
        it->predicate.emplace(field, condition);
    for (const auto& f : q.projection)
        if (std::find(it->projection.begin(), it->projection.end(), f) == it->projection.end())
            it->projection.push_back(f);
}

std::string params_text(const json& params)
{
    std::string out;
    for (const auto& [key, value] : params.items())
    {
        out += ' ';
        out += key;
        out += '=';
        out += value.is_string() ? value.get<std::string>() : value.dump();
    }
    return out;
}

// Every string prop in the view, normalized.
std::vector<std::string> visible_phrases(const core::AppState& state)
{
    std::vector<std::string> phrases;
    core::visit(state.view, [&](const core::ViewNode& node, std::size_t) {
        for (const auto& [_, value] : node.props.items())
            if (value.is_string())
                phrases.push_back(normalize(value.get<std::string>()));
    });
    for (const auto& [_, value] : state.context.preferences.items())
        if (value.is_string())
            phrases.push_back(normalize(value.get<std::string>()));
    return phrases;
}

bool subtree_has_data(const core::ViewNode& node)
{
    if (!node.source_refs.empty())
        return true;
    return std::any_of(node.children.begin(), node.children.end(), subtree_has_data);
}

std::set<std::string> current_sources(const core::AppState& state)
{
    std::set<std::string> out;
    for (const auto& r : state.context.retrieved)
        out.insert(r.ref.source);
    return out;
}

} // namespace

std::string normalize(std::string_view text)
{
    std::string out = " ";
    for (unsigned char c : text)
    {
        if (std::isalnum(c) || c >= 0x80)
            out += static_cast<char>(std::tolower(c));
        else if (out.back() != ' ')
            out += ' ';
    }
    if (out.back() != ' ')
        out += ' ';
    return out;
}

bool contains_phrase(std::string_view text, std::string_view phrase)
{
    const auto needle = normalize(phrase);
    if (needle.size() <= 2)
        return false;
    const auto haystack = text.starts_with(' ') ? std::string(text) : normalize(text);
    return haystack.find(needle) != std::string::npos;
}

RuleTable RuleTable::from_json(const json& doc)
{
    RuleTable table;
    try
    {
        for (const auto& r : doc.value("rules", json::array()))
        {
            Rule rule;
            rule.pattern = r.at("pattern").get<std::string>();
            rule.weight = r.value("weight", 1.0);
            int targets = 0;
            if (r.contains("category"))
            {
                rule.category = parse_category(r.at("category").get<std::string>());
                if (!rule.category)
                    throw Error(ErrorKind::ConfigError, "unknown category in rule '" + rule.pattern + "'");
                ++targets;
            }
            if (r.contains("boundary"))
            {
                rule.boundary = parse_boundary(r.at("boundary").get<std::string>());
                if (!rule.boundary)
                    throw Error(ErrorKind::ConfigError, "unknown boundary in rule '" + rule.pattern + "'");
                ++targets;
            }
            if (r.value("modality", std::string{}) == "plain_text")
            {
                rule.plain_text = true;
                ++targets;
            }
            if (targets != 1)
                throw Error(ErrorKind::ConfigError, "rule '" + rule.pattern + "' needs exactly one target");
            rule.requires_data = r.value("requires", std::vector<env::QuerySpec>{});
            table.rules.push_back(std::move(rule));
        }
        for (const auto& r : doc.value("evolution", json::array()))
        {
            EvolutionRule rule;
            rule.pattern = r.at("pattern").get<std::string>();
            auto hint = parse_hint(r.at("hint").get<std::string>());
            if (!hint)
                throw Error(ErrorKind::ConfigError, "unknown hint in evolution rule '" + rule.pattern + "'");
            rule.hint = *hint;
            rule.weight = r.value("weight", 1.0);
            table.evolution.push_back(std::move(rule));
        }
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, std::string("rule table: ") + e.what());
    }
    return table;
}

RuleTable RuleTable::load(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read rule table " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(core::parse_document(buffer.str()));
}

IntentAssessment assess_cold_start(const RuleTable& table, std::string_view utterance)
{
    const auto text = normalize(utterance);
    if (text.find_first_not_of(' ') == std::string::npos)
        throw Error(ErrorKind::SchemaViolation, "empty utterance");

    double total = 0.0;
    double plain = 0.0;
    const Rule* boundary = nullptr;
    std::map<Category, double> scores;
    std::vector<Category> first_seen;
    std::vector<const Rule*> hits;

    for (const auto& rule : table.rules)
    {
        if (!contains_phrase(text, rule.pattern))
            continue;
        hits.push_back(&rule);
        total += rule.weight;
        if (rule.boundary)
        {
            if (boundary == nullptr || rule.weight > boundary->weight)
                boundary = &rule;
        }
        else if (rule.plain_text)
            plain += rule.weight;
        else
        {
            if (!scores.contains(*rule.category))
                first_seen.push_back(*rule.category);
            scores[*rule.category] += rule.weight;
        }
    }

    IntentAssessment out;
    if (hits.empty() || total <= 0.0)
        return out; // plain_text, confidence 0

    if (boundary != nullptr)
    {
        out.boundary_flag = boundary->boundary;
        out.confidence = boundary->weight / total;
        return out;
    }

    std::optional<Category> best;
    double best_score = 0.0;
    for (auto c : first_seen)
        if (!best || scores[c] > best_score)
        {
            best = c;
            best_score = scores[c];
        }

    if (!best || plain >= best_score)
    {
        out.confidence = plain / total;
        return out;
    }

    out.modality = Modality::structured_app;
    out.category = best;
    out.confidence = best_score / total;
    for (const auto* rule : hits)
        if (rule->category == best)
            for (const auto& q : rule->requires_data)
                merge_requirement(out.data_requirements, q);
    return out;
}

InterpretedEvent interpret_event(const RuleTable& table, const core::Event& event, const core::AppState& state)
{
    if (event.basis_state_seq != state.state_seq)
        throw Error(ErrorKind::StaleEvent, "event acted on state " + std::to_string(event.basis_state_seq) +
                                               ", current is " + std::to_string(state.state_seq));
    InterpretedEvent out;
    out.source = event;

    if (const auto* structured = std::get_if<core::StructuredPayload>(&event.payload))
    {
        const auto& list = state.affordances.structured;
        auto it = std::find_if(list.begin(), list.end(),
                               [&](const core::StructuredAffordance& a) { return a.affordance_id == structured->affordance_id; });
        if (it == list.end())
            throw Error(ErrorKind::UnknownAffordance, structured->affordance_id);

        out.effective_params = it->resolved_params.value_or(json::object());
        for (const auto& [key, value] : structured->params.items())
            out.effective_params[key] = value;

        out.resolved_intent = std::string(core::to_string(it->verb)) + " " + it->affordance_id + params_text(out.effective_params);
        const auto* anchor = core::find_node(state.view, it->anchor_node);
        out.references_visible_data = anchor != nullptr && subtree_has_data(*anchor);
        out.hint = it->verb == core::Verb::trigger_action ? Hint::diverge : Hint::converge;
        return out;
    }

    const auto& nl = std::get<core::NlPayload>(event.payload);
    const auto text = normalize(nl.text);
    out.resolved_intent = (nl.via_anticipatory ? "anticipatory " + *nl.via_anticipatory + ":" : std::string("nl:")) + text;

    const auto phrases = visible_phrases(state);
    out.references_visible_data = std::any_of(phrases.begin(), phrases.end(), [&](const std::string& p) {
        return p.size() >= 6 && text.find(p) != std::string::npos;
    });

    const EvolutionRule* chosen = nullptr;
    for (const auto& rule : table.evolution)
        if (contains_phrase(text, rule.pattern) && (chosen == nullptr || rule.weight > chosen->weight))
            chosen = &rule;

    if (chosen != nullptr && chosen->hint != Hint::replace)
    {
        out.hint = chosen->hint;
        return out;
    }
    if (chosen != nullptr)
    {
        auto assessment = assess_cold_start(table, nl.text);
        if (assessment.modality == Modality::structured_app)
        {
            out.hint = Hint::replace;
            out.assessment = std::move(assessment);
        }
        else
            out.hint = Hint::diverge;
        return out;
    }
    if (out.references_visible_data)
    {
        out.hint = Hint::converge;
        return out;
    }

    auto assessment = assess_cold_start(table, nl.text);
    if (assessment.modality == Modality::structured_app && !assessment.data_requirements.empty())
    {
        const auto mine = current_sources(state);
        const bool disjoint = std::none_of(assessment.data_requirements.begin(), assessment.data_requirements.end(),
                                           [&](const env::QuerySpec& q) { return mine.contains(q.source); });
        if (disjoint)
        {
            out.hint = Hint::replace;
            out.assessment = std::move(assessment);
            return out;
        }
    }
    out.hint = Hint::diverge;
    return out;
}

} // namespace sac::intent
