#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sac/core/types.hpp"
#include "sac/environment/types.hpp"
#include "sac/intent/types.hpp"
#include "sac/agent/plan.hpp"

// JSON mapping for every domain type. The canonical text format is the
// compact dump of these documents; objects keep keys in lexicographic order.

namespace sac::env
{
void to_json(Json& j, const Condition& c);
void from_json(const Json& j, Condition& c);
void to_json(Json& j, const QuerySpec& q);
void from_json(const Json& j, QuerySpec& q);
void to_json(Json& j, const RecordRef& r);
void from_json(const Json& j, RecordRef& r);
void to_json(Json& j, const Record& r);
void from_json(const Json& j, Record& r);
void to_json(Json& j, const WriteResult& w);
} // namespace sac::env

namespace sac::intent
{
void to_json(nlohmann::json& j, const IntentAssessment& a);
void from_json(const nlohmann::json& j, IntentAssessment& a);
} // namespace sac::intent

namespace sac::agent
{
void to_json(nlohmann::json& j, const GenerationPlan& p);
void from_json(const nlohmann::json& j, GenerationPlan& p);
} // namespace sac::agent

namespace sac::core
{
void to_json(Json& j, const ViewNode& n);
void from_json(const Json& j, ViewNode& n);
void to_json(Json& j, const ParamSpec& p);
void from_json(const Json& j, ParamSpec& p);
void to_json(Json& j, const StructuredAffordance& a);
void from_json(const Json& j, StructuredAffordance& a);
void to_json(Json& j, const AnticipatoryAffordance& a);
void from_json(const Json& j, AnticipatoryAffordance& a);
void to_json(Json& j, const AffordanceSet& a);
void from_json(const Json& j, AffordanceSet& a);
void to_json(Json& j, const HistoryEntry& h);
void from_json(const Json& j, HistoryEntry& h);
void to_json(Json& j, const AgentContext& c);
void from_json(const Json& j, AgentContext& c);
void to_json(Json& j, const AppState& s);
void from_json(const Json& j, AppState& s);
void to_json(Json& j, const Event& e);
void from_json(const Json& j, Event& e);
void to_json(Json& j, const NodeOp& op);
void from_json(const Json& j, NodeOp& op);
void to_json(Json& j, const Delta& d);
void from_json(const Json& j, Delta& d);

inline constexpr std::string_view kStateFormat = "sac.state/1";

// Canonical serialization of a state.
std::string serialize_state(const AppState& state);

// Throws DecodeError carrying the byte offset of the failure (0 for schema
// errors detected after a successful parse).
AppState deserialize_state(std::string_view bytes);

// Parses any JSON document, mapping syntax errors to DecodeError.
Json parse_document(std::string_view bytes);

std::string canonical(const Json& doc);

} // namespace sac::core
