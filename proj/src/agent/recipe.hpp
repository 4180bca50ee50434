#pragma once

// View-construction recipes: expansion of script node/op templates against
// retrieved records, event parameters and context preferences.

#include <vector>

#include "sac/agent/backend.hpp"

namespace sac::agent::recipe
{

struct Scope
{
    const env::Record* record = nullptr;
    Json params = Json::object();
    Json preferences = Json::object();
    const std::vector<env::Record>* retrieved = nullptr;
    const std::vector<env::Record>* known = nullptr; // context records
};

struct Value
{
    Json value;
    bool from_record = false;
    bool computed = false;
};

// Returns nullopt when the expression refers to something absent.
std::optional<Value> evaluate(const Json& expr, const Scope& scope);
std::string interpolate(const std::string& pattern, const Scope& scope);

std::vector<core::ViewNode> expand_node(const Json& tmpl, const Scope& scope);

// Builds node ops from op templates, applying each to a scratch copy of
// `view` so that "end" indices and existence checks see earlier ops.
std::vector<core::NodeOp> expand_ops(const Json& ops, const core::AppState& prior, const Scope& scope);

env::QuerySpec expand_query(const Json& tmpl, const Scope& scope);

} // namespace sac::agent::recipe
