#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sac/core/types.hpp"
#include "sac/environment/registry.hpp"

namespace sac::qa
{

using Json = nlohmann::json;

enum class FindingClass
{
    runnability,
    fidelity_accuracy,
    fidelity_richness,
    architecture,
};

enum class Severity
{
    error,
    warn,
};

std::string_view to_string(FindingClass c) noexcept;
std::string_view to_string(Severity s) noexcept;

struct Finding
{
    FindingClass cls;
    Severity severity;
    std::string locus; // node or affordance id
    std::string message;

    bool operator==(const Finding&) const = default;
};

enum class Verdict
{
    pass,
    fail,
};

struct QaReport
{
    Verdict verdict = Verdict::pass;
    std::vector<Finding> findings;

    bool operator==(const QaReport&) const = default;
    bool has(FindingClass cls, Severity severity) const;
};

// Calibration constants. Depth counts tree levels, the root alone being 1.
struct QaConfig
{
    std::size_t max_flat_children = 25;
    std::size_t max_depth = 8;
    std::size_t min_fields_per_record = 2;
    std::set<std::string> presentational_numeric_keys{"level", "index", "columns", "zoom", "span"};

    // Overrides any of the above present in `doc`; unknown keys are rejected.
    static QaConfig from_json(const Json& doc);
};

std::vector<Finding> check_runnability(const core::AppState& state, const env::Registry& env);
std::vector<Finding> check_fidelity(const core::AppState& state, const QaConfig& config = {});
std::vector<Finding> lint_architecture(const core::AppState& state, const QaConfig& config = {});

QaReport gate(const core::AppState& state, const env::Registry& env, const QaConfig& config = {});

Json to_json(const QaReport& report);

} // namespace sac::qa
