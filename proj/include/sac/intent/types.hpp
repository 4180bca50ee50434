#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sac/environment/types.hpp"

namespace sac::intent
{

enum class Modality
{
    structured_app,
    plain_text,
};

enum class Category
{
    selection,
    exploration,
    execution,
    monitoring,
    creation,
};

enum class Boundary
{
    socio_emotional,
    pre_structural,
};

enum class Hint
{
    converge,
    diverge,
    replace,
};

std::string_view to_string(Modality m) noexcept;
std::string_view to_string(Category c) noexcept;
std::string_view to_string(Boundary b) noexcept;
std::string_view to_string(Hint h) noexcept;

std::optional<Modality> parse_modality(std::string_view s);
std::optional<Category> parse_category(std::string_view s);
std::optional<Boundary> parse_boundary(std::string_view s);
std::optional<Hint> parse_hint(std::string_view s);

struct IntentAssessment
{
    Modality modality = Modality::plain_text;
    // Absent when nothing in the rule table fired for a structured category.
    std::optional<Category> category;
    double confidence = 0.0;
    std::optional<Boundary> boundary_flag;
    std::vector<env::QuerySpec> data_requirements;

    bool operator==(const IntentAssessment&) const = default;
};

} // namespace sac::intent
