#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sac::env
{

using Json = nlohmann::json;

// A single predicate clause: `field <op> value`.
// Supported ops: eq, ne, lt, le, gt, ge, contains.
struct Condition
{
    std::string op;
    Json value;

    bool operator==(const Condition&) const = default;
};

struct QuerySpec
{
    std::string source;
    std::map<std::string, Condition> predicate;
    std::vector<std::string> projection; // empty = every field
    std::optional<std::int64_t> limit;

    bool operator==(const QuerySpec&) const = default;
};

struct RecordRef
{
    std::string source;
    std::string record_id;
    std::int64_t version = 0;

    auto operator<=>(const RecordRef&) const = default;
    bool operator==(const RecordRef&) const = default;
};

std::string to_string(const RecordRef& ref);

// A retrieved record: reference plus the (projected) payload object.
struct Record
{
    RecordRef ref;
    Json payload = Json::object();

    bool operator==(const Record&) const = default;
};

enum class WriteStatus
{
    ok,
    rejected,
};

struct WriteResult
{
    WriteStatus status = WriteStatus::ok;
    std::string detail;
    std::vector<RecordRef> resulting_refs;

    bool operator==(const WriteResult&) const = default;
};

} // namespace sac::env
