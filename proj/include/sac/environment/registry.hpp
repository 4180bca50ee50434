#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sac/environment/types.hpp"

namespace sac::env
{

// One scripted effect of a write action on a dataset record. String values of
// the form "$name" in `set` are replaced by the action parameter `name`;
// "{name}" in `record` is interpolated the same way.
struct WriteEffect
{
    std::string record;
    Json set = Json::object();
    bool create = false;
};

struct WriteAction
{
    std::string name;
    std::string dataset;
    std::string detail;
    std::vector<std::string> required_params;
    std::vector<WriteEffect> effects;
};

// The environment participant: named datasets of versioned, immutable record
// payloads plus scripted write actions. Queries take a shared lock, writes an
// exclusive one.
class Registry
{
public:
    Registry() = default;
    Registry(const Registry& other);
    Registry& operator=(const Registry& other);

    // Loads one fixture file: {"dataset", "records": [{"id","fields"}], "actions": [...]}.
    void load_file(const std::filesystem::path& file);
    // Loads every *.json fixture in `dir` (sorted by file name).
    void load_directory(const std::filesystem::path& dir);

    void add_dataset(const std::string& name, const std::map<std::string, Json>& records = {});
    void add_action(WriteAction action);
    // Drops a dataset and every version it held.
    void remove_dataset(const std::string& name);

    bool has_source(const std::string& name) const;
    std::vector<std::string> sources() const;

    std::vector<Record> execute_query(const QuerySpec& query) const;
    WriteResult execute_write(const std::string& action, const Json& params);
    std::map<RecordRef, std::int64_t> current_versions(const std::vector<RecordRef>& refs) const;

    // Payload of an exact (source, record_id, version) triple, if retained.
    std::optional<Json> resolve(const RecordRef& ref) const;

private:
    struct Dataset
    {
        // record_id -> payload per version (index 0 = version 1)
        std::map<std::string, std::vector<Json>> records;
    };

    mutable std::shared_mutex mutex_;
    std::map<std::string, Dataset> datasets_;
    std::map<std::string, WriteAction> actions_;
};

// Evaluates a single predicate clause; throws BadPredicate for an unknown op
// or an operand the op cannot compare.
bool matches(const Condition& condition, const Json* field_value);

} // namespace sac::env
