#include "sac/environment/registry.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace sac::env
{
namespace
{

const std::set<std::string> kOps{"eq", "ne", "lt", "le", "gt", "ge", "contains"};

void check_condition(const std::string& field, const Condition& c)
{
    if (field.empty())
        throw Error(ErrorKind::BadPredicate, "empty field name");
    if (!kOps.contains(c.op))
        throw Error(ErrorKind::BadPredicate, "unknown operator '" + c.op + "' on " + field);
    const bool ordered = c.op == "lt" || c.op == "le" || c.op == "gt" || c.op == "ge";
    if (ordered && !c.value.is_number() && !c.value.is_string())
        throw Error(ErrorKind::BadPredicate, "operator " + c.op + " needs a number or string on " + field);
}

std::string interpolate(const std::string& pattern, const Json& params)
{
    std::string out;
    for (std::size_t i = 0; i < pattern.size(); ++i)
    {
        if (pattern[i] == '{')
        {
            const auto close = pattern.find('}', i);
            if (close != std::string::npos)
            {
                const auto key = pattern.substr(i + 1, close - i - 1);
                if (auto it = params.find(key); it != params.end())
                {
                    out += it->is_string() ? it->get<std::string>() : it->dump();
                    i = close;
                    continue;
                }
            }
        }
        out += pattern[i];
    }
    return out;
}

} // namespace

bool matches(const Condition& c, const Json* v)
{
    check_condition("field", c);
    if (v == nullptr)
        return false;
    if (c.op == "eq")
        return *v == c.value;
    if (c.op == "ne")
        return *v != c.value;
    if (c.op == "contains")
    {
        if (v->is_array())
            return std::find(v->begin(), v->end(), c.value) != v->end();
        if (v->is_string() && c.value.is_string())
            return v->get<std::string>().find(c.value.get<std::string>()) != std::string::npos;
        return false;
    }
    int cmp = 0;
    if (v->is_number() && c.value.is_number())
    {
        const double a = v->get<double>(), b = c.value.get<double>();
        cmp = a < b ? -1 : (a > b ? 1 : 0);
    }
    else if (v->is_string() && c.value.is_string())
        cmp = v->get<std::string>().compare(c.value.get<std::string>());
    else
        return false;
    if (c.op == "lt")
        return cmp < 0;
    if (c.op == "le")
        return cmp <= 0;
    if (c.op == "gt")
        return cmp > 0;
    return cmp >= 0;
}

Registry::Registry(const Registry& other)
{
    std::shared_lock lock(other.mutex_);
    datasets_ = other.datasets_;
    actions_ = other.actions_;
}

Registry& Registry::operator=(const Registry& other)
{
    if (this != &other)
    {
        std::scoped_lock lock(mutex_);
        std::shared_lock other_lock(other.mutex_);
        datasets_ = other.datasets_;
        actions_ = other.actions_;
    }
    return *this;
}

void Registry::load_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read fixture " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto doc = core::parse_document(buffer.str());
    try
    {
        const auto name = doc.at("dataset").get<std::string>();
        std::map<std::string, Json> records;
        for (const auto& r : doc.value("records", Json::array()))
        {
            const auto& fields = r.at("fields");
            if (!fields.is_object())
                throw Error(ErrorKind::ConfigError, "record fields must be an object");
            if (!records.emplace(r.at("id").get<std::string>(), fields).second)
                throw Error(ErrorKind::ConfigError, "duplicate record id in " + name);
        }
        add_dataset(name, records);
        for (const auto& a : doc.value("actions", Json::array()))
        {
            WriteAction action;
            action.name = a.at("name").get<std::string>();
            action.dataset = name;
            action.detail = a.value("detail", std::string{});
            action.required_params = a.value("required_params", std::vector<std::string>{});
            for (const auto& e : a.value("effects", Json::array()))
                action.effects.push_back({e.at("record").get<std::string>(), e.value("set", Json::object()), e.value("create", false)});
            add_action(std::move(action));
        }
    }
    catch (const Json::exception& e)
    {
        throw Error(ErrorKind::ConfigError, file.string() + ": " + e.what());
    }
}

void Registry::load_directory(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorKind::IoError, "fixture directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        load_file(f);
}

void Registry::add_dataset(const std::string& name, const std::map<std::string, Json>& records)
{
    std::scoped_lock lock(mutex_);
    auto& dataset = datasets_[name];
    dataset.records.clear();
    for (const auto& [id, payload] : records)
        dataset.records[id] = {payload};
}

void Registry::add_action(WriteAction action)
{
    std::scoped_lock lock(mutex_);
    actions_[action.name] = std::move(action);
}

void Registry::remove_dataset(const std::string& name)
{
    std::scoped_lock lock(mutex_);
    datasets_.erase(name);
}

bool Registry::has_source(const std::string& name) const
{
    std::shared_lock lock(mutex_);
    return datasets_.contains(name);
}

std::vector<std::string> Registry::sources() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : datasets_)
        out.push_back(name);
    return out;
}

std::vector<Record> Registry::execute_query(const QuerySpec& query) const
{
    for (const auto& [field, condition] : query.predicate)
        check_condition(field, condition);
    if (query.limit && *query.limit < 0)
        throw Error(ErrorKind::BadPredicate, "negative limit");

    std::shared_lock lock(mutex_);
    auto it = datasets_.find(query.source);
    if (it == datasets_.end())
        throw Error(ErrorKind::UnknownSource, query.source);

    std::vector<Record> out;
    for (const auto& [id, versions] : it->second.records) // std::map: record_id ascending
    {
        const auto& payload = versions.back();
        const bool keep = std::all_of(query.predicate.begin(), query.predicate.end(), [&](const auto& clause) {
            auto field = payload.find(clause.first);
            return matches(clause.second, field == payload.end() ? nullptr : &*field);
        });
        if (!keep)
            continue;
        Record record{{query.source, id, static_cast<std::int64_t>(versions.size())}, Json::object()};
        if (query.projection.empty())
            record.payload = payload;
        else
            for (const auto& f : query.projection)
                if (auto field = payload.find(f); field != payload.end())
                    record.payload[f] = *field;
        out.push_back(std::move(record));
        if (query.limit && static_cast<std::int64_t>(out.size()) >= *query.limit)
            break;
    }
    return out;
}

WriteResult Registry::execute_write(const std::string& name, const Json& params)
{
    std::scoped_lock lock(mutex_);
    auto action_it = actions_.find(name);
    if (action_it == actions_.end())
        throw Error(ErrorKind::UnknownAction, name);
    const auto& action = action_it->second;

    for (const auto& p : action.required_params)
        if (!params.contains(p))
            return {WriteStatus::rejected, "missing parameter " + p, {}};

    auto dataset_it = datasets_.find(action.dataset);
    if (dataset_it == datasets_.end())
        return {WriteStatus::rejected, "dataset " + action.dataset + " unavailable", {}};
    auto& dataset = dataset_it->second;

    WriteResult result{WriteStatus::ok, action.detail, {}};
    for (const auto& effect : action.effects)
    {
        const auto record_id = interpolate(effect.record, params);
        auto record_it = dataset.records.find(record_id);
        if (record_it == dataset.records.end() && !effect.create)
            return {WriteStatus::rejected, "no record " + record_id, {}};

        Json payload = record_it == dataset.records.end() ? Json::object() : record_it->second.back();
        for (const auto& [key, value] : effect.set.items())
        {
            if (value.is_string() && value.get<std::string>().starts_with("$"))
            {
                const auto param = value.get<std::string>().substr(1);
                payload[key] = params.contains(param) ? params.at(param) : Json();
            }
            else if (value.is_string())
                payload[key] = interpolate(value.get<std::string>(), params);
            else
                payload[key] = value;
        }
        auto& versions = dataset.records[record_id];
        versions.push_back(std::move(payload));
        result.resulting_refs.push_back({action.dataset, record_id, static_cast<std::int64_t>(versions.size())});
    }
    return result;
}

std::map<RecordRef, std::int64_t> Registry::current_versions(const std::vector<RecordRef>& refs) const
{
    std::shared_lock lock(mutex_);
    std::map<RecordRef, std::int64_t> out;
    for (const auto& ref : refs)
    {
        auto it = datasets_.find(ref.source);
        if (it == datasets_.end())
            throw Error(ErrorKind::UnknownSource, ref.source);
        auto record = it->second.records.find(ref.record_id);
        out[ref] = record == it->second.records.end() ? ref.version : static_cast<std::int64_t>(record->second.size());
    }
    return out;
}

std::optional<Json> Registry::resolve(const RecordRef& ref) const
{
    std::shared_lock lock(mutex_);
    auto it = datasets_.find(ref.source);
    if (it == datasets_.end())
        return std::nullopt;
    auto record = it->second.records.find(ref.record_id);
    if (record == it->second.records.end() || ref.version < 1 ||
        ref.version > static_cast<std::int64_t>(record->second.size()))
        return std::nullopt;
    return std::optional<Json>(std::in_place, record->second[static_cast<std::size_t>(ref.version - 1)]);
}

} // namespace sac::env
