#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

namespace sac::test
{
namespace
{

env::Registry small_registry()
{
    env::Registry r;
    r.add_dataset("cars", {{"a", Json{{"name", "Alpha"}, {"rate", 50}, {"tags", {"dog", "p2"}}}},
                           {"b", Json{{"name", "Beta"}, {"rate", 80}, {"tags", {"p2"}}}},
                           {"c", Json{{"name", "Gamma"}, {"rate", 65}, {"tags", Json::array()}}}});
    env::WriteAction bump;
    bump.name = "set_rate";
    bump.dataset = "cars";
    bump.detail = "rate updated";
    bump.required_params = {"id", "rate"};
    bump.effects.push_back({"{id}", Json{{"rate", "$rate"}}, false});
    r.add_action(bump);
    env::WriteAction create;
    create.name = "add_car";
    create.dataset = "cars";
    create.effects.push_back({"{id}", Json{{"name", "{name} Rentals"}, {"rate", 0}}, true});
    r.add_action(create);
    return r;
}

env::QuerySpec query(const std::string& source, std::map<std::string, env::Condition> where = {})
{
    env::QuerySpec q;
    q.source = source;
    q.predicate = std::move(where);
    return q;
}

std::vector<std::string> ids(const std::vector<env::Record>& records)
{
    std::vector<std::string> out;
    for (const auto& r : records)
        out.push_back(r.ref.record_id);
    return out;
}

TEST(Registry, QueriesReturnRecordsInIdOrder)
{
    const auto r = small_registry();
    EXPECT_EQ(ids(r.execute_query(query("cars"))), (std::vector<std::string>{"a", "b", "c"}));
    for (const auto& rec : r.execute_query(query("cars")))
        EXPECT_EQ(rec.ref.version, 1);
}

TEST(Registry, PredicateOperators)
{
    const auto r = small_registry();
    auto run = [&](const std::string& field, const std::string& op, Json v) {
        return ids(r.execute_query(query("cars", {{field, env::Condition{op, std::move(v)}}})));
    };
    EXPECT_EQ(run("rate", "eq", 80), (std::vector<std::string>{"b"}));
    EXPECT_EQ(run("rate", "ne", 80), (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(run("rate", "lt", 65), (std::vector<std::string>{"a"}));
    EXPECT_EQ(run("rate", "le", 65), (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(run("rate", "gt", 65), (std::vector<std::string>{"b"}));
    EXPECT_EQ(run("rate", "ge", 65), (std::vector<std::string>{"b", "c"}));
    EXPECT_EQ(run("tags", "contains", "dog"), (std::vector<std::string>{"a"}));
    EXPECT_EQ(run("name", "contains", "amm"), (std::vector<std::string>{"c"}));
    EXPECT_EQ(run("name", "lt", "B"), (std::vector<std::string>{"a"}));
    EXPECT_TRUE(run("missing", "eq", 1).empty());
    EXPECT_TRUE(run("name", "gt", 3).empty());
}

TEST(Registry, ProjectionAndLimit)
{
    const auto r = small_registry();
    auto q = query("cars");
    q.projection = {"name"};
    q.limit = 2;
    const auto out = r.execute_query(q);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].payload, (Json{{"name", "Alpha"}}));
}

TEST(Registry, QueryErrors)
{
    const auto r = small_registry();
    EXPECT_EQ(error_kind_of([&] { r.execute_query(query("boats")); }), ErrorKind::UnknownSource);
    EXPECT_EQ(error_kind_of([&] { r.execute_query(query("cars", {{"rate", {"like", 1}}})); }), ErrorKind::BadPredicate);
    EXPECT_EQ(error_kind_of([&] { r.execute_query(query("cars", {{"rate", {"lt", true}}})); }), ErrorKind::BadPredicate);
    EXPECT_EQ(error_kind_of([&] { r.execute_query(query("cars", {{"", {"eq", 1}}})); }), ErrorKind::BadPredicate);
    auto q = query("cars");
    q.limit = -1;
    EXPECT_EQ(error_kind_of([&] { r.execute_query(q); }), ErrorKind::BadPredicate);
}

// Oracle: a plain counter of successful writes per record.
TEST(Registry, WritesAdvanceVersionsAndKeepHistory)
{
    auto r = small_registry();
    std::map<std::string, std::int64_t> expected{{"a", 1}, {"b", 1}, {"c", 1}};
    const std::vector<std::pair<std::string, int>> writes{{"a", 51}, {"b", 81}, {"a", 52}, {"a", 53}, {"c", 66}};
    for (const auto& [id, rate] : writes)
    {
        const auto result = r.execute_write("set_rate", Json{{"id", id}, {"rate", rate}});
        ASSERT_EQ(result.status, env::WriteStatus::ok);
        ++expected[id];
        ASSERT_EQ(result.resulting_refs.size(), 1u);
        EXPECT_EQ(result.resulting_refs[0].version, expected[id]);
    }
    std::vector<env::RecordRef> refs;
    for (const auto& [id, _] : expected)
        refs.push_back({"cars", id, 1});
    for (const auto& [ref, version] : r.current_versions(refs))
        EXPECT_EQ(version, expected[ref.record_id]);

    EXPECT_EQ(r.resolve({"cars", "a", 1})->at("rate"), 50);
    EXPECT_EQ(r.resolve({"cars", "a", 3})->at("rate"), 52);
    EXPECT_EQ(r.resolve({"cars", "a", 4})->at("rate"), 53);
    EXPECT_FALSE(r.resolve({"cars", "a", 5}));
    EXPECT_FALSE(r.resolve({"cars", "a", 0}));
    EXPECT_FALSE(r.resolve({"cars", "zz", 1}));
    EXPECT_FALSE(r.resolve({"boats", "a", 1}));
    EXPECT_EQ(r.execute_query(query("cars", {{"rate", {"eq", 53}}}))[0].ref.version, 4);
}

TEST(Registry, WriteRejectionsAndCreation)
{
    auto r = small_registry();
    EXPECT_EQ(error_kind_of([&] { r.execute_write("launch", Json::object()); }), ErrorKind::UnknownAction);
    EXPECT_EQ(r.execute_write("set_rate", Json{{"id", "a"}}).status, env::WriteStatus::rejected);
    EXPECT_EQ(r.execute_write("set_rate", Json{{"id", "zz"}, {"rate", 1}}).status, env::WriteStatus::rejected);
    const auto made = r.execute_write("add_car", Json{{"id", "d"}, {"name", "Delta"}});
    ASSERT_EQ(made.status, env::WriteStatus::ok);
    EXPECT_EQ(made.resulting_refs[0], (env::RecordRef{"cars", "d", 1}));
    EXPECT_EQ(r.resolve({"cars", "d", 1})->at("name"), "Delta Rentals");
    r.remove_dataset("cars");
    EXPECT_EQ(r.execute_write("set_rate", Json{{"id", "a"}, {"rate", 1}}).status, env::WriteStatus::rejected);
    EXPECT_EQ(error_kind_of([&] { r.current_versions({{"cars", "a", 1}}); }), ErrorKind::UnknownSource);
}

TEST(Registry, CopiesAreIndependent)
{
    auto a = small_registry();
    env::Registry b = a;
    ASSERT_EQ(a.execute_write("set_rate", Json{{"id", "a"}, {"rate", 1}}).status, env::WriteStatus::ok);
    EXPECT_EQ(b.current_versions({{"cars", "a", 1}}).begin()->second, 1);
}

TEST(Registry, ShippedFixturesLoad)
{
    env::Registry r;
    r.load_directory(data_dir() / "fixtures");
    for (const auto* source : {"car_providers", "car_surcharges", "bbq_spots", "bbq_events", "bbq_plans", "ssn_documents",
                               "ssn_steps", "ssn_offices", "ssn_applications", "fx_rates", "apartments"})
        EXPECT_TRUE(r.has_source(source)) << source;
    EXPECT_EQ(r.execute_query(query("ssn_documents", {{"applies_to", {"contains", "F-1 OPT"}}})).size(), 6u);
    EXPECT_EQ(error_kind_of([&] { r.load_directory(data_dir() / "no-such-dir"); }), ErrorKind::IoError);
}

TEST(Registry, MalformedFixtureIsAConfigError)
{
    TempDir dir("fixture");
    const auto file = dir.path() / "bad.json";
    std::ofstream(file) << R"({"dataset":"x","records":[{"id":"a","fields":3}]})";
    env::Registry r;
    EXPECT_EQ(error_kind_of([&] { r.load_file(file); }), ErrorKind::ConfigError);
    std::ofstream(file) << R"({"dataset":"x","records":[{"id":"a","fields":{}},{"id":"a","fields":{}}]})";
    EXPECT_EQ(error_kind_of([&] { r.load_file(file); }), ErrorKind::ConfigError);
    std::ofstream(file) << R"({"dataset":)";
    EXPECT_EQ(error_kind_of([&] { r.load_file(file); }), ErrorKind::DecodeError);
}

} // namespace
} // namespace sac::test
