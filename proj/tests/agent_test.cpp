#include <gtest/gtest.h>

#include "sac/qa/gate.hpp"
#include "sac/service/session.hpp"
#include "support.hpp"

namespace sac::test
{
namespace
{

using agent::Compatibility;

core::ViewNode group_of(std::vector<std::pair<std::string, Json>> cards)
{
    auto list = node("list", core::NodeKind::list);
    for (auto& [id, props] : cards)
    {
        auto c = node(id, core::NodeKind::card, props);
        c.source_refs.push_back({"s", id, 1});
        list.children.push_back(c);
    }
    return node("root", core::NodeKind::panel, {}, {list});
}

env::Record record(const std::string& id, Json payload)
{
    return {{"s", id, 1}, std::move(payload)};
}

TEST(Compatibility, FieldSetAlgebra)
{
    const auto view = group_of({{"a", Json{{"name", "A"}, {"rate", 1}}}, {"b", Json{{"name", "B"}, {"rate", 2}}}});
    EXPECT_EQ(agent::assess_compatibility(view, {}), Compatibility::same_shape);
    EXPECT_EQ(agent::assess_compatibility(view, {record("c", Json{{"name", "C"}, {"rate", 3}})}), Compatibility::same_shape);
    EXPECT_EQ(agent::assess_compatibility(view, {record("c", Json{{"name", "C"}, {"fee", 3}})}), Compatibility::new_facet);
    EXPECT_EQ(agent::assess_compatibility(view, {record("c", Json{{"title", "C"}})}), Compatibility::unrelated);
    // derived markers are not fields
    const auto derived = group_of({{"a", Json{{"name", "A"}, {"rate", 1}, {"derived", true}}}});
    EXPECT_EQ(agent::assess_compatibility(derived, {record("c", Json{{"name", "C"}, {"rate", 3}})}), Compatibility::same_shape);
    // nothing rendered from records yet
    EXPECT_EQ(agent::assess_compatibility(node("root", core::NodeKind::panel), {record("c", Json{{"x", 1}})}),
              Compatibility::unrelated);
}

TEST(Compatibility, StrategyTable)
{
    using intent::Hint;
    using S = core::Strategy;
    for (auto c : {Compatibility::same_shape, Compatibility::new_facet, Compatibility::unrelated})
    {
        EXPECT_EQ(agent::select_strategy(Hint::replace, c), S::app_replacement);
        EXPECT_EQ(agent::select_strategy(Hint::diverge, c), S::structural_extension);
        EXPECT_EQ(agent::select_strategy(Hint::converge, c),
                  c == Compatibility::same_shape ? S::element_update : S::structural_extension);
    }
}

TEST(Plan, ArchitectureFollowsCategory)
{
    using intent::Category;
    using agent::Architecture;
    EXPECT_EQ(agent::architecture_for(Category::selection), Architecture::parallel_items);
    EXPECT_EQ(agent::architecture_for(Category::exploration), Architecture::hierarchical_progressive);
    EXPECT_EQ(agent::architecture_for(Category::execution), Architecture::sequential_steps);
    EXPECT_EQ(agent::architecture_for(Category::monitoring), Architecture::dashboard_metrics);
    EXPECT_EQ(agent::architecture_for(Category::creation), Architecture::editable_workspace);
    intent::IntentAssessment a;
    EXPECT_EQ(error_kind_of([&] { agent::make_plan(a); }), ErrorKind::SchemaViolation);
    a.modality = intent::Modality::structured_app;
    a.category = Category::monitoring;
    a.data_requirements.push_back(env::QuerySpec{"fx_rates", {}, {}, std::nullopt});
    const auto plan = agent::make_plan(a);
    EXPECT_EQ(plan.architecture, Architecture::dashboard_metrics);
    EXPECT_EQ(plan.queries, a.data_requirements);
}

// A two-entry script over a tiny dataset.
struct Mini
{
    env::Registry env;
    intent::RuleTable rules;
    std::unique_ptr<agent::ScriptedAgent> agent;

    explicit Mini(const Json& entries)
    {
        env.add_dataset("things", {{"t1", Json{{"name", "One"}, {"size", 3}}}, {"t2", Json{{"name", "Two"}, {"size", 5}}}});
        rules = intent::RuleTable::from_json(Json::parse(R"({
          "rules": [{"pattern": "things", "category": "selection", "weight": 2, "requires": [{"source": "things"}]}],
          "evolution": [{"pattern": "bigger", "hint": "converge"}]})"));
        Json script{{"affordances", Json::parse(R"([
          {"id": "aff.pick", "label": "Pick", "anchor": "things", "verb": "select",
           "params": {"name": {"type": "string", "allowed_values": {"values": "things.name"}}}}])")},
                    {"entries", entries}};
        agent = std::make_unique<agent::ScriptedAgent>(agent::AgentScript::from_json(script));
    }
};

const Json kColdStart = Json::parse(R"({"id": "cold", "when": {"phase": "cold_start", "category": "selection"},
  "preferences": {"limit": 4},
  "view": [
    {"id": "total", "kind": "metric", "props": {"value": "$pref:limit"}},
    {"id": "count", "kind": "metric", "props": {"value": "{count:things} things"}},
    {"id": "things", "kind": "list", "children": [
      {"id": "thing.{record_id}", "kind": "card", "repeat": {"source": "things"}, "fields": ["name", "size"], "children": [
        {"id": "fit.{record_id}", "kind": "badge",
         "props": {"double": {"sum": ["size", "size"]}, "fits": {"within": ["size", "pref:limit"], "then": "yes", "else": "no"}}}
      ]}
    ]}
  ],
  "anticipatory": [{"id": "ant.more", "label": "More", "intent": "more things"}]})");

service::SessionService make_service(Mini& m)
{
    return service::SessionService(m.rules, m.env, *m.agent, nullptr, {});
}

TEST(ScriptedAgent, ColdStartRendersRecipe)
{
    Mini m(Json::array({kColdStart}));
    auto svc = make_service(m);
    const auto sid = svc.open_session();
    const auto out = svc.submit_utterance(sid, "show me things");
    ASSERT_TRUE(out.state);
    const auto& s = *out.state;
    EXPECT_EQ(core::find_node(s.view, "fit.t2")->props.at("double"), 10);
    EXPECT_EQ(core::find_node(s.view, "fit.t1")->props.at("fits"), "yes");
    EXPECT_EQ(core::find_node(s.view, "fit.t2")->props.at("fits"), "no");
    // Computed values mark their node derived; values shown from records do not.
    EXPECT_EQ(core::find_node(s.view, "fit.t1")->props.value("derived", false), true);
    EXPECT_EQ(core::find_node(s.view, "thing.t1")->props.value("derived", false), false);
    EXPECT_EQ(core::find_node(s.view, "thing.t1")->source_refs.size(), 1u);
    EXPECT_EQ(core::find_node(s.view, "total")->props.value("derived", false), true);
    EXPECT_EQ(core::find_node(s.view, "count")->props.at("value"), "2 things");
    EXPECT_EQ(core::find_node(s.view, "count")->props.value("derived", false), true);
    EXPECT_EQ(s.context.preferences.at("limit"), 4);
    EXPECT_EQ(s.context.task_progress.at("stage"), "cold");
    EXPECT_TRUE(s.context.task_progress.contains("plan"));
    ASSERT_EQ(s.affordances.structured.size(), 1u);
    EXPECT_EQ(*s.affordances.structured[0].param_schema.at("name").allowed_values, (std::vector<Json>{"One", "Two"}));
    ASSERT_EQ(s.affordances.anticipatory.size(), 1u);
    EXPECT_TRUE(core::validate_state(s).empty());
}

TEST(ScriptedAgent, MissingAndAmbiguousEntriesAreScriptMisses)
{
    Mini none(Json::array());
    auto svc = make_service(none);
    auto sid = svc.open_session();
    try
    {
        svc.submit_utterance(sid, "show me things");
        FAIL() << "no error";
    }
    catch (const PipelineFault& f)
    {
        EXPECT_EQ(f.stage(), Stage::agent);
        EXPECT_EQ(f.cause(), ErrorKind::ScriptMiss);
    }

    auto twin = kColdStart;
    twin["id"] = "cold2";
    Mini both(Json::array({kColdStart, twin}));
    auto svc2 = make_service(both);
    sid = svc2.open_session();
    try
    {
        svc2.submit_utterance(sid, "show me things");
        FAIL() << "no error";
    }
    catch (const PipelineFault& f)
    {
        EXPECT_EQ(f.cause(), ErrorKind::ScriptMiss);
        EXPECT_NE(std::string(f.what()).find("ambiguous"), std::string::npos);
    }
}

TEST(ScriptedAgent, EvolutionStrategiesAndHistory)
{
    auto converge = Json::parse(R"({"id": "bigger", "when": {"phase": "evolution", "channel": "nl", "text": ["bigger"]},
      "summary": "highlighted big ones",
      "queries": [{"source": "things", "predicate": {"size": {"op": "ge", "value": 4}}}],
      "ops": [{"op": "set", "node": "thing.{record_id}", "repeat": {"source": "things"}, "props": {"highlight": true}}]})");
    auto pick = Json::parse(R"({"id": "pick", "when": {"phase": "evolution", "affordance": "aff.pick"},
      "summary": "picked",
      "ops": [{"op": "set", "node": "things", "props": {"picked": "$param:name"}}]})");
    Mini m(Json::array({kColdStart, converge, pick}));
    auto svc = make_service(m);
    const auto sid = svc.open_session();
    svc.submit_utterance(sid, "show me things");

    // Same-shape records on a converging event: element update.
    auto out = svc.submit_utterance(sid, "make the bigger ones stand out");
    ASSERT_TRUE(out.strategy);
    EXPECT_EQ(*out.strategy, core::Strategy::element_update);
    EXPECT_EQ(out.diff->mutated_ids, (std::set<std::string>{"thing.t2"}));
    // Anticipatory list of the cold start stays on offer.
    EXPECT_EQ(out.state->affordances.anticipatory.size(), 1u);

    for (int i = 0; i < 8; ++i)
    {
        core::Event e;
        e.basis_state_seq = svc.get_state(sid).state_seq;
        e.payload = core::StructuredPayload{"aff.pick", core::Verb::select, Json{{"name", i % 2 ? "One" : "Two"}}};
        out = svc.dispatch_affordance(sid, e);
        EXPECT_EQ(*out.strategy, core::Strategy::element_update);
    }
    const auto s = svc.get_state(sid);
    EXPECT_EQ(s.state_seq, 9);
    EXPECT_LE(s.context.history.size(), 6u);
    ASSERT_TRUE(s.context.compressed_summary);
    EXPECT_EQ(s.context.history.back().event, "select aff.pick name=One");
    EXPECT_EQ(s.context.history.back().state_seq, 8);
}

TEST(ScriptedAgent, ScenarioStatesPassTheGate)
{
    auto rt = load_runtime();
    service::SessionService svc(rt.rules, rt.env, *rt.agent, nullptr, {});
    for (const auto* utterance :
         {"I have a P2 licence and a medium-sized dog, and need a one-way car rental from Sydney to Melbourne for $80-100 a day",
          "Find a public BBQ spot in Sydney for 8-10 people, near the water with easy parking",
          "I'm a Chinese international student on an F-1 visa who just started OPT and I need to apply for an SSN for the first time",
          "Track the AUD to USD exchange rate for me", "Find a 2 bedroom apartment in Sydney under $750 a week near Newtown or Glebe"})
    {
        const auto sid = svc.open_session();
        const auto out = svc.submit_utterance(sid, utterance);
        ASSERT_TRUE(out.state) << utterance;
        const auto report = qa::gate(*out.state, rt.env, rt.qa);
        EXPECT_EQ(report.verdict, qa::Verdict::pass) << utterance << "\n" << qa::to_json(report).dump(2);
        EXPECT_TRUE(core::validate_state(*out.state).empty()) << utterance;
    }
}

TEST(ScriptedAgent, ApartmentBudgetFiltersListings)
{
    auto rt = load_runtime();
    service::SessionService svc(rt.rules, rt.env, *rt.agent, nullptr, {});
    const auto sid = svc.open_session();
    const auto s = *svc.submit_utterance(sid, "Find a 2 bedroom apartment in Sydney under $750 a week near Newtown or Glebe").state;
    // Oracle: fixtures with bedrooms == 2 and rent <= 750.
    std::set<std::string> want;
    for (const auto& r : rt.env.execute_query({"apartments", {}, {}, std::nullopt}))
        if (r.payload.at("bedrooms") == 2 && r.payload.at("weekly_rent").get<int>() <= 750)
            want.insert("apt." + r.ref.record_id);
    std::set<std::string> got;
    for (const auto& c : core::find_node(s.view, "apt.list")->children)
        got.insert(c.node_id);
    EXPECT_EQ(got, want);
    EXPECT_EQ(want.size(), 2u);
}

} // namespace
} // namespace sac::test
