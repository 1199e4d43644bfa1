#include <doctest.h>

#include <random>

#include <formweave/enumerate.hpp>

#include "support/builders.hpp"
#include "support/random_model.hpp"

using namespace formweave;
using namespace formweave::testing;
namespace d = formweave::decision;

TEST_CASE("mandatory chain is selected")
{
    auto app = new_configuration(model("M", {mandatory("A", {}, {mandatory("B")})}));
    CHECK(app.selected("M"));
    CHECK(app.selected("M.A"));
    CHECK(app.selected("M.A.B"));
    CHECK(is_complete(app));
}

TEST_CASE("optional feature and group members start undecided")
{
    auto app = new_configuration(model("M", {optional("C"), group("G", 1, 1, {member("X"), member("Y")})}));
    CHECK(app.state("M.C") == DecisionState::Undecided);
    CHECK(app.selected("M.G"));
    CHECK(app.state("M.G.X") == DecisionState::Undecided);
    CHECK(app.state("M.G.Y") == DecisionState::Undecided);
    CHECK_FALSE(is_complete(app));
}

TEST_CASE("xor resolution")
{
    auto app = new_configuration(model("M", {group("G", 1, 1, {member("Owner"), member("Tenant")})}));
    auto next = specialize(app, d::ResolveGroup{"M.G", {"M.G.Owner"}});
    CHECK(next.selected("M.G.Owner"));
    CHECK(next.eliminated("M.G.Tenant"));
    CHECK(app.state("M.G.Owner") == DecisionState::Undecided);
    CHECK(is_complete(next));
}

TEST_CASE("selecting an excluded feature conflicts")
{
    auto app = new_configuration(
        model("M", {optional("A"), optional("B")}, {{ConstraintKind::Excludes, "M.A", "M.B"}}));
    app = specialize(app, d::Select{"M.B"});
    CHECK(app.eliminated("M.A"));
    CHECK_THROWS_AS(specialize(app, d::Select{"M.A"}), ConflictError);
}

TEST_CASE("requires propagates both ways")
{
    auto m = model("M", {optional("A"), optional("B")}, {{ConstraintKind::Requires, "M.A", "M.B"}});
    auto app = new_configuration(m);
    CHECK(specialize(app, d::Select{"M.A"}).selected("M.B"));
    CHECK(specialize(app, d::Eliminate{"M.B"}).eliminated("M.A"));
}

TEST_CASE("conflicting constraints are attributed to the trigger")
{
    auto m = model("M", {optional("A"), optional("B")},
                   {{ConstraintKind::Requires, "M.A", "M.B"}, {ConstraintKind::Excludes, "M.A", "M.B"}});
    auto app = new_configuration(m);
    try {
        specialize(app, d::Select{"M.A"});
        FAIL("no conflict");
    } catch (const ConflictError& e) {
        CHECK(e.trigger() == "M.A");
        CHECK(e.conflicting() == "M.B");
    }
}

TEST_CASE("clones get independent subtrees")
{
    auto m = model("Move", {solitary("FamilyMember", 0, 5, {},
                                     {mandatory("Name", ValueType::String), optional("Pet")})});
    auto app = new_configuration(m);
    auto items = open_items(app);
    REQUIRE(items.size() == 1);
    CHECK(items[0].kind == ItemKind::CloneCount);
    CHECK_FALSE(items[0].mandatory);

    app = specialize(app, d::Clone{"Move.FamilyMember", 3});
    CHECK(app.clone_count("Move.FamilyMember") == 3);
    for (int i = 1; i <= 3; ++i) {
        auto base = "Move.FamilyMember[" + std::to_string(i) + "]";
        CHECK(app.selected(base));
        CHECK(app.selected(base + ".Name"));
        CHECK(app.state(base + ".Pet") == DecisionState::Undecided);
    }
    app = specialize(app, d::SetValue{"Move.FamilyMember[2].Name", Value::string("Kees")});
    CHECK(app.value("Move.FamilyMember[2].Name")->text() == "Kees");
    CHECK_FALSE(app.value("Move.FamilyMember[1].Name"));
    CHECK_THROWS_AS(specialize(app, d::Clone{"Move.FamilyMember", 2}), DecisionError);
    CHECK_THROWS_AS(specialize(new_configuration(m), d::Clone{"Move.FamilyMember", 6}), DecisionError);
    CHECK(specialize(new_configuration(m), d::Clone{"Move.FamilyMember", 0}).eliminated("Move.FamilyMember"));
}

TEST_CASE("fixed clone count propagates")
{
    auto app = new_configuration(model("M", {solitary("F", 2, 2, ValueType::Integer)}));
    CHECK(app.clone_count("M.F") == 2);
    auto items = open_items(app);
    REQUIRE(items.size() == 2);
    CHECK(items[0].path == "M.F[1]");
    CHECK(items[1].path == "M.F[2]");
}

TEST_CASE("decision preconditions")
{
    auto app = new_configuration(model("M", {optional("A", ValueType::Integer), group("G", 1, 1, {member("X"), member("Y")})}));
    CHECK_THROWS_AS(specialize(app, d::Select{"M.Nope"}), DecisionError);
    CHECK_THROWS_AS(specialize(app, d::Select{"M.G"}), DecisionError);
    CHECK_THROWS_AS(specialize(app, d::Eliminate{"M"}), DecisionError);
    CHECK_THROWS_AS(specialize(app, d::SetValue{"M.A", Value::integer(1)}), DecisionError);
    auto sel = specialize(app, d::Select{"M.A"});
    CHECK_THROWS_AS(specialize(sel, d::SetValue{"M.A", Value::string("1")}), DecisionError);
    CHECK_THROWS_AS(specialize(sel, d::Select{"M.A"}), DecisionError);
    CHECK_THROWS_AS(specialize(sel, d::Eliminate{"M.A"}), ConflictError);
    CHECK_THROWS_AS(specialize(app, d::ResolveGroup{"M.G", {"M.G.X", "M.G.Y"}}), DecisionError);
    CHECK_THROWS_AS(specialize(app, d::ResolveGroup{"M.G", {"M.A"}}), DecisionError);
}

TEST_CASE("is_complete")
{
    auto m = model("M", {optional("Opt"), mandatory("N", ValueType::String)});
    auto app = new_configuration(m);
    CHECK_FALSE(is_complete(app));
    app = specialize(app, d::Eliminate{"M.Opt"});
    CHECK_FALSE(is_complete(app));
    auto items = open_items(app);
    REQUIRE(items.size() == 1);
    CHECK(items[0].kind == ItemKind::Value);
    CHECK(items[0].tag == ItemTag::Mandatory);
    CHECK(items[0].path == "M.N");
    app = specialize(app, d::SetValue{"M.N", Value::string("x")});
    CHECK(is_complete(app));
    CHECK(open_items(app).empty());
}

TEST_CASE("check_constraints on hand-built states")
{
    auto m = model("M", {optional("A"), optional("B"), group("G", 1, 1, {member("X"), member("Y")})},
                   {{ConstraintKind::Requires, "M.A", "M.B"}});
    ApplicationFeatureModel app;
    app.family = m;
    app.states = {{"M", DecisionState::Selected}, {"M.A", DecisionState::Selected}, {"M.B", DecisionState::Eliminated},
                  {"M.G", DecisionState::Selected}, {"M.G.X", DecisionState::Selected},
                  {"M.G.Y", DecisionState::Eliminated}};
    auto vs = check_constraints(app);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].rule == "requires");

    app.states["M.B"] = DecisionState::Selected;
    app.states["M.G.Y"] = DecisionState::Selected;
    vs = check_constraints(app);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].rule == "group-cardinality");
}

TEST_CASE("xor group open item")
{
    auto app = new_configuration(model("M", {group("G", 1, 1, {member("X"), member("Y")})}));
    auto items = open_items(app);
    REQUIRE(items.size() == 1);
    CHECK(items[0].kind == ItemKind::Group);
    CHECK(items[0].mandatory);
}

TEST_CASE("application model serialization round trip")
{
    std::mt19937 rng(21);
    for (int i = 0; i < 100; ++i) {
        auto m = random_model(rng);
        auto app = new_configuration(m);
        for (int step = 0; step < 6; ++step) {
            auto items = open_items(app);
            if (items.empty())
                break;
            auto dec = random_decision(rng, app, items[static_cast<std::size_t>(rng() % items.size())]);
            try {
                app = specialize(app, dec);
            } catch (const Error&) {
            }
        }
        auto text = serialize_application_model(app);
        auto back = parse_application_model(text);
        CHECK(back == app);
        CHECK(serialize_application_model(back) == text);
    }
}

// Random walks over random models, checked against the enumerator.
TEST_CASE("specialization properties")
{
    std::mt19937 rng(17);
    for (int i = 0; i < 120; ++i) {
        auto m = random_model(rng);
        auto all = enumerate_configurations(m);
        auto app = new_configuration(m);
        std::vector<const ApplicationFeatureModel*> live;
        for (const auto& c : all)
            if (compatible(c, app))
                live.push_back(&c);
        CHECK(live.size() == all.size());

        for (int step = 0; step < 40; ++step) {
            auto items = open_items(app);
            if (items.empty())
                break;
            auto dec = random_decision(rng, app, items[static_cast<std::size_t>(rng() % items.size())]);
            CAPTURE(describe(dec));
            CAPTURE(serialize_application_model(app));
            std::vector<const ApplicationFeatureModel*> expect;
            for (auto* c : live)
                if (agrees(*c, app, dec))
                    expect.push_back(c);

            ApplicationFeatureModel next;
            try {
                next = specialize(app, dec);
            } catch (const ConflictError&) {
                CHECK(expect.empty());
                continue;
            } catch (const DecisionError&) {
                CHECK(expect.empty());
                continue;
            }

            // decided states are permanent
            for (const auto& [path, st] : app.states)
                CHECK(next.state(path) == st);
            // propagation is at a fixpoint
            auto again = next;
            propagate(again);
            CHECK(again == next);

            std::vector<const ApplicationFeatureModel*> after;
            for (auto* c : live)
                if (compatible(*c, next))
                    after.push_back(c);
            CHECK(after == expect);
            live = std::move(after);
            app = std::move(next);
            if (is_complete(app)) {
                CHECK(check_constraints(app).empty());
                CHECK(open_items(app).empty());
            }
        }
    }
}
