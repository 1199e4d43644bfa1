#include <doctest.h>

#include <algorithm>
#include <random>

#include <formweave/feature_model.hpp>

#include "support/builders.hpp"
#include "support/random_model.hpp"

using namespace formweave;
using namespace formweave::testing;

namespace {

const char* header = R"(<?xml version="1.0" encoding="UTF-8"?>
<fm:FeatureModel xmlns:fm="urn:formweave:feature-model" fm:value="M">
)";

std::string doc(const std::string& body) { return std::string(header) + body + "</fm:FeatureModel>\n"; }

bool has_rule(const std::vector<Diagnostic>& ds, const std::string& rule)
{
    return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.rule == rule; });
}

} // namespace

TEST_CASE("smallest legal model")
{
    auto m = parse_feature_model(doc(R"(  <fm:SolitaryFeature fm:value="A" min="1" max="1"/>
)"));
    CHECK(m.name() == "M");
    REQUIRE(m.root.children.size() == 1);
    CHECK(m.root.children[0].kind == NodeKind::Solitary);
    CHECK(m.root.children[0].cardinality.is_mandatory());
    CHECK_FALSE(m.root.children[0].cardinality.is_multi());
}

TEST_CASE("xor group of grouped features")
{
    auto m = parse_feature_model(doc(R"(  <fm:FeatureGroup fm:value="G" gmin="1" gmax="1">
    <fm:GroupedFeature fm:value="X"/>
    <fm:GroupedFeature fm:value="Y"/>
  </fm:FeatureGroup>
)"));
    const Node* g = find_node(m, "M.G");
    REQUIRE(g);
    CHECK(g->kind == NodeKind::Group);
    CHECK(g->group == GroupCardinality{1, 1});
    CHECK(g->children.size() == 2);
    CHECK(find_node(m, "M.G.Y")->kind == NodeKind::Grouped);
}

TEST_CASE("missing group cardinality defaults to xor")
{
    auto m = parse_feature_model(doc(R"(  <fm:FeatureGroup fm:value="G">
    <fm:GroupedFeature fm:value="X"/>
    <fm:GroupedFeature fm:value="Y"/>
  </fm:FeatureGroup>
)"));
    CHECK(find_node(m, "M.G")->group == GroupCardinality{1, 1});
}

TEST_CASE("dangling constraint")
{
    auto text = doc(R"(  <fm:SolitaryFeature fm:value="A" min="0" max="1"/>
  <fm:Constraint kind="requires" from="M.X" to="M.A"/>
)");
    CHECK_THROWS_AS(parse_feature_model(text), ModelError);
    auto m = parse_feature_model(text, {.resolver = {}, .validate = false});
    CHECK(has_rule(validate_model(m), "constraint-dangling"));
}

TEST_CASE("parse errors carry a line")
{
    try {
        parse_feature_model(doc(R"(  <fm:SolitaryFeature fm:value="A" min="x" max="1"/>
)"));
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_feature_model("<fm:FeatureModel"), ParseError);
    CHECK_THROWS_AS(parse_feature_model(doc("  <fm:Bogus/>\n")), ParseError);
    CHECK_THROWS_AS(parse_feature_model(doc(R"(  <fm:SolitaryFeature fm:value="A" color="red"/>
)")),
                    ParseError);
}

TEST_CASE("unbounded maximum")
{
    auto m = parse_feature_model(doc(R"(  <fm:SolitaryFeature fm:value="A" min="0" max="*"/>
)"));
    CHECK(find_node(m, "M.A")->cardinality.is_unbounded());
    CHECK(serialize_feature_model(m).find(R"(max="*")") != std::string::npos);
}

TEST_CASE("model references are inlined")
{
    auto text = doc(R"(  <fm:SolitaryFeature fm:value="Who" min="1" max="1">
    <fm:ModelReference target="P"/>
  </fm:SolitaryFeature>
)");
    ParseOptions opts;
    opts.resolver = [](const std::string& target) -> std::optional<std::string> {
        if (target != "P")
            return std::nullopt;
        return R"(<fm:FeatureModel xmlns:fm="urn:formweave:feature-model" fm:value="P">
  <fm:SolitaryFeature fm:value="Name" min="1" max="1"><fm:Attribute><fm:String/></fm:Attribute></fm:SolitaryFeature>
</fm:FeatureModel>)";
    };
    auto m = parse_feature_model(text, opts);
    REQUIRE(find_node(m, "M.Who.Name"));
    CHECK(find_node(m, "M.Who.Name")->attribute->type == ValueType::String);
    CHECK_THROWS_AS(parse_feature_model(text), ParseError);
}

TEST_CASE("cyclic references are rejected")
{
    ParseOptions opts;
    opts.resolver = [](const std::string&) -> std::optional<std::string> {
        return R"(<fm:FeatureModel xmlns:fm="urn:formweave:feature-model" fm:value="P">
  <fm:SolitaryFeature fm:value="X" min="1" max="1"><fm:ModelReference target="P"/></fm:SolitaryFeature>
</fm:FeatureModel>)";
    };
    CHECK_THROWS_AS(parse_feature_model(doc(R"(  <fm:SolitaryFeature fm:value="A" min="1" max="1">
    <fm:ModelReference target="P"/>
  </fm:SolitaryFeature>
)"),
                                        opts),
                    ParseError);
}

TEST_CASE("bundled models load")
{
    for (auto name : {"services/Felling.fm.xml", "services/Excerpt.fm.xml", "services/shared/Person.fm.xml"}) {
        CAPTURE(name);
        auto m = load_feature_model(source_path(name));
        CHECK(validate_model(m).empty());
    }
    auto felling = load_feature_model(source_path("services/Felling.fm.xml"));
    CHECK(find_node(felling, "Felling.Applicant.BirthDate"));
    CHECK(felling.constraints.size() == 1);
    CHECK_THROWS_AS(load_feature_model(source_path("services/missing.fm.xml")), IoError);
}

TEST_CASE("canonical round trip on a reference-free document")
{
    auto text = read_file(source_path("services/shared/Person.fm.xml"));
    CHECK(serialize_feature_model(parse_feature_model(text)) == text);
}

TEST_CASE("programmatic model re-parses equal")
{
    auto m = model("Move",
                   {mandatory("Name", ValueType::String, {}, "Full name"),
                    solitary("Member", 0, 5, {}, {mandatory("Age", ValueType::Integer)}),
                    group("Kind", 1, 2, {member("A"), member("B", ValueType::Date), member("C")}, "Kind")},
                   {{ConstraintKind::Excludes, "Move.Kind.A", "Move.Kind.C"}});
    CHECK(validate_model(*m).empty());
    auto text = serialize_feature_model(*m);
    auto back = parse_feature_model(text);
    CHECK(back == *m);
    CHECK(serialize_feature_model(back) == text);
}

TEST_CASE("random models survive parse of serialize")
{
    std::mt19937 rng(11);
    for (int i = 0; i < 300; ++i) {
        auto m = random_model(rng);
        auto text = serialize_feature_model(*m);
        auto back = parse_feature_model(text);
        REQUIRE(back == *m);
        CHECK(serialize_feature_model(back) == text);
    }
}

TEST_CASE("validation diagnostics")
{
    SUBCASE("group cardinality exceeds size")
    {
        auto m = model("M", {group("G", 1, 3, {member("X"), member("Y")})});
        auto ds = validate_model(*m);
        CHECK(has_rule(ds, "group-size"));
        CHECK(ds.front().message == "group cardinality exceeds size");
    }
    SUBCASE("min greater than max")
    {
        auto ds = validate_model(*model("M", {solitary("A", 2, 1)}));
        REQUIRE(ds.size() == 1);
        CHECK(ds[0].rule == "min-gt-max");
        CHECK(ds[0].path == "M.A");
    }
    SUBCASE("valid movement style model")
    {
        auto m = model("Move", {mandatory("Name", ValueType::String),
                                solitary("FamilyMember", 0, 5, {}, {mandatory("Name", ValueType::String)}),
                                group("Reason", 1, 1, {member("Work"), member("Study")})});
        CHECK(validate_model(*m).empty());
    }
    SUBCASE("strict types rejects extension types")
    {
        auto m = model("M", {mandatory("D", ValueType::Date), mandatory("B", ValueType::Boolean)});
        CHECK(validate_model(*m).empty());
        auto ds = validate_model(*m, {.strict_types = true});
        CHECK(ds.size() == 2);
        CHECK(has_rule(ds, "attribute-type-extension"));
    }
    SUBCASE("constraint endpoint in a clone subtree")
    {
        auto m = model("M", {solitary("F", 0, 3, {}, {optional("X")}), optional("Y")},
                       {{ConstraintKind::Requires, "M.Y", "M.F.X"}});
        CHECK(has_rule(validate_model(*m), "constraint-in-clone-subtree"));
    }
}

// Inject one violation into valid random models; the named rule must appear.
TEST_CASE("validation is sound under single injected faults")
{
    std::mt19937 rng(5);
    struct Fault {
        std::string rule;
        std::function<bool(FeatureModel&)> inject;
    };
    auto first_of = [](FeatureModel& m, NodeKind kind) -> Node* {
        Node* out = nullptr;
        std::function<void(Node&)> walk = [&](Node& n) {
            if (!out && n.kind == kind && &n != &m.root)
                out = &n;
            for (auto& c : n.children)
                walk(c);
        };
        walk(m.root);
        return out;
    };
    std::vector<Fault> faults{
        {"name-invalid", [&](FeatureModel& m) { m.root.children.front().name = "9bad"; return true; }},
        {"duplicate-path",
         [&](FeatureModel& m) {
             m.root.children.push_back(m.root.children.front());
             return true;
         }},
        {"root-cardinality", [&](FeatureModel& m) { m.root.cardinality = {0, 1}; return true; }},
        {"min-gt-max",
         [&](FeatureModel& m) {
             Node* n = first_of(m, NodeKind::Solitary);
             if (!n)
                 return false;
             n->cardinality = {3, 2};
             return true;
         }},
        {"max-zero",
         [&](FeatureModel& m) {
             Node* n = first_of(m, NodeKind::Solitary);
             if (!n)
                 return false;
             n->cardinality = {0, 0};
             return true;
         }},
        {"group-size",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             g->group = {1, static_cast<int>(g->children.size()) + 1};
             return true;
         }},
        {"group-min-gt-max",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             g->group = {1, 0};
             return true;
         }},
        {"group-empty",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             g->children.clear();
             return true;
         }},
        {"attribute-on-group",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             g->attribute = AttributeSpec{ValueType::String};
             return true;
         }},
        {"grouped-outside-group",
         [&](FeatureModel& m) {
             m.root.children.push_back(member("Stray"));
             return true;
         }},
        {"group-member-kind",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             g->children.push_back(optional("Wrong"));
             return true;
         }},
        {"constraint-dangling",
         [&](FeatureModel& m) {
             m.constraints.push_back({ConstraintKind::Requires, "R.Nope", "R"});
             return true;
         }},
        {"constraint-self",
         [&](FeatureModel& m) {
             m.constraints.push_back({ConstraintKind::Excludes, "R." + m.root.children.front().name,
                                      "R." + m.root.children.front().name});
             return true;
         }},
        {"constraint-endpoint-kind",
         [&](FeatureModel& m) {
             Node* g = first_of(m, NodeKind::Group);
             if (!g)
                 return false;
             std::string gp;
             for_each_node(m, [&](const Node& n, const std::string& p, const Node*) {
                 if (&n == g)
                     gp = p;
             });
             m.constraints.push_back({ConstraintKind::Requires, gp, "R"});
             return true;
         }},
    };
    for (const auto& f : faults) {
        int injected = 0;
        for (int i = 0; i < 60; ++i) {
            FeatureModel m = *random_model(rng);
            if (!f.inject(m))
                continue;
            ++injected;
            CAPTURE(f.rule);
            CAPTURE(serialize_feature_model(m));
            CHECK(has_rule(validate_model(m), f.rule));
        }
        CAPTURE(f.rule);
        CHECK(injected > 0);
    }
}

TEST_CASE("path helpers")
{
    CHECK(split_path("A.B[2].C") == std::vector<std::string>{"A", "B[2]", "C"});
    CHECK(join_path("", "A") == "A");
    CHECK(join_path("A", "B") == "A.B");
    CHECK(family_path("Move.FamilyMember[2].Name") == "Move.FamilyMember.Name");
    CHECK(is_identifier("Name_2"));
    CHECK_FALSE(is_identifier("2Name"));
    CHECK_FALSE(is_identifier("a.b"));
    auto m = model("M", {solitary("F", 0, 3, {}, {mandatory("X")})});
    CHECK(inside_multi_subtree(*m, "M.F.X"));
    CHECK_FALSE(inside_multi_subtree(*m, "M.F"));
}
