#include <doctest.h>

#include <algorithm>
#include <random>

#include <formweave/enumerate.hpp>
#include <formweave/interaction.hpp>

#include "support/builders.hpp"
#include "support/random_model.hpp"

using namespace formweave;
using namespace formweave::testing;

namespace {

struct Bundled {
    std::vector<Service> all{load_service(source_path("services/Excerpt.fm.xml")),
                             load_service(source_path("services/Felling.fm.xml"))};
    FixtureStore store = load_fixtures(source_path("services/fixtures.json"), all);
    FixtureClient client{store, all};

    std::shared_ptr<const Service> service(const std::string& name) const
    {
        for (const auto& s : all)
            if (s.name() == name)
                return std::make_shared<Service>(s);
        return nullptr;
    }
};

std::set<std::string> input_names(const Page& p)
{
    std::set<std::string> out;
    for (const auto* in : p.inputs())
        out.insert(in->name);
    return out;
}

// Counts invocations recorded in the session events.
int invocations(const Session& s)
{
    int n = 0;
    for (const auto& e : s.events)
        n += e["type"] == "invoke";
    return n;
}

} // namespace

TEST_CASE("mode names")
{
    for (auto m : {GeneratorMode::Offline, GeneratorMode::Initial, GeneratorMode::Runtime})
        CHECK(generator_mode_from_string(to_string(m)) == m);
    CHECK_FALSE(generator_mode_from_string("eager"));
    for (auto p : {Phase::Collecting, Phase::Complete, Phase::Reported})
        CHECK(phase_from_string(to_string(p)) == p);
}

TEST_CASE("offline form holds every open item")
{
    auto m = model("M", {mandatory("Name", ValueType::String), optional("Phone", ValueType::String),
                         group("Kind", 1, 1, {member("A"), member("B")}), group("Only", 1, 1, {member("X")})});
    auto g = generate_offline(m);
    REQUIRE(g.application.pages.size() == 1);
    const auto& page = g.application.pages[0];
    CHECK(input_names(page) == std::set<std::string>{"M.Name", "M.Phone", "M.Kind"});
    CHECK(std::holds_alternative<Navigation>(page.widgets.back()));
    for (const auto* in : page.inputs())
        CHECK_FALSE(in->prefill);
    CHECK(render_html(generate_offline(m).application.pages[0]) == render_html(page));
}

TEST_CASE("initial form prefills from the best function")
{
    Bundled b;
    auto felling = b.service("Felling");
    auto g = generate_initial(felling, "C1", &b.client);
    CHECK(g.warnings.empty());
    const auto& page = g.application.pages.at(0);
    std::map<std::string, std::string> prefilled;
    for (const auto* in : page.inputs())
        if (in->prefill)
            prefilled[in->name] = *in->prefill;
    // getParcelInfo waits for the parcel id, so only getPersonDetails runs
    CHECK(prefilled == std::map<std::string, std::string>{{"Felling.Applicant.Address", "Kerkstraat 12, Ede"},
                                                          {"Felling.Applicant.BirthDate", "1975-04-23"},
                                                          {"Felling.Applicant.Name", "J. Jansen"}});
    auto offline = generate_offline(felling->family);
    CHECK(input_names(page) == input_names(offline.application.pages[0]));
}

TEST_CASE("initial form degrades to offline")
{
    Bundled b;
    auto felling = b.service("Felling");
    auto offline = render_html(generate_offline(felling->family).application.pages[0]);

    auto unknown = generate_initial(felling, "C9", &b.client);
    CHECK(render_html(unknown.application.pages[0]) == offline);
    REQUIRE(unknown.warnings.size() == 1);
    CHECK(unknown.warnings[0].find("getPersonDetails") != std::string::npos);

    auto none = generate_initial(felling, "C1", nullptr);
    CHECK(render_html(none.application.pages[0]) == offline);
    CHECK(none.warnings.size() == 1);

    auto bare = std::make_shared<Service>(Service{felling->family, {"Felling", {}}});
    auto quiet = generate_initial(bare, "C1", &b.client);
    CHECK(render_html(quiet.application.pages[0]) == offline);
    CHECK(quiet.warnings.empty());
}

TEST_CASE("offline session never calls a function")
{
    Bundled b;
    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    auto s = simulate(b.service("Felling"), GeneratorMode::Offline, &b.client, sa);
    CHECK(s.invoked.empty());
    CHECK(invocations(s) == 0);
    CHECK(s.phase == Phase::Reported);
}

TEST_CASE("runtime session asks uncoverable fields, then calls functions")
{
    Bundled b;
    auto s = session_start(b.service("Felling"), "C1", GeneratorMode::Runtime, &b.client);
    CHECK(s.invoked.empty());
    const auto& first = session_page(s);
    auto names = input_names(first);
    for (const auto* covered : {"Felling.Applicant.Name", "Felling.Applicant.Address", "Felling.Applicant.BirthDate",
                                "Felling.Parcel.Area", "Felling.Parcel.Zoning", "Felling.Applicant.Phone"})
        CHECK_FALSE(names.count(covered));
    CHECK(names.count("Felling.Parcel.ParcelId"));
    CHECK(names.count("Felling.Ownership"));
    // idempotent until answers arrive
    CHECK(render_html(session_page(s)) == render_html(first));

    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    while (s.phase == Phase::Collecting) {
        const auto& page = session_page(s);
        for (const auto* in : page.inputs())
            CHECK_FALSE(s.app.value(in->name));
        session_submit(s, answer_page(page, sa), &b.client);
    }
    CHECK(s.invoked == InvocationHistory{"getParcelInfo", "getPersonDetails"});
    CHECK(s.app.value("Felling.Applicant.Name")->text() == "J. Jansen");
    CHECK(s.app.value("Felling.Parcel.Area")->text() == "1250.5");
    CHECK(s.phase == Phase::Complete);
    CHECK(is_complete(s.app));
    CHECK_THROWS_AS(session_page(s), PhaseError);
    CHECK_THROWS_AS(session_submit(s, {}, &b.client), PhaseError);
}

TEST_CASE("runtime session calls a covering function before the first page")
{
    auto m = model("W", {mandatory("Name", ValueType::String), mandatory("Address", ValueType::String),
                         optional("Note", ValueType::String)});
    auto svc = std::make_shared<Service>(Service{m, {"W", {{"lookup", {}, {"W.Name", "W.Address"}}}}});
    FixtureStore store;
    store.citizens["C1"]["lookup"] = {{"W.Name", "Kees"}, {"W.Address", "Dorpsweg 1"}};
    FixtureClient client(store, {*svc});
    auto s = session_start(svc, "C1", GeneratorMode::Runtime, &client);
    CHECK(s.invoked == InvocationHistory{"lookup"});
    CHECK(input_names(session_page(s)) == std::set<std::string>{"W.Note"});
}

TEST_CASE("an answer unlocking a function triggers it before the next page")
{
    auto m = model("W", {mandatory("Id", ValueType::String), mandatory("Area", ValueType::Float),
                         optional("Note", ValueType::String)});
    auto svc = std::make_shared<Service>(Service{m, {"W", {{"area", {"W.Id"}, {"W.Area"}}}}});
    FixtureStore store;
    store.citizens["C1"]["area"] = {{"W.Area", "12.5"}};
    FixtureClient client(store, {*svc});
    auto s = session_start(svc, "C1", GeneratorMode::Runtime, &client);
    CHECK(s.invoked.empty());
    CHECK(input_names(session_page(s)) == std::set<std::string>{"W.Id"});
    session_submit(s, {{"W.Id", "x"}}, &client);
    CHECK(s.invoked == InvocationHistory{"area"});
    CHECK(s.app.value("W.Area")->text() == "12.5");
    CHECK(input_names(session_page(s)) == std::set<std::string>{"W.Note"});
}

TEST_CASE("runtime start surfaces data administration failures")
{
    auto m = model("W", {mandatory("Name", ValueType::String)});
    auto svc = std::make_shared<Service>(Service{m, {"W", {{"lookup", {}, {"W.Name"}}}}});
    FixtureStore store;
    store.citizens["C1"]["lookup"] = {{"W.Name", "Kees"}};
    FixtureClient client(store, {*svc});
    CHECK_THROWS_AS(session_start(svc, "C9", GeneratorMode::Runtime, &client), DataAdminError);
    CHECK_THROWS_AS(session_start(svc, "C1", GeneratorMode::Runtime, nullptr), DataAdminError);
    CHECK_NOTHROW(session_start(svc, "C9", GeneratorMode::Offline, &client));
    CHECK(session_start(svc, "C1", GeneratorMode::Runtime, &client).phase == Phase::Complete);
}

TEST_CASE("later failures become warnings")
{
    Bundled b;
    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    auto until_parcel_call = [&](Session& s, const DataAdminClient* client) {
        while (s.phase == Phase::Collecting && !s.invoked.count("getParcelInfo"))
            session_submit(s, answer_page(session_page(s), sa), client);
    };

    // C2 has no parcel info: getParcelInfo returns nothing, the fields are asked
    auto s = session_start(b.service("Felling"), "C2", GeneratorMode::Runtime, &b.client);
    until_parcel_call(s, &b.client);
    REQUIRE(s.phase == Phase::Collecting);
    CHECK(s.warnings.empty());
    CHECK(input_names(session_page(s)).count("Felling.Parcel.Area"));

    auto store = b.store;
    store.unavailable.insert("getParcelInfo");
    FixtureClient flaky(store, b.all);
    auto t = session_start(b.service("Felling"), "C1", GeneratorMode::Runtime, &flaky);
    until_parcel_call(t, &flaky);
    REQUIRE(t.warnings.size() == 1);
    CHECK(t.warnings[0].find("getParcelInfo") != std::string::npos);
    REQUIRE(t.phase == Phase::Collecting);
    CHECK(input_names(session_page(t)).count("Felling.Parcel.Area"));
}

TEST_CASE("validation failure leaves the session unchanged")
{
    Bundled b;
    auto s = session_start(b.service("Felling"), "C1", GeneratorMode::Offline, &b.client);
    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    auto answers = answer_page(session_page(s), sa);
    answers["Felling.Trees.TreeCount"] = "three";
    auto before = s;
    CHECK_THROWS_AS(session_submit(s, answers, &b.client), ValidationError);
    CHECK(s.app == before.app);
    CHECK(s.history.size() == before.history.size());
    CHECK(s.pages_issued == before.pages_issued);
    CHECK(render_html(session_page(s)) == render_html(session_page(before)));
}

TEST_CASE("report lifecycle")
{
    Bundled b;
    auto s = session_start(b.service("Excerpt"), "C1", GeneratorMode::Offline, &b.client);
    try {
        session_report(s);
        FAIL("premature report");
    } catch (const IncompleteError& e) {
        CHECK_FALSE(e.open_paths().empty());
    }
    auto sa = load_scripted_answers(source_path("services/answers/excerpt-C1.json"));
    while (s.phase == Phase::Collecting)
        session_submit(s, answer_page(session_page(s), sa), &b.client);
    CHECK(s.phase == Phase::Complete);
    auto first = render_report(session_report(s), ReportFormat::Xml);
    CHECK(s.phase == Phase::Reported);
    CHECK(render_report(session_report(s), ReportFormat::Xml) == first);

    // independently assembled field map: every scripted answer except the
    // group and optional-feature choices shows up as a value
    std::map<std::string, std::string> fields;
    for (const auto& f : s.report->fields)
        fields[f.path] = f.value;
    CHECK(fields.at("Excerpt.Copies") == "2");
    CHECK(fields.at("Excerpt.Applicant.Name") == "J. Jansen");
    CHECK(fields.at("Excerpt.Delivery.Post.DeliveryAddress") == "Kerkstraat 12, Ede");
    CHECK(fields.at("Excerpt.Consent") == "true");
}

TEST_CASE("history pages have unique ids")
{
    Bundled b;
    for (auto mode : {GeneratorMode::Offline, GeneratorMode::Initial, GeneratorMode::Runtime}) {
        auto s = simulate(b.service("Felling"), mode, &b.client,
                          load_scripted_answers(source_path("services/answers/felling-C1.json")));
        std::set<std::string> ids;
        for (const auto& h : s.history)
            ids.insert(h.page.id);
        CHECK(ids.size() == s.history.size());
        for (const auto& fn : s.invoked)
            CHECK(s.service->catalog.find(fn));
    }
}

TEST_CASE("bundled services are mode-equivalent")
{
    Bundled b;
    for (const auto& [name, file] : {std::pair{"Felling", "felling-C1.json"}, std::pair{"Excerpt", "excerpt-C1.json"}}) {
        auto sa = load_scripted_answers(source_path(std::string("services/answers/") + file));
        auto off = simulate(b.service(name), GeneratorMode::Offline, &b.client, sa);
        auto ini = simulate(b.service(name), GeneratorMode::Initial, &b.client, sa);
        auto run = simulate(b.service(name), GeneratorMode::Runtime, &b.client, sa);
        CHECK(off.app == ini.app);
        CHECK(off.app == run.app);
        for (auto fmt : {ReportFormat::Xml, ReportFormat::Text}) {
            CHECK(render_report(*off.report, fmt) == render_report(*ini.report, fmt));
            CHECK(render_report(*off.report, fmt) == render_report(*run.report, fmt));
        }
        CHECK(run.history.size() > off.history.size());
    }
}

TEST_CASE("scripted answers")
{
    auto sa = parse_scripted_answers(R"({"citizenId":"C3","answersByName":{"a":"x","n":3,"f":2.5,"b":true}})");
    CHECK(sa.citizen_id == "C3");
    CHECK(sa.answers_by_name == Answers{{"a", "x"}, {"n", "3"}, {"f", "2.5"}, {"b", "true"}});
    CHECK_THROWS_AS(parse_scripted_answers(R"({"answersByName":{"a":[1]}})"), ParseError);
    CHECK_THROWS_AS(parse_scripted_answers("{"), ParseError);
    CHECK_THROWS_AS(load_scripted_answers(source_path("services/answers/none.json")), IoError);
}

TEST_CASE("answer_page")
{
    auto m = model("M", {mandatory("Name", ValueType::String), optional("Extra"), optional("Note", ValueType::String),
                         group("Kind", 1, 1, {member("A"), member("B")}),
                         group("Tags", 1, 2, {member("T1"), member("T2"), member("T3")})});
    auto page = generate_offline(m).application.pages[0];
    std::get<Input>(page.widgets[1]).prefill = "pre";
    ScriptedAnswers sa;
    sa.answers_by_name = {{"M.Extra", "yes"}, {"M.Kind", "Z"}, {"M.Tags", "T1,Q,T3"}, {"M.Unknown", "1"}};
    auto a = answer_page(page, sa);
    CHECK(a.count("M.Extra"));
    CHECK(a.at("M.Extra") == "Extra");
    CHECK_FALSE(a.count("M.Kind"));
    CHECK(a.at("M.Tags") == "T1,T3");
    CHECK_FALSE(a.count("M.Unknown"));
    CHECK_FALSE(a.count("M.Name"));
    sa.answers_by_name["M.Extra"] = "";
    CHECK_FALSE(answer_page(page, sa).count("M.Extra"));
}

TEST_CASE("simulation with a missing required answer")
{
    Bundled b;
    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    sa.answers_by_name.erase("Felling.Parcel.ParcelId");
    try {
        simulate(b.service("Felling"), GeneratorMode::Offline, &b.client, sa);
        FAIL("accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("Felling.Parcel.ParcelId") != std::string::npos);
    }
}

TEST_CASE("trace json")
{
    Bundled b;
    auto s = simulate(b.service("Felling"), GeneratorMode::Runtime, &b.client,
                      load_scripted_answers(source_path("services/answers/felling-C1.json")));
    auto j = nlohmann::json::parse(session_trace_json(s));
    CHECK(j["traceVersion"] == 1);
    CHECK(j["service"] == "Felling");
    CHECK(j["mode"] == "runtime");
    CHECK(j["citizenId"] == "C1");
    std::vector<std::string> kinds;
    for (const auto& e : j["events"])
        kinds.push_back(e["type"]);
    CHECK(kinds.front() == "page");
    CHECK(kinds.back() == "report");
    CHECK(std::count(kinds.begin(), kinds.end(), "invoke") == 2);
    CHECK(std::count(kinds.begin(), kinds.end(), "page") == std::count(kinds.begin(), kinds.end(), "submit"));
    CHECK(session_trace_json(s) == session_trace_json(s));
}

TEST_CASE("resume rebuilds the current page")
{
    Bundled b;
    auto sa = load_scripted_answers(source_path("services/answers/felling-C1.json"));
    for (auto mode : {GeneratorMode::Offline, GeneratorMode::Runtime}) {
        auto s = session_start(b.service("Felling"), "C1", mode, &b.client);
        session_submit(s, answer_page(session_page(s), sa), &b.client);
        REQUIRE(s.phase == Phase::Collecting);
        auto copy = s;
        session_resume(copy);
        CHECK(render_html(session_page(copy)) == render_html(session_page(s)));
    }
}

// Random models and catalogs, a random completed target, fixtures that agree
// with it. All modes must reach the target; replays must reproduce it.
TEST_CASE("mode equivalence, replay and termination on random models")
{
    std::mt19937 rng(41);
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        auto m = random_model(rng);
        auto configs = enumerate_configurations(m);
        REQUIRE_FALSE(configs.empty());
        auto target = with_random_values(rng, configs[rng() % configs.size()]);

        std::vector<std::string> attrs;
        for_each_node(*m, [&](const Node& n, const std::string& p, const Node*) {
            if (n.attribute && !n.is_multi() && !inside_multi_subtree(*m, p))
                attrs.push_back(p);
        });
        auto svc = std::make_shared<Service>();
        svc->family = m;
        svc->catalog.service = m->name();
        int nf = attrs.empty() ? 0 : static_cast<int>(rng() % 4) + 1;
        FixtureStore store;
        for (int f = 0; f < nf; ++f) {
            DataFunction fn{"fn" + std::to_string(f), {}, {}};
            for (const auto& a : attrs) {
                auto r = rng() % 6;
                if (r == 0)
                    fn.inputs.push_back(a);
                else if (r < 3)
                    fn.provides.push_back(a);
            }
            auto& values = store.citizens["C"][fn.name];
            for (const auto& p : fn.provides)
                if (const auto* v = target.value(p))
                    values[p] = v->text();
            svc->catalog.functions.push_back(std::move(fn));
        }
        REQUIRE(validate_catalog(svc->catalog, *m).empty());
        FixtureClient client(store, {*svc});

        std::vector<ApplicationFeatureModel> finals;
        std::vector<std::string> reports;
        for (auto mode : {GeneratorMode::Offline, GeneratorMode::Initial, GeneratorMode::Runtime}) {
            CAPTURE(to_string(mode));
            CAPTURE(serialize_application_model(target));
            Session s;
            try {
                s = session_start(svc, "C", mode, &client);
            } catch (const DataAdminError&) {
                FAIL("fixture call failed");
            }
            std::size_t cycles = 0;
            while (s.phase == Phase::Collecting) {
                ++cycles;
                REQUIRE(cycles <= static_cast<std::size_t>(node_count(*m)) + svc->catalog.functions.size());
                session_submit(s, answers_toward(session_page(s), target), &client);
            }
            CHECK(s.app == target);
            finals.push_back(s.app);
            reports.push_back(render_report(session_report(s), ReportFormat::Xml));

            // replay the recorded answers through a fresh session
            auto r = session_start(svc, "C", mode, &client);
            for (const auto& h : s.history) {
                REQUIRE(r.phase == Phase::Collecting);
                CHECK(session_page(r) == h.page);
                session_submit(r, h.answers, &client);
            }
            CHECK(r.app == s.app);
            CHECK(r.invoked == s.invoked);
        }
        CHECK(finals[0] == finals[1]);
        CHECK(finals[0] == finals[2]);
        CHECK(reports[0] == reports[1]);
        CHECK(reports[0] == reports[2]);
        ++checked;
    }
    CHECK(checked == 120);
}
