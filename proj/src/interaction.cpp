#include <formweave/interaction.hpp>

#include <algorithm>

namespace formweave {

using ojson = nlohmann::ordered_json;

std::string_view to_string(GeneratorMode m) noexcept
{
    switch (m) {
    case GeneratorMode::Offline: return "offline";
    case GeneratorMode::Initial: return "initial";
    case GeneratorMode::Runtime: return "runtime";
    }
    return "?";
}

std::optional<GeneratorMode> generator_mode_from_string(std::string_view s) noexcept
{
    for (auto m : {GeneratorMode::Offline, GeneratorMode::Initial, GeneratorMode::Runtime})
        if (s == to_string(m))
            return m;
    return std::nullopt;
}

std::string_view to_string(Phase p) noexcept
{
    switch (p) {
    case Phase::Collecting: return "collecting";
    case Phase::Complete: return "complete";
    case Phase::Reported: return "reported";
    }
    return "?";
}

std::optional<Phase> phase_from_string(std::string_view s) noexcept
{
    for (auto p : {Phase::Collecting, Phase::Complete, Phase::Reported})
        if (s == to_string(p))
            return p;
    return std::nullopt;
}

namespace {

ojson trace_to_json(const TransformationTrace& t)
{
    ojson arr = ojson::array();
    for (const auto& e : t) {
        ojson j{{"path", e.path}, {"rule", e.rule}};
        if (!e.label_rule.empty())
            j["labelRule"] = e.label_rule;
        j["emitted"] = e.emitted;
        arr.push_back(std::move(j));
    }
    return arr;
}

void warn(Session& s, std::string message)
{
    s.events.push_back({{"type", "warning"}, {"message", message}});
    s.warnings.push_back(std::move(message));
}

FunctionValues input_values(const ApplicationFeatureModel& app, const DataFunction& fn)
{
    FunctionValues in;
    for (const auto& p : fn.inputs)
        if (const auto* v = app.value(p))
            in[p] = v->text();
    return in;
}

// Runtime-mode call; failures other than at start become warnings and the
// function counts as invoked.
void call_function(Session& s, const DataFunction& fn, const DataAdminClient* client, bool starting)
{
    s.invoked.insert(fn.name);
    try {
        if (!client)
            throw DataAdminError(DataAdminError::Kind::Unavailable, "no data administration configured");
        auto values = client->invoke(fn, s.citizen_id, input_values(s.app, fn));
        auto applied = apply_function_result(s.app, fn, values);
        s.app = std::move(applied.app);
        s.events.push_back({{"type", "invoke"}, {"function", fn.name}, {"values", values}, {"notices", applied.notices}});
    } catch (const DataAdminError& e) {
        if (starting)
            throw;
        warn(s, fn.name + ": " + e.what());
    } catch (const LexicalError& e) {
        if (starting)
            throw DataAdminError(DataAdminError::Kind::Transport, fn.name + ": " + e.what());
        warn(s, fn.name + ": " + e.what());
    }
}

// Builds the next page, settling forced-only pages and, in runtime mode,
// running function calls first.
void advance(Session& s, const DataAdminClient* client, bool starting)
{
    std::size_t guard = 0;
    for (;;) {
        if (++guard > 10000)
            throw Error("session does not converge");
        if (is_complete(s.app)) {
            s.phase = Phase::Complete;
            s.current.reset();
            s.events.push_back({{"type", "complete"}});
            return;
        }
        std::vector<OpenItem> scope;
        if (s.mode == GeneratorMode::Runtime) {
            auto st = plan_next(s.app, s.service->catalog, s.invoked);
            if (const auto* call = std::get_if<step::CallFunction>(&st)) {
                call_function(s, *s.service->catalog.find(call->function), client, starting);
                continue;
            }
            if (std::holds_alternative<step::Finish>(st))
                continue;
            scope = std::get<step::AskUser>(st).items;
        } else {
            scope = open_items(s.app);
        }
        FmToCuiOptions opts;
        opts.prefills = s.prefills;
        opts.page_id = page_id(s.pages_issued + 1);
        auto plan = fm_to_cui(s.app, scope, default_fm_to_cui_rules(), opts);
        if (plan.page.inputs().empty()) {
            if (plan.forced.empty())
                throw Error("open items produced an empty page");
            TransformationTrace applied;
            s.app = apply_forced(std::move(s.app), plan.forced, applied);
            s.events.push_back({{"type", "forced"}, {"rules", trace_to_json(plan.trace)}, {"applied", trace_to_json(applied)}});
            continue;
        }
        ++s.pages_issued;
        s.events.push_back({{"type", "page"}, {"pageId", plan.page.id}, {"rules", trace_to_json(plan.trace)}});
        s.current = std::move(plan);
        return;
    }
}

const DataFunction* best_function(const Session& s)
{
    const DataFunction* best = nullptr;
    int best_yield = 0;
    for (const auto& fn : s.service->catalog.functions) {
        int y = yield_of(s.app, fn, s.invoked);
        if (y > best_yield || (y == best_yield && y > 0 && fn.name < best->name)) {
            best = &fn;
            best_yield = y;
        }
    }
    return best;
}

} // namespace

Session session_start(std::shared_ptr<const Service> service, std::string citizen_id, GeneratorMode mode,
                      const DataAdminClient* client)
{
    Session s;
    s.service = std::move(service);
    s.citizen_id = std::move(citizen_id);
    s.mode = mode;
    s.app = new_configuration(s.service->family);
    if (mode == GeneratorMode::Initial) {
        if (const auto* fn = best_function(s)) {
            s.invoked.insert(fn->name);
            try {
                if (!client)
                    throw DataAdminError(DataAdminError::Kind::Unavailable, "no data administration configured");
                auto values = client->invoke(*fn, s.citizen_id, input_values(s.app, *fn));
                for (const auto& [p, v] : values)
                    s.prefills[p] = v;
                s.events.push_back({{"type", "invoke"}, {"function", fn->name}, {"values", values}});
            } catch (const DataAdminError& e) {
                warn(s, fn->name + ": " + e.what());
            }
        }
    }
    advance(s, client, true);
    return s;
}

const Page& session_page(const Session& s)
{
    if (s.phase != Phase::Collecting || !s.current)
        throw PhaseError("session is " + std::string(to_string(s.phase)));
    return s.current->page;
}

void session_submit(Session& s, const Answers& answers, const DataAdminClient* client)
{
    if (s.phase != Phase::Collecting || !s.current)
        throw PhaseError("session is " + std::string(to_string(s.phase)));
    auto result = cui_to_fm(s.app, *s.current, answers);
    Session next = s;
    next.app = std::move(result.app);
    next.history.push_back({s.current->page, answers});
    next.events.push_back({{"type", "submit"},
                           {"pageId", s.current->page.id},
                           {"answers", answers},
                           {"rules", trace_to_json(result.trace)}});
    next.current.reset();
    advance(next, client, false);
    s = std::move(next);
}

const Report& session_report(Session& s)
{
    if (s.report)
        return *s.report;
    if (s.phase == Phase::Collecting) {
        std::vector<std::string> open;
        for (const auto& i : open_items(s.app))
            open.push_back(i.path);
        throw IncompleteError(std::move(open));
    }
    auto r = fm_to_report(s.app, s.citizen_id);
    s.events.push_back({{"type", "report"}, {"rules", trace_to_json(r.trace)}});
    s.report = std::move(r.report);
    s.phase = Phase::Reported;
    return *s.report;
}

void session_resume(Session& s)
{
    s.current.reset();
    if (s.phase != Phase::Collecting)
        return;
    std::vector<OpenItem> scope;
    if (s.mode == GeneratorMode::Runtime) {
        auto st = plan_next(s.app, s.service->catalog, s.invoked);
        if (!std::holds_alternative<step::AskUser>(st))
            throw Error("restored session is not waiting for the user");
        scope = std::get<step::AskUser>(st).items;
    } else {
        scope = open_items(s.app);
    }
    FmToCuiOptions opts;
    opts.prefills = s.prefills;
    opts.page_id = page_id(s.pages_issued);
    s.current = fm_to_cui(s.app, scope, default_fm_to_cui_rules(), opts);
}

namespace {

GeneratedForm first_form(const Session& s)
{
    GeneratedForm g;
    g.application.service_name = s.service->name();
    if (s.current) {
        g.plan = *s.current;
    } else {
        g.plan = fm_to_cui(s.app, {}, default_fm_to_cui_rules(), {});
    }
    g.application.pages.push_back(g.plan.page);
    g.warnings = s.warnings;
    return g;
}

} // namespace

GeneratedForm generate_offline(std::shared_ptr<const FeatureModel> family)
{
    auto service = std::make_shared<Service>();
    service->catalog.service = family->name();
    service->family = std::move(family);
    return first_form(session_start(service, {}, GeneratorMode::Offline, nullptr));
}

GeneratedForm generate_initial(std::shared_ptr<const Service> service, const std::string& citizen_id,
                               const DataAdminClient* client)
{
    return first_form(session_start(std::move(service), citizen_id, GeneratorMode::Initial, client));
}

// -- scripted source ------------------------------------------------------------

ScriptedAnswers parse_scripted_answers(std::string_view json_text)
{
    try {
        auto j = nlohmann::json::parse(json_text);
        ScriptedAnswers sa;
        sa.citizen_id = j.value("citizenId", std::string{});
        if (j.contains("answersByName"))
            for (const auto& [k, v] : j["answersByName"].items()) {
                if (v.is_string())
                    sa.answers_by_name[k] = v.get<std::string>();
                else if (v.is_boolean())
                    sa.answers_by_name[k] = v.get<bool>() ? "true" : "false";
                else if (v.is_number_integer())
                    sa.answers_by_name[k] = std::to_string(v.get<std::int64_t>());
                else if (v.is_number())
                    sa.answers_by_name[k] = v.dump();
                else
                    throw ParseError("answers: " + k + ": value must be a string, number or boolean");
            }
        return sa;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("answers: ") + e.what());
    }
}

ScriptedAnswers load_scripted_answers(const std::filesystem::path& file)
{
    return parse_scripted_answers(read_file(file));
}

namespace {

std::vector<std::string> split_commas(const std::string& s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        if (end == std::string::npos)
            end = s.size();
        if (end > start)
            out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

bool offers(const Input& in, const std::string& v)
{
    return std::any_of(in.options.begin(), in.options.end(), [&](const Option& o) { return o.value == v; });
}

bool is_feature_checkbox(const Input& in)
{
    if (in.kind != InputKind::Checkbox || in.value_type || in.options.size() != 1)
        return false;
    auto dot = in.name.find_last_of('.');
    auto last = dot == std::string::npos ? in.name : in.name.substr(dot + 1);
    return in.options.front().value == last;
}

} // namespace

Answers answer_page(const Page& page, const ScriptedAnswers& scripted)
{
    Answers out;
    for (const auto* in : page.inputs()) {
        auto it = scripted.answers_by_name.find(in->name);
        if (it == scripted.answers_by_name.end()) {
            if (in->prefill)
                out[in->name] = *in->prefill;
            continue;
        }
        const auto& v = it->second;
        if (is_feature_checkbox(*in)) {
            if (!v.empty())
                out[in->name] = in->options.front().value;
        } else if (in->kind == InputKind::Radio || in->kind == InputKind::Select) {
            if (offers(*in, v))
                out[in->name] = v;
        } else if (in->kind == InputKind::Checkbox && !in->value_type) {
            std::string kept;
            for (const auto& n : split_commas(v))
                if (offers(*in, n))
                    kept += (kept.empty() ? "" : ",") + n;
            out[in->name] = kept;
        } else {
            out[in->name] = v;
        }
    }
    return out;
}

Session simulate(std::shared_ptr<const Service> service, GeneratorMode mode, const DataAdminClient* client,
                 const ScriptedAnswers& scripted)
{
    auto s = session_start(std::move(service), scripted.citizen_id, mode, client);
    std::size_t limit = 64;
    for_each_node(*s.service->family, [&](const Node&, const std::string&, const Node*) { limit += 8; });
    limit += s.service->catalog.functions.size();
    for (std::size_t cycle = 0; s.phase == Phase::Collecting; ++cycle) {
        if (cycle > limit)
            throw Error("simulation did not terminate");
        session_submit(s, answer_page(session_page(s), scripted), client);
    }
    session_report(s);
    return s;
}

std::string session_trace_json(const Session& s)
{
    ojson j;
    j["traceVersion"] = 1;
    j["service"] = s.service->name();
    j["mode"] = to_string(s.mode);
    j["citizenId"] = s.citizen_id;
    j["invoked"] = s.invoked;
    j["events"] = s.events;
    return j.dump(2);
}

} // namespace formweave
