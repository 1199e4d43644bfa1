#include <formweave/transform.hpp>

#include <algorithm>
#include <set>

#include <json.hpp>

namespace formweave {

std::string_view to_string(Direction d) noexcept
{
    switch (d) {
    case Direction::FmToCui: return "fm-to-cui";
    case Direction::CuiToFm: return "cui-to-fm";
    case Direction::FmToReport: return "fm-to-report";
    }
    return "?";
}

std::string_view to_string(Facet f) noexcept
{
    switch (f) {
    case Facet::Page: return "page";
    case Facet::Label: return "label";
    case Facet::Widget: return "widget";
    case Facet::Trailer: return "trailer";
    case Facet::Decode: return "decode";
    case Facet::Report: return "report";
    }
    return "?";
}

std::string widget_name(std::string_view instance_path, NamingStyle style)
{
    if (style == NamingStyle::Dotted)
        return std::string(instance_path);
    std::string out;
    for (char c : instance_path)
        if (c != '.')
            out += c;
    return out;
}

std::string instance_label(const InstanceEntry& e)
{
    std::string label = e.node->label();
    for (std::size_t i = e.path.find('['); i != std::string::npos; i = e.path.find('[', i + 1)) {
        auto close = e.path.find(']', i);
        label += " " + e.path.substr(i, close - i + 1);
    }
    return label;
}

ValidationError::ValidationError(std::vector<FieldError> errors)
    : Error([&] {
        std::string msg = "invalid answers";
        for (const auto& e : errors)
            msg += "; " + (e.name.empty() ? e.message : e.name + ": " + e.message);
        return msg;
    }())
    , errors_(std::move(errors))
{
}

IncompleteError::IncompleteError(std::vector<std::string> open_paths)
    : Error([&] {
        std::string msg = "configuration is not complete";
        for (std::size_t i = 0; i < open_paths.size(); ++i)
            msg += (i ? ", " : ": ") + open_paths[i];
        return msg;
    }())
    , open_paths_(std::move(open_paths))
{
}

// -- fm to cui ----------------------------------------------------------------

namespace {

bool is_item(const RuleContext& c, ItemKind k) { return c.item && c.item->kind == k; }

GroupStatus status_of(const RuleContext& c) { return group_status(c.app, c.tree, *c.entry); }

std::optional<std::string> prefill_of(const RuleContext& c)
{
    if (!c.prefills)
        return std::nullopt;
    auto it = c.prefills->find(c.entry->path);
    if (it == c.prefills->end())
        return std::nullopt;
    return it->second;
}

std::vector<Option> member_options(const RuleContext& c, const GroupStatus& st)
{
    std::vector<Option> opts;
    for (int m : st.undecided)
        opts.push_back({c.tree[m].node->name, instance_label(c.tree[m])});
    return opts;
}

ValueType attr_type(const RuleContext& c) { return c.entry->node->attribute->type; }

void push_input(const RuleContext& c, Emission& em, Input in)
{
    in.name = widget_name(c.entry->path, c.naming);
    in.label = em.label;
    in.prefill = prefill_of(c);
    em.emitted = in.name;
    em.page.widgets.push_back(std::move(in));
}

RuleSet make_fm_to_cui()
{
    RuleSet rs{Direction::FmToCui, {}};
    auto add = [&](std::string id, Facet facet, std::string cond, bool ext, auto applies, auto emit) {
        TransformationRule r;
        r.id = std::move(id);
        r.direction = Direction::FmToCui;
        r.facet = facet;
        r.condition = std::move(cond);
        r.extension = ext;
        r.applies = applies;
        r.emit = emit;
        rs.rules.push_back(std::move(r));
    };

    add("TR1", Facet::Page, "first element", false,
        [](const RuleContext&) { return true; },
        [](const RuleContext& c, Emission& em) {
            em.page.title = c.app.family->title();
            em.emitted = "page";
        });

    add("TR2", Facet::Label, "node has a description", false,
        [](const RuleContext& c) { return c.entry->node->description.has_value(); },
        [](const RuleContext& c, Emission& em) { em.label = instance_label(*c.entry); });
    add("EXT-NAME-LABEL", Facet::Label, "node has no description", true,
        [](const RuleContext& c) { return !c.entry->node->description; },
        [](const RuleContext& c, Emission& em) { em.label = instance_label(*c.entry); });

    add("EXT-SINGLETON", Facet::Widget, "group with one undecided member that must be chosen", true,
        [](const RuleContext& c) {
            if (!is_item(c, ItemKind::Group))
                return false;
            auto st = status_of(c);
            return st.undecided.size() == 1 && st.remaining_min >= 1;
        },
        [](const RuleContext& c, Emission& em) {
            auto st = status_of(c);
            Decision d = decision::ResolveGroup{c.entry->path, {c.tree[st.undecided.front()].path}};
            em.emitted = "forced " + describe(d);
            em.forced.push_back(std::move(d));
        });
    add("TR4", Facet::Widget, "group with more than one undecided member, at most one more selectable", false,
        [](const RuleContext& c) {
            if (!is_item(c, ItemKind::Group))
                return false;
            auto st = status_of(c);
            return st.undecided.size() > 1 && st.remaining_max == 1;
        },
        [](const RuleContext& c, Emission& em) {
            auto st = status_of(c);
            Input in;
            in.kind = InputKind::Radio;
            in.required = st.remaining_min >= 1;
            in.options = member_options(c, st);
            push_input(c, em, std::move(in));
        });
    add("EXT-OR", Facet::Widget, "group where several members may be selected, or an optional single member", true,
        [](const RuleContext& c) { return is_item(c, ItemKind::Group); },
        [](const RuleContext& c, Emission& em) {
            auto st = status_of(c);
            Input in;
            in.kind = InputKind::Checkbox;
            in.required = st.remaining_min >= 1;
            in.options = member_options(c, st);
            push_input(c, em, std::move(in));
        });
    add("TR3", Facet::Widget, "attribute of type string, integer or float", false,
        [](const RuleContext& c) {
            if (!is_item(c, ItemKind::Value))
                return false;
            auto t = attr_type(c);
            return t == ValueType::String || t == ValueType::Integer || t == ValueType::Float;
        },
        [](const RuleContext& c, Emission& em) {
            Input in;
            in.kind = InputKind::Text;
            in.value_type = attr_type(c);
            in.required = true;
            push_input(c, em, std::move(in));
        });
    add("EXT-DATE", Facet::Widget, "attribute of type date", true,
        [](const RuleContext& c) { return is_item(c, ItemKind::Value) && attr_type(c) == ValueType::Date; },
        [](const RuleContext& c, Emission& em) {
            Input in;
            in.kind = InputKind::Text;
            in.value_type = ValueType::Date;
            in.required = true;
            push_input(c, em, std::move(in));
        });
    add("EXT-BOOL", Facet::Widget, "attribute of type boolean", true,
        [](const RuleContext& c) { return is_item(c, ItemKind::Value) && attr_type(c) == ValueType::Boolean; },
        [](const RuleContext& c, Emission& em) {
            Input in;
            in.kind = InputKind::Checkbox;
            in.value_type = ValueType::Boolean;
            in.options = {{"true", em.label}};
            push_input(c, em, std::move(in));
        });
    add("EXT-OPT", Facet::Widget, "undecided optional feature", true,
        [](const RuleContext& c) { return is_item(c, ItemKind::Optional); },
        [](const RuleContext& c, Emission& em) {
            Input in;
            in.kind = InputKind::Checkbox;
            in.options = {{c.entry->node->name, em.label}};
            push_input(c, em, std::move(in));
        });
    add("EXT-CLONE", Facet::Widget, "multi-instance feature without a clone count", true,
        [](const RuleContext& c) { return is_item(c, ItemKind::CloneCount); },
        [](const RuleContext& c, Emission& em) {
            Input in;
            in.kind = InputKind::Text;
            in.value_type = ValueType::Integer;
            in.required = c.item->mandatory;
            push_input(c, em, std::move(in));
        });

    add("EXT-SUBMIT", Facet::Trailer, "end of page", true,
        [](const RuleContext&) { return true; },
        [](const RuleContext&, Emission& em) {
            em.page.widgets.push_back(Navigation{NavigationKind::Submit});
            em.emitted = "submit";
        });
    return rs;
}

const TransformationRule* first_match(const RuleSet& rs, Facet facet, const RuleContext& c)
{
    for (const auto& r : rs.rules)
        if (r.facet == facet && r.applies && r.applies(c))
            return &r;
    return nullptr;
}

} // namespace

const RuleSet& default_fm_to_cui_rules()
{
    static const RuleSet rs = make_fm_to_cui();
    return rs;
}

FormPlan fm_to_cui(const ApplicationFeatureModel& app, const std::vector<OpenItem>& scope, const RuleSet& rules,
                   const FmToCuiOptions& options)
{
    if (rules.direction != Direction::FmToCui)
        throw Error("fm_to_cui needs a fm-to-cui rule set");
    InstanceTree tree(app);
    Emission em;
    em.page.id = options.page_id;
    FormPlan plan;

    RuleContext page_ctx{app, tree, nullptr, nullptr, options.naming, &options.prefills};
    if (const auto* r = first_match(rules, Facet::Page, page_ctx)) {
        r->emit(page_ctx, em);
        plan.trace.push_back({"", r->id, "", em.emitted});
    }

    std::vector<const OpenItem*> ordered;
    for (const auto& item : scope)
        ordered.push_back(&item);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const OpenItem* a, const OpenItem* b) { return tree.index_of(a->path) < tree.index_of(b->path); });

    for (const auto* item : ordered) {
        const auto* entry = tree.find(item->path);
        if (!entry)
            throw RuleCoverageError("scope item " + item->path + " is not in the model");
        RuleContext ctx{app, tree, entry, item, options.naming, &options.prefills};
        em.label.clear();
        em.emitted.clear();
        std::string label_rule;
        if (const auto* r = first_match(rules, Facet::Label, ctx)) {
            r->emit(ctx, em);
            label_rule = r->id;
        }
        const auto* r = first_match(rules, Facet::Widget, ctx);
        if (!r)
            throw RuleCoverageError("no rule matches " + std::string(to_string(item->kind)) + " item " + item->path);
        r->emit(ctx, em);
        plan.trace.push_back({item->path, r->id, label_rule, em.emitted});
    }

    if (const auto* r = first_match(rules, Facet::Trailer, page_ctx)) {
        em.emitted.clear();
        r->emit(page_ctx, em);
        plan.trace.push_back({"", r->id, "", em.emitted});
    }

    plan.page = std::move(em.page);
    plan.forced = std::move(em.forced);
    return plan;
}

// -- cui to fm ----------------------------------------------------------------

namespace {

std::vector<std::string> split_names(const std::string& s)
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

std::string member_path(const DecodeContext& c, const std::string& name)
{
    bool offered = std::any_of(c.input.options.begin(), c.input.options.end(),
                               [&](const Option& o) { return o.value == name; });
    if (!offered)
        throw Error("'" + name + "' is not one of the offered options");
    return join_path(c.entry.path, name);
}

RuleSet make_cui_to_fm()
{
    RuleSet rs{Direction::CuiToFm, {}};
    auto add = [&](std::string id, std::string cond, bool ext, auto decodes, auto decode) {
        TransformationRule r;
        r.id = std::move(id);
        r.direction = Direction::CuiToFm;
        r.facet = Facet::Decode;
        r.condition = std::move(cond);
        r.extension = ext;
        r.decodes = decodes;
        r.decode = decode;
        rs.rules.push_back(std::move(r));
    };

    add("UF-RADIO", "radio or select on a group: chosen member selected, others eliminated", false,
        [](const DecodeContext& c) {
            return c.entry.role == InstanceRole::Group
                && (c.input.kind == InputKind::Radio || c.input.kind == InputKind::Select);
        },
        [](const DecodeContext& c) -> Decision {
            decision::ResolveGroup g{c.entry.path, {}};
            if (c.answer && !c.answer->empty())
                g.members.push_back(member_path(c, *c.answer));
            return g;
        });
    add("UF-CHECKSET", "checkbox set on a group: listed members selected, others eliminated", true,
        [](const DecodeContext& c) { return c.entry.role == InstanceRole::Group && c.input.kind == InputKind::Checkbox; },
        [](const DecodeContext& c) -> Decision {
            decision::ResolveGroup g{c.entry.path, {}};
            if (c.answer)
                for (const auto& n : split_names(*c.answer))
                    g.members.push_back(member_path(c, n));
            return g;
        });
    add("UF-BOOL", "boolean checkbox: value true when checked, false when absent", true,
        [](const DecodeContext& c) {
            return c.input.kind == InputKind::Checkbox && c.input.value_type == ValueType::Boolean;
        },
        [](const DecodeContext& c) -> Decision {
            bool v = c.answer && !c.answer->empty() && Value::parse(ValueType::Boolean, *c.answer) == Value::boolean(true);
            return decision::SetValue{c.entry.path, Value::boolean(v)};
        });
    add("UF-OPT", "optional checkbox: select when present, eliminate when absent", true,
        [](const DecodeContext& c) { return c.input.kind == InputKind::Checkbox && c.entry.role != InstanceRole::Group; },
        [](const DecodeContext& c) -> Decision {
            if (c.answer && !c.answer->empty())
                return decision::Select{c.entry.path};
            return decision::Eliminate{c.entry.path};
        });
    add("UF-CLONE", "clone count text on a multi-instance feature", true,
        [](const DecodeContext& c) { return c.input.kind == InputKind::Text && c.entry.role == InstanceRole::Container; },
        [](const DecodeContext& c) -> Decision {
            if (!c.answer || c.answer->empty())
                return decision::Clone{c.entry.path, 0};
            auto v = Value::parse(ValueType::Integer, *c.answer);
            auto n = std::get<std::int64_t>(v.storage());
            if (n < 0 || n > 1000000)
                throw Error("clone count out of range");
            return decision::Clone{c.entry.path, static_cast<int>(n)};
        });
    add("UF-TEXT", "text input on an attribute: value set after lexical check", false,
        [](const DecodeContext& c) { return c.input.kind == InputKind::Text && c.entry.node->attribute.has_value(); },
        [](const DecodeContext& c) -> Decision {
            return decision::SetValue{c.entry.path, Value::parse(c.entry.node->attribute->type, c.answer ? *c.answer : "")};
        });
    return rs;
}

// Whether `d` no longer needs applying, and if so whether the model agrees
// with it. nullopt: still open.
std::optional<bool> settled(const ApplicationFeatureModel& app, const InstanceTree& tree, const Input& input,
                            const Decision& d)
{
    if (const auto* s = std::get_if<decision::Select>(&d)) {
        auto st = app.state(s->path);
        if (st == DecisionState::Undecided)
            return std::nullopt;
        return st == DecisionState::Selected;
    }
    if (const auto* e = std::get_if<decision::Eliminate>(&d)) {
        auto st = app.state(e->path);
        if (st == DecisionState::Undecided)
            return std::nullopt;
        return st == DecisionState::Eliminated;
    }
    if (const auto* v = std::get_if<decision::SetValue>(&d)) {
        const auto* cur = app.value(v->path);
        if (!cur)
            return std::nullopt;
        return *cur == v->value;
    }
    if (const auto* g = std::get_if<decision::ResolveGroup>(&d)) {
        bool open = false;
        for (const auto& o : input.options) {
            auto p = join_path(g->group, o.value);
            bool chosen = std::find(g->members.begin(), g->members.end(), p) != g->members.end();
            auto st = app.state(p);
            if (st == DecisionState::Undecided)
                open = true;
            else if ((st == DecisionState::Selected) != chosen)
                return false;
        }
        if (open)
            return std::nullopt;
        (void)tree;
        return true;
    }
    const auto& c = std::get<decision::Clone>(d);
    if (auto n = app.clone_count(c.path))
        return *n == c.count;
    if (app.eliminated(c.path))
        return c.count == 0;
    return std::nullopt;
}

} // namespace

const RuleSet& default_cui_to_fm_rules()
{
    static const RuleSet rs = make_cui_to_fm();
    return rs;
}

ApplicationFeatureModel apply_forced(ApplicationFeatureModel app, const std::vector<Decision>& forced,
                                     TransformationTrace& trace)
{
    for (const auto& d : forced) {
        if (const auto* g = std::get_if<decision::ResolveGroup>(&d);
            g && std::all_of(g->members.begin(), g->members.end(), [&](const std::string& m) { return app.selected(m); })) {
            trace.push_back({target_path(d), "forced", "", "already " + describe(d)});
            continue;
        }
        app = specialize(app, d);
        trace.push_back({target_path(d), "forced", "", describe(d)});
    }
    return app;
}

CuiToFmResult cui_to_fm(const ApplicationFeatureModel& app, const FormPlan& plan, const Answers& answers,
                        const RuleSet& rules, NamingStyle naming)
{
    if (rules.direction != Direction::CuiToFm)
        throw Error("cui_to_fm needs a cui-to-fm rule set");
    InstanceTree tree(app);
    const auto inputs = plan.page.inputs();

    // widget name -> instance path
    std::map<std::string, std::string> paths;
    if (naming == NamingStyle::Dotted) {
        for (const auto* in : inputs)
            paths[in->name] = in->name;
    } else {
        std::map<std::string, std::vector<std::string>> by_name;
        for (const auto& e : tree.entries())
            by_name[widget_name(e.path, naming)].push_back(e.path);
        for (const auto* in : inputs) {
            auto it = by_name.find(in->name);
            if (it != by_name.end() && it->second.size() == 1)
                paths[in->name] = it->second.front();
        }
    }

    std::vector<FieldError> errors;
    for (const auto& [name, _] : answers)
        if (!plan.page.find_input(name))
            errors.push_back({name, "not a field of this page"});

    struct Pending {
        const Input* input;
        const TransformationRule* rule;
        Decision decision;
    };
    std::vector<Pending> pending;
    for (const auto* in : inputs) {
        auto pit = paths.find(in->name);
        const InstanceEntry* entry = pit == paths.end() ? nullptr : tree.find(pit->second);
        if (!entry) {
            errors.push_back({in->name, "does not name a node of the model"});
            continue;
        }
        auto ait = answers.find(in->name);
        const std::string* answer = ait == answers.end() ? nullptr : &ait->second;
        if (in->required && (!answer || answer->empty())) {
            errors.push_back({in->name, "required"});
            continue;
        }
        DecodeContext ctx{app, tree, *entry, *in, answer};
        const TransformationRule* rule = nullptr;
        for (const auto& r : rules.rules)
            if (r.decodes && r.decodes(ctx)) {
                rule = &r;
                break;
            }
        if (!rule) {
            errors.push_back({in->name, "no rule decodes this field"});
            continue;
        }
        try {
            pending.push_back({in, rule, rule->decode(ctx)});
        } catch (const Error& e) {
            errors.push_back({in->name, e.what()});
        }
    }
    if (!errors.empty())
        throw ValidationError(std::move(errors));

    CuiToFmResult out{app, {}};
    try {
        out.app = apply_forced(std::move(out.app), plan.forced, out.trace);
    } catch (const Error& e) {
        throw ValidationError(std::vector<FieldError>{{"", e.what()}});
    }
    for (const auto& p : pending) {
        InstanceTree now(out.app);
        auto done = settled(out.app, now, *p.input, p.decision);
        if (done) {
            if (!*done)
                throw ValidationError(std::vector<FieldError>{{p.input->name, "conflicts with an earlier answer: cannot " + describe(p.decision)}});
            out.trace.push_back({target_path(p.decision), p.rule->id, "", "already " + describe(p.decision)});
            continue;
        }
        try {
            out.app = specialize(out.app, p.decision);
        } catch (const Error& e) {
            throw ValidationError(std::vector<FieldError>{{p.input->name, e.what()}});
        }
        out.trace.push_back({target_path(p.decision), p.rule->id, "", describe(p.decision)});
    }
    return out;
}

// -- report -------------------------------------------------------------------

namespace {

RuleSet make_report()
{
    RuleSet rs{Direction::FmToReport, {}};
    auto add = [&](std::string id, std::string cond, auto applies, auto emit) {
        TransformationRule r;
        r.id = std::move(id);
        r.direction = Direction::FmToReport;
        r.facet = Facet::Report;
        r.condition = std::move(cond);
        r.applies = applies;
        r.emit = emit;
        rs.rules.push_back(std::move(r));
    };
    add("RP1", "selected node with an attribute value",
        [](const RuleContext& c) {
            return (c.entry->role == InstanceRole::Feature || c.entry->role == InstanceRole::Instance)
                && c.app.selected(c.entry->path) && c.app.value(c.entry->path);
        },
        [](const RuleContext& c, Emission& em) {
            em.fields.push_back({c.entry->path, instance_label(*c.entry), c.app.value(c.entry->path)->text()});
            em.emitted = c.entry->path;
        });
    add("RP2", "group with a selected member",
        [](const RuleContext& c) {
            if (c.entry->role != InstanceRole::Group || !c.app.selected(c.entry->path))
                return false;
            return std::any_of(c.entry->children.begin(), c.entry->children.end(),
                               [&](int m) { return c.app.selected(c.tree[m].path); });
        },
        [](const RuleContext& c, Emission& em) {
            std::string chosen;
            for (int m : c.entry->children)
                if (c.app.selected(c.tree[m].path))
                    chosen += (chosen.empty() ? "" : ",") + c.tree[m].node->name;
            em.fields.push_back({c.entry->path, instance_label(*c.entry), chosen});
            em.emitted = c.entry->path;
        });
    return rs;
}

} // namespace

const RuleSet& default_report_rules()
{
    static const RuleSet rs = make_report();
    return rs;
}

ReportResult fm_to_report(const ApplicationFeatureModel& app, const std::string& citizen_id, const RuleSet& rules)
{
    if (rules.direction != Direction::FmToReport)
        throw Error("fm_to_report needs a fm-to-report rule set");
    if (!is_complete(app)) {
        std::vector<std::string> open;
        for (const auto& item : open_items(app))
            open.push_back(item.path);
        for (const auto& v : check_constraints(app))
            for (const auto& p : v.paths)
                if (std::find(open.begin(), open.end(), p) == open.end())
                    open.push_back(p);
        throw IncompleteError(std::move(open));
    }
    InstanceTree tree(app);
    ReportResult out;
    out.report.service_name = app.family->name();
    out.report.citizen_id = citizen_id;
    Emission em;
    for (const auto& e : tree.entries()) {
        RuleContext ctx{app, tree, &e, nullptr, NamingStyle::Dotted, nullptr};
        for (const auto& r : rules.rules) {
            if (r.facet != Facet::Report || !r.applies(ctx))
                continue;
            r.emit(ctx, em);
            out.trace.push_back({e.path, r.id, "", em.emitted});
            break;
        }
    }
    out.report.fields = std::move(em.fields);
    return out;
}

std::string rule_registry_json()
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const RuleSet* rs : {&default_fm_to_cui_rules(), &default_cui_to_fm_rules(), &default_report_rules()})
        for (const auto& r : rs->rules)
            arr.push_back({{"id", r.id},
                           {"direction", to_string(r.direction)},
                           {"facet", to_string(r.facet)},
                           {"condition", r.condition},
                           {"extension", r.extension}});
    return arr.dump(2);
}

} // namespace formweave
