#include <formweave/workflow.hpp>

#include <algorithm>

#include <json.hpp>

namespace formweave {

const DataFunction* FunctionCatalog::find(std::string_view name) const
{
    for (const auto& f : functions)
        if (f.name == name)
            return &f;
    return nullptr;
}

FunctionCatalog parse_catalog(std::string_view json_text)
{
    try {
        auto j = nlohmann::json::parse(json_text);
        FunctionCatalog cat;
        cat.service = j.at("service").get<std::string>();
        for (const auto& f : j.at("functions")) {
            DataFunction fn;
            fn.name = f.at("name").get<std::string>();
            fn.inputs = f.value("inputs", std::vector<std::string>{});
            fn.provides = f.at("provides").get<std::vector<std::string>>();
            cat.functions.push_back(std::move(fn));
        }
        return cat;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("catalog: ") + e.what());
    }
}

FunctionCatalog load_catalog(const std::filesystem::path& file)
{
    try {
        return parse_catalog(read_file(file));
    } catch (const ParseError& e) {
        throw ParseError(file.string() + ": " + e.what());
    }
}

std::vector<Diagnostic> validate_catalog(const FunctionCatalog& cat, const FeatureModel& family)
{
    std::vector<Diagnostic> out;
    if (cat.service != family.name())
        out.push_back({cat.service, "catalog-service", "catalog is for " + cat.service + ", model is " + family.name()});
    std::set<std::string> names;
    for (const auto& fn : cat.functions) {
        if (!is_identifier(fn.name))
            out.push_back({fn.name, "function-name", "not an identifier"});
        if (!names.insert(fn.name).second)
            out.push_back({fn.name, "function-duplicate", "function defined twice"});
        auto check = [&](const std::string& p) {
            const Node* n = find_node(family, p);
            if (!n) {
                out.push_back({p, "path-unresolved", fn.name + " names a path that is not in the model"});
                return;
            }
            if (n->is_multi() || inside_multi_subtree(family, p))
                out.push_back({p, "path-in-clone-subtree", fn.name + " names a multi-instance node"});
            if (!n->attribute || !n->is_feature())
                out.push_back({p, "path-no-attribute", fn.name + " names a node without an attribute"});
        };
        for (const auto& p : fn.inputs)
            check(p);
        for (const auto& p : fn.provides) {
            check(p);
            if (std::find(fn.inputs.begin(), fn.inputs.end(), p) != fn.inputs.end())
                out.push_back({p, "input-provided-overlap", fn.name + " both needs and provides this path"});
        }
    }
    return out;
}

Service load_service(const std::filesystem::path& model_file)
{
    Service s;
    s.family = std::make_shared<const FeatureModel>(load_feature_model(model_file));
    auto fname = model_file.filename().string();
    auto stem = fname.substr(0, fname.size() - std::min<std::size_t>(fname.size(), std::string_view(".fm.xml").size()));
    auto cat_file = model_file.parent_path() / (stem + ".catalog.json");
    if (std::filesystem::exists(cat_file)) {
        s.catalog = load_catalog(cat_file);
        auto diags = validate_catalog(s.catalog, *s.family);
        if (!diags.empty())
            throw ModelError(std::move(diags));
    } else {
        s.catalog.service = s.family->name();
    }
    return s;
}

std::string describe(const WorkflowStep& s)
{
    if (const auto* a = std::get_if<step::AskUser>(&s)) {
        std::string out = "ask";
        for (const auto& i : a->items)
            out += " " + i.path;
        return out;
    }
    if (const auto* c = std::get_if<step::CallFunction>(&s))
        return "call " + c->function;
    return "finish";
}

bool inputs_satisfied(const ApplicationFeatureModel& app, const DataFunction& fn)
{
    return std::all_of(fn.inputs.begin(), fn.inputs.end(), [&](const std::string& p) { return app.value(p) != nullptr; });
}

namespace {

std::set<std::string> open_value_paths(const std::vector<OpenItem>& items)
{
    std::set<std::string> out;
    for (const auto& i : items)
        if (i.kind == ItemKind::Value)
            out.insert(i.path);
    return out;
}

int count_yield(const std::set<std::string>& open, const DataFunction& fn)
{
    int n = 0;
    for (const auto& p : fn.provides)
        n += open.count(p) ? 1 : 0;
    return n;
}

// Every input is set already or may still be set.
bool potentially_invocable(const ApplicationFeatureModel& app, const DataFunction& fn)
{
    return std::all_of(fn.inputs.begin(), fn.inputs.end(),
                       [&](const std::string& p) { return app.value(p) || !app.eliminated(p); });
}

} // namespace

int yield_of(const ApplicationFeatureModel& app, const DataFunction& fn, const InvocationHistory& history)
{
    if (history.count(fn.name) || !inputs_satisfied(app, fn))
        return 0;
    return count_yield(open_value_paths(open_items(app)), fn);
}

WorkflowStep FixedStrategy::next(const ApplicationFeatureModel& app, const FunctionCatalog& cat,
                                 const InvocationHistory& history) const
{
    if (is_complete(app))
        return step::Finish{};
    auto items = open_items(app);

    auto coverable = [&](const OpenItem& item) {
        if (item.kind != ItemKind::Value)
            return false;
        return std::any_of(cat.functions.begin(), cat.functions.end(), [&](const DataFunction& fn) {
            return !history.count(fn.name) && potentially_invocable(app, fn)
                && std::find(fn.provides.begin(), fn.provides.end(), item.path) != fn.provides.end();
        });
    };
    step::AskUser mandatory;
    for (const auto& i : items)
        if (i.mandatory && !coverable(i))
            mandatory.items.push_back(i);
    if (!mandatory.items.empty())
        return mandatory;

    auto open = open_value_paths(items);
    const DataFunction* best = nullptr;
    int best_yield = 0;
    for (const auto& fn : cat.functions) {
        if (history.count(fn.name) || !inputs_satisfied(app, fn))
            continue;
        int y = count_yield(open, fn);
        if (y > best_yield || (y == best_yield && y > 0 && fn.name < best->name)) {
            best = &fn;
            best_yield = y;
        }
    }
    if (best)
        return step::CallFunction{best->name};

    step::AskUser optional;
    for (const auto& i : items)
        if (!i.mandatory)
            optional.items.push_back(i);
    if (!optional.items.empty())
        return optional;

    // Mandatory items that only an unreachable function could fill.
    if (!items.empty())
        return step::AskUser{items};
    throw Error("configuration is incomplete but has no open items");
}

WorkflowStep plan_next(const ApplicationFeatureModel& app, const FunctionCatalog& cat, const InvocationHistory& history)
{
    return FixedStrategy{}.next(app, cat, history);
}

ApplyResult apply_function_result(const ApplicationFeatureModel& app, const DataFunction& fn,
                                  const FunctionValues& result)
{
    ApplyResult out{app, {}};
    for (const auto& [path, text] : result) {
        if (std::find(fn.provides.begin(), fn.provides.end(), path) == fn.provides.end())
            throw Error(fn.name + " returned " + path + ", which it does not provide");
        const Node* n = find_node(*app.family, path);
        if (!n || !n->attribute)
            throw Error(fn.name + " returned " + path + ", which has no attribute");
        if (!out.app.selected(path)) {
            out.notices.push_back(fn.name + ": skipped " + path + " (not selected)");
            continue;
        }
        if (out.app.value(path)) {
            out.notices.push_back(fn.name + ": skipped " + path + " (already set)");
            continue;
        }
        out.app = specialize(out.app, decision::SetValue{path, Value::parse(n->attribute->type, text)});
    }
    return out;
}

} // namespace formweave
