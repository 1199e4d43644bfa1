#include <formweave/configuration.hpp>

#include "model_xml.hpp"
#include "xml_dom.hpp"

#include <algorithm>
#include <charconv>

namespace formweave {

std::string_view to_string(DecisionState s) noexcept
{
    switch (s) {
    case DecisionState::Selected: return "selected";
    case DecisionState::Eliminated: return "eliminated";
    default: return "undecided";
    }
}

std::string_view to_string(ItemKind k) noexcept
{
    switch (k) {
    case ItemKind::Value: return "value";
    case ItemKind::Optional: return "optional";
    case ItemKind::Group: return "group";
    case ItemKind::CloneCount: return "clone-count";
    }
    return "value";
}

std::string_view to_string(ItemTag t) noexcept
{
    switch (t) {
    case ItemTag::Mandatory: return "mandatory";
    case ItemTag::Optional: return "optional";
    case ItemTag::Group: return "group";
    }
    return "mandatory";
}

DecisionState ApplicationFeatureModel::state(std::string_view path) const
{
    auto it = states.find(path);
    return it == states.end() ? DecisionState::Undecided : it->second;
}

const Value* ApplicationFeatureModel::value(std::string_view path) const
{
    auto it = values.find(path);
    return it == values.end() ? nullptr : &it->second;
}

std::optional<int> ApplicationFeatureModel::clone_count(std::string_view path) const
{
    auto it = clones.find(path);
    if (it == clones.end())
        return std::nullopt;
    return it->second;
}

bool operator==(const ApplicationFeatureModel& a, const ApplicationFeatureModel& b)
{
    bool same_family = a.family == b.family || (a.family && b.family && *a.family == *b.family);
    return same_family && a.states == b.states && a.clones == b.clones && a.values == b.values;
}

// -- instance tree ------------------------------------------------------------

InstanceTree::InstanceTree(const FeatureModel& family, const std::map<std::string, int, std::less<>>& clones)
{
    add(family.root, family.root.name, InstanceRole::Feature, -1, 0, clones);
}

InstanceTree::InstanceTree(const ApplicationFeatureModel& app) : InstanceTree(*app.family, app.clones) {}

void InstanceTree::add(const Node& node, std::string path, InstanceRole role, int parent, int clone_index,
                       const std::map<std::string, int, std::less<>>& clones)
{
    int idx = static_cast<int>(entries_.size());
    entries_.push_back(InstanceEntry{path, &node, role, parent, clone_index, {}});
    index_.emplace(path, idx);
    if (parent >= 0)
        entries_[static_cast<std::size_t>(parent)].children.push_back(idx);

    if (role == InstanceRole::Container) {
        auto it = clones.find(path);
        int count = it == clones.end() ? 0 : it->second;
        for (int i = 1; i <= count; ++i)
            add(node, path + "[" + std::to_string(i) + "]", InstanceRole::Instance, idx, i, clones);
        return;
    }
    for (auto& child : node.children) {
        InstanceRole child_role = InstanceRole::Feature;
        if (child.kind == NodeKind::Group)
            child_role = InstanceRole::Group;
        else if (child.is_multi())
            child_role = InstanceRole::Container;
        else if (child.kind == NodeKind::Reference)
            continue;
        add(child, join_path(path, child.name), child_role, idx, 0, clones);
    }
}

int InstanceTree::index_of(std::string_view path) const
{
    auto it = index_.find(path);
    return it == index_.end() ? -1 : it->second;
}

const InstanceEntry* InstanceTree::find(std::string_view path) const
{
    int i = index_of(path);
    return i < 0 ? nullptr : &entries_[static_cast<std::size_t>(i)];
}

GroupStatus group_status(const ApplicationFeatureModel& app, const InstanceTree& tree, const InstanceEntry& group)
{
    GroupStatus st;
    for (int c : group.children) {
        auto s = app.state(tree[c].path);
        if (s == DecisionState::Selected)
            ++st.selected;
        else if (s == DecisionState::Undecided)
            st.undecided.push_back(c);
    }
    st.remaining_min = std::max(0, group.node->group.min - st.selected);
    st.remaining_max = std::max(0, group.node->group.max - st.selected);
    return st;
}

// -- decisions ----------------------------------------------------------------

DecisionError::DecisionError(std::string path, const std::string& message)
    : Error(path + ": " + message)
    , path_(std::move(path))
{
}

ConflictError::ConflictError(std::string trigger, std::string conflicting, const std::string& reason)
    : Error("conflict between " + (trigger.empty() ? std::string("model") : trigger) + " and " + conflicting + ": "
            + reason)
    , trigger_(std::move(trigger))
    , conflicting_(std::move(conflicting))
{
}

std::string describe(const Decision& d)
{
    struct V {
        std::string operator()(const decision::Select& s) const { return "select " + s.path; }
        std::string operator()(const decision::Eliminate& e) const { return "eliminate " + e.path; }
        std::string operator()(const decision::SetValue& v) const { return "set " + v.path + "=" + v.value.text(); }
        std::string operator()(const decision::ResolveGroup& g) const
        {
            std::string out = "resolve " + g.group + " {";
            for (std::size_t i = 0; i < g.members.size(); ++i)
                out += (i ? "," : "") + g.members[i];
            return out + "}";
        }
        std::string operator()(const decision::Clone& c) const
        {
            return "clone " + c.path + " x" + std::to_string(c.count);
        }
    };
    return std::visit(V{}, d);
}

const std::string& target_path(const Decision& d)
{
    struct V {
        const std::string& operator()(const decision::Select& s) const { return s.path; }
        const std::string& operator()(const decision::Eliminate& e) const { return e.path; }
        const std::string& operator()(const decision::SetValue& v) const { return v.path; }
        const std::string& operator()(const decision::ResolveGroup& g) const { return g.group; }
        const std::string& operator()(const decision::Clone& c) const { return c.path; }
    };
    return std::visit(V{}, d);
}

namespace {

class Propagator {
public:
    Propagator(ApplicationFeatureModel& app, const std::string& trigger) : app_(app), trigger_(trigger) {}

    void run()
    {
        const auto& family = *app_.family;
        set(family.root.name, DecisionState::Selected, "the root is always selected");
        bool again = true;
        while (again) {
            changed_ = false;
            InstanceTree tree(app_);
            for (const auto& e : tree.entries())
                visit(tree, e);
            for (const auto& k : family.constraints)
                apply_constraint(k);
            again = changed_;
        }
    }

private:
    void set(const std::string& path, DecisionState s, const std::string& because)
    {
        auto cur = app_.state(path);
        if (cur == s)
            return;
        if (cur != DecisionState::Undecided)
            throw ConflictError(trigger_, path,
                                path + " is " + std::string(to_string(cur)) + " but " + because);
        app_.states[path] = s;
        changed_ = true;
    }

    void visit(const InstanceTree& tree, const InstanceEntry& e)
    {
        auto st = app_.state(e.path);
        if (st == DecisionState::Selected) {
            if (e.parent >= 0)
                set(tree[e.parent].path, DecisionState::Selected, "its descendant " + e.path + " is selected");
            switch (e.role) {
            case InstanceRole::Feature:
            case InstanceRole::Instance:
                for (int c : e.children) {
                    const auto& ch = tree[c];
                    bool forced = ch.role == InstanceRole::Group
                        || (ch.node->kind == NodeKind::Solitary && ch.node->cardinality.is_mandatory());
                    if (forced)
                        set(ch.path, DecisionState::Selected, "it is mandatory under " + e.path);
                }
                break;
            case InstanceRole::Container: {
                const auto& card = e.node->cardinality;
                auto count = app_.clone_count(e.path);
                if (!count && !card.is_unbounded() && card.min == card.max) {
                    app_.clones[e.path] = card.min;
                    changed_ = true;
                } else if (count && *count == 0) {
                    throw ConflictError(trigger_, e.path, e.path + " is selected with zero clones");
                }
                for (int c : e.children)
                    set(tree[c].path, DecisionState::Selected, "it is a clone of " + e.path);
                break;
            }
            case InstanceRole::Group: {
                auto gs = group_status(app_, tree, e);
                const auto& g = e.node->group;
                if (gs.selected > g.max)
                    throw ConflictError(trigger_, e.path,
                                        "more than " + std::to_string(g.max) + " members selected in " + e.path);
                if (gs.selected + static_cast<int>(gs.undecided.size()) < g.min)
                    throw ConflictError(trigger_, e.path,
                                        "fewer than " + std::to_string(g.min) + " members remain selectable in "
                                            + e.path);
                if (gs.selected == g.max)
                    for (int c : gs.undecided)
                        set(tree[c].path, DecisionState::Eliminated, "group " + e.path + " is full");
                break;
            }
            }
        } else if (st == DecisionState::Eliminated) {
            if (e.role == InstanceRole::Container) {
                auto count = app_.clone_count(e.path);
                if (count && *count > 0)
                    throw ConflictError(trigger_, e.path, e.path + " is eliminated but has clones");
            }
            for (int c : e.children)
                set(tree[c].path, DecisionState::Eliminated, "its ancestor " + e.path + " is eliminated");
        }
    }

    void apply_constraint(const CrossTreeConstraint& k)
    {
        auto a = app_.state(k.from);
        auto b = app_.state(k.to);
        if (k.kind == ConstraintKind::Requires) {
            if (a == DecisionState::Selected)
                set(k.to, DecisionState::Selected, k.from + " requires it");
            if (b == DecisionState::Eliminated)
                set(k.from, DecisionState::Eliminated, "it requires the eliminated " + k.to);
        } else {
            if (a == DecisionState::Selected)
                set(k.to, DecisionState::Eliminated, k.from + " excludes it");
            if (b == DecisionState::Selected)
                set(k.from, DecisionState::Eliminated, "it excludes the selected " + k.to);
        }
    }

    ApplicationFeatureModel& app_;
    const std::string& trigger_;
    bool changed_ = false;
};

} // namespace

void propagate(ApplicationFeatureModel& app, const std::string& trigger)
{
    Propagator(app, trigger).run();
}

ApplicationFeatureModel new_configuration(std::shared_ptr<const FeatureModel> family)
{
    ApplicationFeatureModel app;
    app.family = std::move(family);
    propagate(app);
    return app;
}

namespace {

const InstanceEntry& resolve(const InstanceTree& tree, const std::string& path)
{
    const auto* e = tree.find(path);
    if (!e)
        throw DecisionError(path, "no such node");
    return *e;
}

void require_undecided(const ApplicationFeatureModel& app, const std::string& path, DecisionState wanted)
{
    auto cur = app.state(path);
    if (cur == DecisionState::Undecided)
        return;
    if (cur == wanted)
        throw DecisionError(path, "already decided");
    throw ConflictError(path, path, "it was already " + std::string(to_string(cur)));
}

struct Applier {
    ApplicationFeatureModel& app;
    const InstanceTree& tree;

    void operator()(const decision::Select& d) const
    {
        const auto& e = resolve(tree, d.path);
        if (e.role == InstanceRole::Group)
            throw DecisionError(d.path, "groups are decided with a group resolution");
        require_undecided(app, d.path, DecisionState::Selected);
        app.states[d.path] = DecisionState::Selected;
    }

    void operator()(const decision::Eliminate& d) const
    {
        const auto& e = resolve(tree, d.path);
        if (e.role == InstanceRole::Group)
            throw DecisionError(d.path, "groups are decided with a group resolution");
        if (e.parent < 0)
            throw DecisionError(d.path, "the root cannot be eliminated");
        require_undecided(app, d.path, DecisionState::Eliminated);
        app.states[d.path] = DecisionState::Eliminated;
    }

    void operator()(const decision::SetValue& d) const
    {
        const auto& e = resolve(tree, d.path);
        if (!e.node->attribute || e.role == InstanceRole::Container || e.role == InstanceRole::Group)
            throw DecisionError(d.path, "node has no attribute");
        if (!app.selected(d.path))
            throw DecisionError(d.path, "values can only be set on selected nodes");
        if (app.value(d.path))
            throw DecisionError(d.path, "value already set");
        if (d.value.type() != e.node->attribute->type)
            throw DecisionError(d.path, "expected a " + std::string(to_string(e.node->attribute->type)) + " value, got "
                                            + std::string(to_string(d.value.type())));
        app.values[d.path] = d.value;
    }

    void operator()(const decision::ResolveGroup& d) const
    {
        const auto& g = resolve(tree, d.group);
        if (g.role != InstanceRole::Group)
            throw DecisionError(d.group, "not a feature group");
        if (!app.selected(d.group))
            throw DecisionError(d.group, "group is not active");
        auto gs = group_status(app, tree, g);
        if (gs.undecided.empty())
            throw DecisionError(d.group, "group already resolved");
        for (const auto& m : d.members) {
            int idx = tree.index_of(m);
            if (idx < 0 || std::find(g.children.begin(), g.children.end(), idx) == g.children.end())
                throw DecisionError(m, "not a member of " + d.group);
            if (app.eliminated(m))
                throw ConflictError(d.group, m, m + " was already eliminated");
        }
        for (int c : gs.undecided) {
            const auto& p = tree[c].path;
            bool chosen = std::find(d.members.begin(), d.members.end(), p) != d.members.end();
            app.states[p] = chosen ? DecisionState::Selected : DecisionState::Eliminated;
        }
        int total = 0;
        for (int c : g.children)
            total += app.selected(tree[c].path) ? 1 : 0;
        const auto& card = g.node->group;
        if (total < card.min || total > card.max)
            throw DecisionError(d.group, std::to_string(total) + " members chosen, group allows ["
                                             + std::to_string(card.min) + ".." + std::to_string(card.max) + "]");
    }

    void operator()(const decision::Clone& d) const
    {
        const auto& e = resolve(tree, d.path);
        if (e.role != InstanceRole::Container)
            throw DecisionError(d.path, "not a multi-instance feature");
        if (app.clone_count(d.path))
            throw DecisionError(d.path, "clone count already decided");
        if (app.eliminated(d.path))
            throw ConflictError(d.path, d.path, "it was already eliminated");
        if (!e.node->cardinality.admits(d.count))
            throw DecisionError(d.path, "clone count " + std::to_string(d.count) + " outside cardinality");
        if (d.count == 0) {
            if (app.selected(d.path))
                throw ConflictError(d.path, d.path, "it is selected and needs at least one clone");
            app.states[d.path] = DecisionState::Eliminated;
            return;
        }
        app.states[d.path] = DecisionState::Selected;
        app.clones[d.path] = d.count;
    }
};

} // namespace

ApplicationFeatureModel specialize(const ApplicationFeatureModel& app, const Decision& d)
{
    ApplicationFeatureModel next = app;
    InstanceTree tree(app);
    std::visit(Applier{next, tree}, d);
    propagate(next, target_path(d));
    return next;
}

// -- queries ------------------------------------------------------------------

std::vector<OpenItem> open_items(const ApplicationFeatureModel& app)
{
    std::vector<OpenItem> items;
    InstanceTree tree(app);
    for (const auto& e : tree.entries()) {
        auto st = app.state(e.path);
        bool parent_selected = e.parent < 0 || app.selected(tree[e.parent].path);
        switch (e.role) {
        case InstanceRole::Feature:
            if (st == DecisionState::Undecided && parent_selected && e.node->kind == NodeKind::Solitary)
                items.push_back({ItemKind::Optional, ItemTag::Optional, false, e.path});
            [[fallthrough]];
        case InstanceRole::Instance:
            if (st == DecisionState::Selected && e.node->attribute && !app.value(e.path))
                items.push_back({ItemKind::Value, ItemTag::Mandatory, true, e.path});
            break;
        case InstanceRole::Container:
            if (parent_selected && st != DecisionState::Eliminated && !app.clone_count(e.path)) {
                bool required = st == DecisionState::Selected;
                items.push_back({ItemKind::CloneCount, required ? ItemTag::Mandatory : ItemTag::Optional, required,
                                 e.path});
            }
            break;
        case InstanceRole::Group:
            if (st == DecisionState::Selected) {
                auto gs = group_status(app, tree, e);
                if (!gs.undecided.empty())
                    items.push_back({ItemKind::Group, ItemTag::Group, gs.remaining_min > 0, e.path});
            }
            break;
        }
    }
    return items;
}

std::vector<Violation> check_constraints(const ApplicationFeatureModel& app)
{
    std::vector<Violation> out;
    InstanceTree tree(app);
    for (const auto& e : tree.entries()) {
        auto st = app.state(e.path);
        bool parent_selected = e.parent < 0 || app.selected(tree[e.parent].path);
        if (st == DecisionState::Selected && !parent_selected)
            out.push_back({"parent", {e.path, tree[e.parent].path}, e.path + " is selected but its parent is not"});

        if ((e.role == InstanceRole::Feature || e.role == InstanceRole::Container)
            && e.node->kind == NodeKind::Solitary && e.node->cardinality.is_mandatory() && parent_selected
            && st == DecisionState::Eliminated)
            out.push_back({"cardinality", {e.path}, e.path + " is mandatory but eliminated"});

        if (e.role == InstanceRole::Container && st == DecisionState::Selected) {
            auto count = app.clone_count(e.path);
            if (count && !e.node->cardinality.admits(*count))
                out.push_back({"cardinality", {e.path}, std::to_string(*count) + " clones outside cardinality"});
        }
        if (e.role == InstanceRole::Group && st == DecisionState::Selected) {
            auto gs = group_status(app, tree, e);
            const auto& g = e.node->group;
            int reachable = gs.selected + static_cast<int>(gs.undecided.size());
            if (gs.selected > g.max || reachable < g.min) {
                Violation v{"group-cardinality", {e.path}, ""};
                for (int c : e.children)
                    if (app.selected(tree[c].path))
                        v.paths.push_back(tree[c].path);
                v.message = std::to_string(gs.selected) + " members selected in " + e.path + ", allowed ["
                    + std::to_string(g.min) + ".." + std::to_string(g.max) + "]";
                out.push_back(std::move(v));
            }
        }
    }
    for (const auto& k : app.family->constraints) {
        bool a = app.selected(k.from);
        if (k.kind == ConstraintKind::Requires && a && app.eliminated(k.to))
            out.push_back({"requires", {k.from, k.to}, k.from + " requires " + k.to});
        if (k.kind == ConstraintKind::Excludes && a && app.selected(k.to))
            out.push_back({"excludes", {k.from, k.to}, k.from + " excludes " + k.to});
    }
    for (const auto& [path, v] : app.values) {
        const auto* e = tree.find(path);
        if (!e || !e->node->attribute || !app.selected(path) || v.type() != e->node->attribute->type)
            out.push_back({"value", {path}, "value on " + path + " does not fit the model"});
    }
    return out;
}

bool is_complete(const ApplicationFeatureModel& app)
{
    return open_items(app).empty() && check_constraints(app).empty();
}

std::vector<std::string> structure_key(const ApplicationFeatureModel& app)
{
    std::vector<std::string> out;
    InstanceTree tree(app);
    for (const auto& e : tree.entries())
        if (app.selected(e.path))
            out.push_back(e.path);
    return out;
}

// -- serialization ------------------------------------------------------------

namespace {

void write_family_subtree(xml::Writer& w, const Node& n)
{
    detail::write_node_open(w, n, {});
    detail::write_annotation(w, n);
    detail::write_attribute(w, n, nullptr);
    for (auto& c : n.children)
        write_family_subtree(w, c);
    w.close();
}

void write_entry(xml::Writer& w, const ApplicationFeatureModel& app, const InstanceTree& tree, int idx);

void write_entry_children(xml::Writer& w, const ApplicationFeatureModel& app, const InstanceTree& tree,
                          const InstanceEntry& e)
{
    detail::write_annotation(w, *e.node);
    detail::write_attribute(w, *e.node, app.value(e.path));
    for (int c : e.children)
        write_entry(w, app, tree, c);
}

void write_entry(xml::Writer& w, const ApplicationFeatureModel& app, const InstanceTree& tree, int idx)
{
    const auto& e = tree[idx];
    xml::Writer::Attributes extra{{"state", std::string(to_string(app.state(e.path)))}};
    if (e.role != InstanceRole::Container) {
        detail::write_node_open(w, *e.node, std::move(extra));
        write_entry_children(w, app, tree, e);
        w.close();
        return;
    }
    if (auto count = app.clone_count(e.path))
        extra.emplace_back("clones", std::to_string(*count));
    detail::write_node_open(w, *e.node, std::move(extra));
    detail::write_annotation(w, *e.node);
    detail::write_attribute(w, *e.node, nullptr);
    for (auto& c : e.node->children)
        write_family_subtree(w, c);
    for (int c : e.children) {
        const auto& inst = tree[c];
        w.open("fm:Instance",
               {{"index", std::to_string(inst.clone_index)}, {"state", std::string(to_string(app.state(inst.path)))}});
        detail::write_attribute(w, *inst.node, app.value(inst.path));
        for (int g : inst.children)
            write_entry(w, app, tree, g);
        w.close();
    }
    w.close();
}

} // namespace

std::string serialize_application_model(const ApplicationFeatureModel& app)
{
    InstanceTree tree(app);
    const auto& root = tree[0];
    xml::Writer w;
    w.open("fm:FeatureModel", {{"xmlns:fm", std::string(detail::fm_namespace)},
                               {"fm:value", root.node->name},
                               {"state", std::string(to_string(app.state(root.path)))}});
    write_entry_children(w, app, tree, root);
    for (auto& k : app.family->constraints)
        w.leaf("fm:Constraint", {{"kind", std::string(to_string(k.kind))}, {"from", k.from}, {"to", k.to}});
    w.close();
    return w.str();
}

namespace {

struct StateReader {
    ApplicationFeatureModel& app;

    void read_state(const xml::Element& e, const std::string& path)
    {
        if (const auto* s = e.attr("state")) {
            if (*s == "selected")
                app.states[path] = DecisionState::Selected;
            else if (*s == "eliminated")
                app.states[path] = DecisionState::Eliminated;
            else if (*s != "undecided")
                throw ParseError("unknown state '" + *s + "'", e.line, path);
        }
        if (const auto* c = e.attr("clones")) {
            int n = 0;
            auto [ptr, ec] = std::from_chars(c->data(), c->data() + c->size(), n);
            if (ec != std::errc() || ptr != c->data() + c->size())
                throw ParseError("bad clone count '" + *c + "'", e.line, path);
            app.clones[path] = n;
        }
    }

    void read_value(const xml::Element& e, const std::string& path, const Node& node)
    {
        for (auto& c : e.children) {
            if (c.name != "fm:Attribute" || !node.attribute || c.children.size() != 1)
                continue;
            const auto stem = detail::type_stem(node.attribute->type);
            for (auto& props : c.children.front().children) {
                if (props.name != "fm:" + stem + "Properties")
                    throw ParseError("unexpected <" + props.name + ">", props.line, path);
                for (auto& v : props.children) {
                    if (v.name != "fm:" + stem + "Value" || !v.attr("fm:value"))
                        throw ParseError("unexpected <" + v.name + ">", v.line, path);
                    try {
                        app.values[path] = Value::parse(node.attribute->type, *v.attr("fm:value"));
                    } catch (const LexicalError& err) {
                        throw ParseError(err.what(), v.line, path);
                    }
                }
            }
        }
    }

    void read_children(const xml::Element& e, const std::string& path, const Node& node)
    {
        for (auto& c : e.children) {
            if (c.name == "fm:Instance") {
                const auto* idx = c.attr("index");
                if (!idx)
                    throw ParseError("<fm:Instance> lacks index", c.line, path);
                std::string ipath = path + "[" + *idx + "]";
                read_state(c, ipath);
                read_value(c, ipath, node);
                read_children(c, ipath, node);
                continue;
            }
            if (node.is_multi() && e.name != "fm:Instance")
                continue;   // template children of a multi-instance feature
            if (c.name != "fm:SolitaryFeature" && c.name != "fm:FeatureGroup" && c.name != "fm:GroupedFeature")
                continue;
            const auto* name = c.attr("fm:value");
            const Node* child = nullptr;
            for (auto& n : node.children)
                if (name && n.name == *name)
                    child = &n;
            if (!child)
                throw ParseError("element does not match the family structure", c.line, path);
            std::string cpath = join_path(path, child->name);
            read_state(c, cpath);
            read_value(c, cpath, *child);
            read_children(c, cpath, *child);
        }
    }
};

} // namespace

ApplicationFeatureModel parse_application_model(std::string_view text)
{
    auto dom = xml::parse(text);
    auto family = std::make_shared<FeatureModel>(detail::dom_to_model(dom, true));
    auto diags = validate_model(*family);
    if (!diags.empty())
        throw ModelError(std::move(diags));

    ApplicationFeatureModel app;
    app.family = family;
    StateReader reader{app};
    reader.read_state(dom, family->root.name);
    reader.read_value(dom, family->root.name, family->root);
    reader.read_children(dom, family->root.name, family->root);

    InstanceTree tree(app);
    for (auto& [path, st] : app.states)
        if (!tree.find(path))
            throw ParseError("state for unknown instance " + path);
    return app;
}

} // namespace formweave
