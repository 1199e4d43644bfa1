#include <formweave/feature_model.hpp>

#include "model_xml.hpp"
#include "xml_dom.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace formweave {

bool operator==(const Node& a, const Node& b)
{
    return a.kind == b.kind && a.name == b.name && a.description == b.description
        && a.cardinality == b.cardinality && a.group == b.group && a.attribute == b.attribute
        && a.target == b.target && a.children == b.children;
}

std::string_view to_string(NodeKind k) noexcept
{
    switch (k) {
    case NodeKind::Solitary: return "SolitaryFeature";
    case NodeKind::Group: return "FeatureGroup";
    case NodeKind::Grouped: return "GroupedFeature";
    case NodeKind::Reference: return "ModelReference";
    }
    return "SolitaryFeature";
}

std::string_view to_string(ConstraintKind k) noexcept
{
    return k == ConstraintKind::Requires ? "requires" : "excludes";
}

ModelError::ModelError(std::vector<Diagnostic> diagnostics)
    : Error([&] {
        std::string msg = "invalid feature model";
        for (auto& d : diagnostics)
            msg += "\n  " + d.path + ": " + d.rule + ": " + d.message;
        return msg;
    }())
    , diagnostics_(std::move(diagnostics))
{
}

// -- paths ------------------------------------------------------------------

std::vector<std::string> split_path(std::string_view path)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto dot = path.find('.', start);
        if (dot == std::string_view::npos) {
            out.emplace_back(path.substr(start));
            break;
        }
        out.emplace_back(path.substr(start, dot - start));
        start = dot + 1;
    }
    return out;
}

std::string join_path(std::string_view parent, std::string_view child)
{
    if (parent.empty())
        return std::string(child);
    std::string out(parent);
    out += '.';
    out += child;
    return out;
}

std::string family_path(std::string_view instance_path)
{
    std::string out;
    out.reserve(instance_path.size());
    bool in_index = false;
    for (char c : instance_path) {
        if (c == '[')
            in_index = true;
        else if (c == ']')
            in_index = false;
        else if (!in_index)
            out += c;
    }
    return out;
}

namespace {

const Node* child_named(const Node& n, std::string_view name)
{
    for (auto& c : n.children)
        if (c.name == name)
            return &c;
    return nullptr;
}

} // namespace

const Node* find_node(const FeatureModel& m, std::string_view path)
{
    auto parts = split_path(path);
    if (parts.empty() || parts.front() != m.root.name)
        return nullptr;
    const Node* cur = &m.root;
    for (std::size_t i = 1; i < parts.size() && cur; ++i)
        cur = child_named(*cur, parts[i]);
    return cur;
}

bool inside_multi_subtree(const FeatureModel& m, std::string_view path)
{
    auto parts = split_path(path);
    if (parts.empty() || parts.front() != m.root.name)
        return false;
    const Node* cur = &m.root;
    for (std::size_t i = 1; i < parts.size() && cur; ++i) {
        if (cur->is_multi())
            return true;
        cur = child_named(*cur, parts[i]);
    }
    return false;
}

void for_each_node(const FeatureModel& m,
                   const std::function<void(const Node&, const std::string&, const Node*)>& fn)
{
    std::function<void(const Node&, const std::string&, const Node*)> walk =
        [&](const Node& n, const std::string& path, const Node* parent) {
            fn(n, path, parent);
            for (auto& c : n.children)
                walk(c, join_path(path, c.name), &n);
        };
    walk(m.root, m.root.name, nullptr);
}

bool is_identifier(std::string_view s) noexcept
{
    if (s.empty())
        return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!alpha(s.front()))
        return false;
    return std::all_of(s.begin(), s.end(),
                       [&](char c) { return alpha(c) || (c >= '0' && c <= '9') || c == '-'; });
}

std::string read_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ModelResolver directory_resolver(std::filesystem::path dir)
{
    return [dir = std::move(dir)](const std::string& target) -> std::optional<std::string> {
        for (auto candidate : {dir / (target + ".fm.xml"), dir / "shared" / (target + ".fm.xml")}) {
            std::error_code ec;
            if (std::filesystem::is_regular_file(candidate, ec))
                return read_file(candidate);
        }
        return std::nullopt;
    };
}

// -- DOM -> model -------------------------------------------------------------

namespace detail {

namespace {

int parse_count(const xml::Element& e, const char* key, int fallback, bool allow_star)
{
    const std::string* v = e.attr(key);
    if (!v)
        return fallback;
    if (allow_star && *v == "*")
        return FeatureCardinality::unbounded;
    int out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
        throw ParseError("attribute " + std::string(key) + "=\"" + *v + "\" is not a count", e.line);
    return out;
}

const std::string& require_attr(const xml::Element& e, const char* key)
{
    const std::string* v = e.attr(key);
    if (!v)
        throw ParseError("<" + e.name + "> lacks " + key, e.line);
    return *v;
}

void check_attributes(const xml::Element& e, std::initializer_list<std::string_view> allowed, bool app_mode)
{
    for (auto& [k, v] : e.attributes) {
        if (k.rfind("xmlns", 0) == 0)
            continue;
        if (std::find(allowed.begin(), allowed.end(), k) != allowed.end())
            continue;
        if (app_mode && (k == "state" || k == "clones"))
            continue;
        throw ParseError("unknown attribute '" + k + "' on <" + e.name + ">", e.line);
    }
}

std::optional<std::string> read_annotation(const xml::Element& e, bool app_mode)
{
    check_attributes(e, {}, app_mode);
    std::optional<std::string> out;
    for (auto& c : e.children) {
        if (c.name != "fm:Description")
            throw ParseError("unknown element <" + c.name + "> in annotation", c.line);
        check_attributes(c, {"fm:value"}, app_mode);
        out = require_attr(c, "fm:value");
    }
    return out;
}

AttributeSpec read_attribute(const xml::Element& e, bool app_mode)
{
    check_attributes(e, {}, app_mode);
    if (e.children.size() != 1)
        throw ParseError("<fm:Attribute> must hold exactly one type element", e.line);
    const auto& t = e.children.front();
    for (auto& [type, elem] : type_elements) {
        if (t.name == elem) {
            check_attributes(t, {}, app_mode);
            if (!app_mode && !t.children.empty())
                throw ParseError("attribute values are not allowed in a family model", t.children.front().line);
            return AttributeSpec{type};
        }
    }
    throw ParseError("unknown attribute type <" + t.name + ">", t.line);
}

struct Reader {
    bool app_mode;

    void read_children(const xml::Element& e, Node& node, const std::string& path,
                       std::vector<CrossTreeConstraint>* constraints)
    {
        for (auto& c : e.children) {
            if (c.name == "fm:Annotation") {
                if (node.description)
                    throw ParseError("duplicate annotation", c.line, path);
                node.description = read_annotation(c, app_mode);
            } else if (c.name == "fm:Attribute") {
                if (node.attribute)
                    throw ParseError("at most one attribute per feature", c.line, path);
                node.attribute = read_attribute(c, app_mode);
            } else if (c.name == "fm:SolitaryFeature" || c.name == "fm:GroupedFeature"
                       || c.name == "fm:FeatureGroup") {
                node.children.push_back(read_node(c, path));
            } else if (c.name == "fm:ModelReference") {
                check_attributes(c, {"target"}, app_mode);
                Node ref;
                ref.kind = NodeKind::Reference;
                ref.target = require_attr(c, "target");
                ref.line = c.line;
                node.children.push_back(std::move(ref));
            } else if (c.name == "fm:Constraint" && constraints) {
                check_attributes(c, {"kind", "from", "to"}, app_mode);
                CrossTreeConstraint k;
                const auto& kind = require_attr(c, "kind");
                if (kind == "requires")
                    k.kind = ConstraintKind::Requires;
                else if (kind == "excludes")
                    k.kind = ConstraintKind::Excludes;
                else
                    throw ParseError("unknown constraint kind '" + kind + "'", c.line);
                k.from = require_attr(c, "from");
                k.to = require_attr(c, "to");
                constraints->push_back(std::move(k));
            } else if (c.name == "fm:Instance" && app_mode) {
                continue;
            } else {
                throw ParseError("unknown element <" + c.name + ">", c.line, path);
            }
        }
    }

    Node read_node(const xml::Element& e, const std::string& parent_path)
    {
        Node n;
        n.line = e.line;
        n.name = require_attr(e, "fm:value");
        std::string path = join_path(parent_path, n.name);
        if (e.name == "fm:SolitaryFeature") {
            check_attributes(e, {"fm:value", "min", "max"}, app_mode);
            n.kind = NodeKind::Solitary;
            n.cardinality.min = parse_count(e, "min", 1, false);
            n.cardinality.max = parse_count(e, "max", 1, true);
        } else if (e.name == "fm:FeatureGroup") {
            check_attributes(e, {"fm:value", "gmin", "gmax"}, app_mode);
            n.kind = NodeKind::Group;
            n.group.min = parse_count(e, "gmin", 1, false);
            n.group.max = parse_count(e, "gmax", 1, false);
        } else {
            check_attributes(e, {"fm:value"}, app_mode);
            n.kind = NodeKind::Grouped;
        }
        read_children(e, n, path, nullptr);
        return n;
    }
};

struct Inliner {
    const ModelResolver& resolver;
    std::vector<std::string> chain;

    void inline_refs(Node& node, const std::string& path, std::vector<CrossTreeConstraint>& constraints)
    {
        std::vector<Node> expanded;
        for (auto& c : node.children) {
            if (c.kind != NodeKind::Reference) {
                inline_refs(c, join_path(path, c.name), constraints);
                expanded.push_back(std::move(c));
                continue;
            }
            if (std::find(chain.begin(), chain.end(), c.target) != chain.end())
                throw ParseError("cyclic model reference to '" + c.target + "'", c.line, path);
            std::optional<std::string> text = resolver ? resolver(c.target) : std::nullopt;
            if (!text)
                throw ParseError("unresolvable model reference '" + c.target + "'", c.line, path);

            FeatureModel sub = [&] {
                try {
                    return dom_to_model(xml::parse(*text), false);
                } catch (const ParseError& err) {
                    throw ParseError("in referenced model '" + c.target + "': " + err.what(), c.line, path);
                }
            }();
            if (sub.name() != c.target)
                throw ParseError("referenced model is named '" + sub.name() + "', expected '" + c.target + "'",
                                 c.line, path);
            chain.push_back(c.target);
            inline_refs(sub.root, path, sub.constraints);
            chain.pop_back();

            // referenced root children land under this node; constraint paths
            // are rebased from the referenced root onto it
            const std::string prefix = sub.name() + ".";
            for (auto& k : sub.constraints) {
                for (std::string* p : {&k.from, &k.to})
                    if (p->rfind(prefix, 0) == 0)
                        *p = path + "." + p->substr(prefix.size());
                constraints.push_back(std::move(k));
            }
            for (auto& sc : sub.root.children)
                expanded.push_back(std::move(sc));
        }
        node.children = std::move(expanded);
    }
};

} // namespace

const std::vector<std::pair<ValueType, std::string>> type_elements{
    {ValueType::String, "fm:String"},
    {ValueType::Integer, "fm:Integer"},
    {ValueType::Float, "fm:Float"},
    {ValueType::Boolean, "fm:Boolean"},
    {ValueType::Date, "fm:Date"},
};

std::string_view type_element(ValueType t)
{
    for (auto& [type, name] : type_elements)
        if (type == t)
            return name;
    return "fm:String";
}

std::string type_stem(ValueType t)
{
    // "fm:String" -> "String"
    return std::string(type_element(t).substr(3));
}

FeatureModel dom_to_model(const xml::Element& root, bool app_mode)
{
    if (root.name != "fm:FeatureModel")
        throw ParseError("root element must be <fm:FeatureModel>, found <" + root.name + ">", root.line);
    check_attributes(root, {"fm:value"}, app_mode);
    FeatureModel m;
    m.root.kind = NodeKind::Solitary;
    m.root.name = require_attr(root, "fm:value");
    m.root.line = root.line;
    Reader reader{app_mode};
    reader.read_children(root, m.root, m.root.name, &m.constraints);
    return m;
}

void inline_references(FeatureModel& m, const ModelResolver& resolver)
{
    Inliner inliner{resolver, {m.name()}};
    inliner.inline_refs(m.root, m.root.name, m.constraints);
}

void write_node_open(xml::Writer& w, const Node& n, xml::Writer::Attributes extra)
{
    xml::Writer::Attributes attrs{{"fm:value", n.name}};
    switch (n.kind) {
    case NodeKind::Solitary:
        attrs.emplace_back("min", std::to_string(n.cardinality.min));
        attrs.emplace_back("max", n.cardinality.is_unbounded() ? "*" : std::to_string(n.cardinality.max));
        break;
    case NodeKind::Group:
        attrs.emplace_back("gmin", std::to_string(n.group.min));
        attrs.emplace_back("gmax", std::to_string(n.group.max));
        break;
    default:
        break;
    }
    for (auto& a : extra)
        attrs.push_back(std::move(a));
    w.open(std::string("fm:") + std::string(to_string(n.kind)), attrs);
}

void write_annotation(xml::Writer& w, const Node& n)
{
    if (!n.description)
        return;
    w.open("fm:Annotation");
    w.leaf("fm:Description", {{"fm:value", *n.description}});
    w.close();
}

void write_attribute(xml::Writer& w, const Node& n, const Value* value)
{
    if (!n.attribute)
        return;
    w.open("fm:Attribute");
    w.open(type_element(n.attribute->type));
    if (value) {
        auto stem = type_stem(n.attribute->type);
        w.open("fm:" + stem + "Properties");
        w.leaf("fm:" + stem + "Value", {{"fm:value", value->text()}});
        w.close();
    }
    w.close();
    w.close();
}

} // namespace detail

FeatureModel parse_feature_model(std::string_view text, const ParseOptions& options)
{
    FeatureModel m = detail::dom_to_model(xml::parse(text), false);
    detail::inline_references(m, options.resolver);
    if (options.validate) {
        auto diags = validate_model(m);
        if (!diags.empty())
            throw ModelError(std::move(diags));
    }
    return m;
}

FeatureModel load_feature_model(const std::filesystem::path& file, bool validate)
{
    ParseOptions opts;
    opts.resolver = directory_resolver(file.parent_path());
    opts.validate = validate;
    return parse_feature_model(read_file(file), opts);
}

// -- serialization ------------------------------------------------------------

namespace {

void write_node(xml::Writer& w, const Node& n)
{
    if (n.kind == NodeKind::Reference) {
        w.leaf("fm:ModelReference", {{"target", n.target}});
        return;
    }
    detail::write_node_open(w, n, {});
    detail::write_annotation(w, n);
    detail::write_attribute(w, n, nullptr);
    for (auto& c : n.children)
        write_node(w, c);
    w.close();
}

} // namespace

std::string serialize_feature_model(const FeatureModel& m)
{
    xml::Writer w;
    w.open("fm:FeatureModel", {{"xmlns:fm", std::string(detail::fm_namespace)}, {"fm:value", m.root.name}});
    detail::write_annotation(w, m.root);
    detail::write_attribute(w, m.root, nullptr);
    for (auto& c : m.root.children)
        write_node(w, c);
    for (auto& k : m.constraints)
        w.leaf("fm:Constraint", {{"kind", std::string(to_string(k.kind))}, {"from", k.from}, {"to", k.to}});
    w.close();
    return w.str();
}

// -- validation ---------------------------------------------------------------

std::vector<Diagnostic> validate_model(const FeatureModel& m, const ValidateOptions& options)
{
    std::vector<Diagnostic> out;
    auto diag = [&](const std::string& path, const char* rule, std::string message) {
        out.push_back({path, rule, std::move(message)});
    };

    if (m.root.kind != NodeKind::Solitary)
        diag(m.root.name, "root-kind", "root must be a solitary feature");
    else if (m.root.cardinality != FeatureCardinality{1, 1})
        diag(m.root.name, "root-cardinality", "root cardinality must be [1..1]");

    std::set<std::string> seen;
    for_each_node(m, [&](const Node& n, const std::string& path, const Node* parent) {
        if (n.kind == NodeKind::Reference) {
            diag(path, "reference-unresolved", "model reference to '" + n.target + "' was not inlined");
            return;
        }
        if (!is_identifier(n.name))
            diag(path, "name-invalid", "'" + n.name + "' is not an identifier");
        if (!seen.insert(path).second)
            diag(path, "duplicate-path", "duplicate path");

        if (parent) {
            bool parent_is_group = parent->kind == NodeKind::Group;
            if (parent_is_group && n.kind != NodeKind::Grouped)
                diag(path, "group-member-kind", "feature groups may only contain grouped features");
            if (!parent_is_group && n.kind == NodeKind::Grouped)
                diag(path, "grouped-outside-group", "grouped feature outside a feature group");
        }

        if (n.kind == NodeKind::Solitary) {
            const auto& c = n.cardinality;
            if (c.min < 0)
                diag(path, "min-negative", "negative minimum cardinality");
            if (!c.is_unbounded() && c.max < 1)
                diag(path, "max-zero", "maximum cardinality must be positive");
            else if (!c.is_unbounded() && c.min > c.max)
                diag(path, "min-gt-max", "min>max");
        }
        if (n.kind == NodeKind::Group) {
            const auto& g = n.group;
            int size = static_cast<int>(n.children.size());
            if (size == 0)
                diag(path, "group-empty", "feature group without members");
            if (g.min < 0 || g.max < 1 || g.min > g.max)
                diag(path, "group-min-gt-max", "group cardinality [" + std::to_string(g.min) + ".."
                         + std::to_string(g.max) + "] is not a valid range");
            else if (size > 0 && g.max > size)
                diag(path, "group-size", "group cardinality exceeds size");
            if (n.attribute)
                diag(path, "attribute-on-group", "feature groups cannot carry attributes");
        }
        if (n.attribute && options.strict_types && is_extension_type(n.attribute->type))
            diag(path, "attribute-type-extension",
                 "attribute type " + std::string(to_string(n.attribute->type)) + " is an extension");
    });

    for (auto& k : m.constraints) {
        std::string where = std::string(to_string(k.kind)) + " " + k.from + " -> " + k.to;
        for (const std::string* p : {&k.from, &k.to}) {
            const Node* n = find_node(m, *p);
            if (!n) {
                diag(*p, "constraint-dangling", "constraint endpoint does not resolve (" + where + ")");
            } else if (!n->is_feature()) {
                diag(*p, "constraint-endpoint-kind", "constraint endpoints must be features (" + where + ")");
            } else if (inside_multi_subtree(m, *p)) {
                diag(*p, "constraint-in-clone-subtree",
                     "constraint endpoint lies under a multi-instance feature (" + where + ")");
            }
        }
        if (k.from == k.to)
            diag(k.from, "constraint-self", "constraint relates a feature to itself");
    }
    return out;
}

} // namespace formweave
