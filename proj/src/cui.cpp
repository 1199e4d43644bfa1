#include <formweave/cui.hpp>

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "xml_dom.hpp"

namespace formweave {

using ojson = nlohmann::ordered_json;

std::string_view to_string(InputKind k) noexcept
{
    switch (k) {
    case InputKind::Text: return "text";
    case InputKind::Radio: return "radio";
    case InputKind::Checkbox: return "checkbox";
    case InputKind::Select: return "select";
    }
    return "?";
}

std::string_view to_string(NavigationKind k) noexcept
{
    switch (k) {
    case NavigationKind::Submit: return "submit";
    case NavigationKind::Next: return "next";
    case NavigationKind::Back: return "back";
    }
    return "?";
}

std::string_view to_string(LayoutKind k) noexcept
{
    switch (k) {
    case LayoutKind::GroupStart: return "group-start";
    case LayoutKind::GroupEnd: return "group-end";
    case LayoutKind::LineBreak: return "line-break";
    }
    return "?";
}

std::vector<const Input*> Page::inputs() const
{
    std::vector<const Input*> out;
    for (const auto& w : widgets)
        if (const auto* in = std::get_if<Input>(&w))
            out.push_back(in);
    return out;
}

const Input* Page::find_input(std::string_view name) const
{
    for (const auto* in : inputs())
        if (in->name == name)
            return in;
    return nullptr;
}

std::string page_id(int number)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "page-%03d", number);
    return buf;
}

std::vector<std::string> check_page(const Page& p)
{
    std::vector<std::string> problems;
    std::set<std::string> names;
    for (const auto* in : p.inputs()) {
        if (in->name.empty())
            problems.push_back("input without a name");
        else if (!names.insert(in->name).second)
            problems.push_back("duplicate input name " + in->name);
        if ((in->kind == InputKind::Radio || in->kind == InputKind::Select) && in->options.size() < 2)
            problems.push_back(in->name + ": needs at least two options");
        if (in->kind == InputKind::Checkbox && in->options.empty())
            problems.push_back(in->name + ": checkbox without options");
    }
    return problems;
}

// -- html ---------------------------------------------------------------------

namespace {

class Html {
public:
    void line(int depth, const std::string& s)
    {
        out_.append(static_cast<std::size_t>(depth) * 2, ' ');
        out_ += s;
        out_ += '\n';
    }
    std::string str() && { return std::move(out_); }

private:
    std::string out_;
};

std::string attr(std::string_view k, std::string_view v)
{
    return " " + std::string(k) + "=\"" + xml::escape(v) + "\"";
}

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        if (end == std::string_view::npos)
            end = s.size();
        if (end > start)
            out.emplace_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

void render_input(Html& h, int d, const Input& in, const std::map<std::string, std::string>& errors)
{
    std::string req = in.required ? " required" : "";
    h.line(d, "<label" + attr("style", "width: 150px") + ">" + xml::escape(in.label) + "</label>");
    switch (in.kind) {
    case InputKind::Text:
        h.line(d, "<input" + attr("type", "text") + attr("name", in.name) + attr("value", in.prefill.value_or(""))
                      + req + "/>");
        break;
    case InputKind::Radio:
    case InputKind::Checkbox: {
        auto chosen = split_list(in.prefill.value_or(""));
        bool radio = in.kind == InputKind::Radio;
        for (const auto& o : in.options) {
            bool on = std::find(chosen.begin(), chosen.end(), o.value) != chosen.end();
            h.line(d, "<input" + attr("type", radio ? "radio" : "checkbox") + attr("name", in.name)
                          + attr("value", o.value) + (on ? " checked" : "") + (radio ? req : "") + "/>"
                          + xml::escape(o.label));
        }
        break;
    }
    case InputKind::Select:
        h.line(d, "<select" + attr("name", in.name) + req + ">");
        for (const auto& o : in.options)
            h.line(d + 1, "<option" + attr("value", o.value) + (in.prefill == o.value ? " selected" : "") + ">"
                              + xml::escape(o.label) + "</option>");
        h.line(d, "</select>");
        break;
    }
    if (auto it = errors.find(in.name); it != errors.end())
        h.line(d, "<span" + attr("class", "error") + ">" + xml::escape(it->second) + "</span>");
    h.line(d, "<br/>");
}

} // namespace

std::string render_html(const Page& p)
{
    Html h;
    h.line(0, "<!DOCTYPE html>");
    h.line(0, "<html>");
    h.line(1, "<head>");
    h.line(2, "<meta charset=\"utf-8\"/>");
    h.line(2, "<title>" + xml::escape(p.title) + "</title>");
    h.line(1, "</head>");
    h.line(1, "<body>");
    h.line(2, "<form" + attr("method", "post") + attr("id", p.id) + ">");
    std::set<std::string> names;
    for (const auto* in : p.inputs())
        names.insert(in->name);
    for (const auto& [name, msg] : p.errors)
        if (!names.count(name))
            h.line(3, "<p" + attr("class", "error") + ">" + xml::escape(name.empty() ? msg : name + ": " + msg) + "</p>");
    int d = 3;
    for (const auto& w : p.widgets) {
        if (const auto* in = std::get_if<Input>(&w)) {
            render_input(h, d, *in, p.errors);
        } else if (const auto* o = std::get_if<Output>(&w)) {
            h.line(d, "<p>" + xml::escape(o->text) + "</p>");
        } else if (const auto* n = std::get_if<Navigation>(&w)) {
            if (n->kind == NavigationKind::Submit)
                h.line(d, "<input" + attr("type", "submit") + attr("value", "Submit") + "/>");
            else
                h.line(d, "<button" + attr("type", "submit") + attr("name", "_nav") + attr("value", to_string(n->kind))
                              + ">" + (n->kind == NavigationKind::Next ? "Next" : "Back") + "</button>");
        } else {
            switch (std::get<Layout>(w).kind) {
            case LayoutKind::GroupStart: h.line(d++, "<fieldset>"); break;
            case LayoutKind::GroupEnd: h.line(d > 3 ? --d : d, "</fieldset>"); break;
            case LayoutKind::LineBreak: h.line(d, "<br/>"); break;
            }
        }
    }
    h.line(2, "</form>");
    h.line(1, "</body>");
    h.line(0, "</html>");
    return std::move(h).str();
}

// -- wire ---------------------------------------------------------------------

namespace {

ojson widget_to_json(const Widget& w)
{
    ojson j;
    if (const auto* in = std::get_if<Input>(&w)) {
        j["kind"] = to_string(in->kind);
        j["name"] = in->name;
        j["label"] = in->label;
        j["valueType"] = in->value_type ? ojson(to_string(*in->value_type)) : ojson(nullptr);
        j["required"] = in->required;
        j["prefill"] = in->prefill ? ojson(*in->prefill) : ojson(nullptr);
        j["options"] = ojson::array();
        for (const auto& o : in->options)
            j["options"].push_back(ojson{{"value", o.value}, {"label", o.label}});
    } else if (const auto* o = std::get_if<Output>(&w)) {
        j["kind"] = "output";
        j["text"] = o->text;
    } else if (const auto* n = std::get_if<Navigation>(&w)) {
        j["kind"] = to_string(n->kind);
    } else {
        j["kind"] = to_string(std::get<Layout>(w).kind);
    }
    return j;
}

Widget widget_from_json(const ojson& j)
{
    auto kind = j.at("kind").get<std::string>();
    for (auto k : {InputKind::Text, InputKind::Radio, InputKind::Checkbox, InputKind::Select}) {
        if (kind != to_string(k))
            continue;
        Input in;
        in.kind = k;
        in.name = j.at("name").get<std::string>();
        in.label = j.value("label", std::string{});
        if (j.contains("valueType") && !j["valueType"].is_null()) {
            auto t = value_type_from_string(j["valueType"].get<std::string>());
            if (!t)
                throw Error("unknown value type " + j["valueType"].get<std::string>());
            in.value_type = *t;
        }
        in.required = j.value("required", false);
        if (j.contains("prefill") && !j["prefill"].is_null())
            in.prefill = j["prefill"].get<std::string>();
        if (j.contains("options"))
            for (const auto& o : j["options"])
                in.options.push_back({o.at("value").get<std::string>(), o.value("label", std::string{})});
        return in;
    }
    if (kind == "output")
        return Output{j.value("text", std::string{})};
    for (auto k : {NavigationKind::Submit, NavigationKind::Next, NavigationKind::Back})
        if (kind == to_string(k))
            return Navigation{k};
    for (auto k : {LayoutKind::GroupStart, LayoutKind::GroupEnd, LayoutKind::LineBreak})
        if (kind == to_string(k))
            return Layout{k};
    throw Error("unknown widget kind " + kind);
}

} // namespace

std::string page_to_wire(const Page& p)
{
    ojson j;
    j["pageId"] = p.id;
    j["title"] = p.title;
    j["widgets"] = ojson::array();
    for (const auto& w : p.widgets)
        j["widgets"].push_back(widget_to_json(w));
    j["errors"] = ojson::object();
    for (const auto& [k, v] : p.errors)
        j["errors"][k] = v;
    return j.dump();
}

Page page_from_wire(std::string_view json_text)
{
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const ojson::exception& e) {
        throw Error(std::string("page JSON: ") + e.what());
    }
    try {
        Page p;
        p.id = j.at("pageId").get<std::string>();
        p.title = j.value("title", std::string{});
        for (const auto& w : j.at("widgets"))
            p.widgets.push_back(widget_from_json(w));
        if (j.contains("errors"))
            for (const auto& [k, v] : j["errors"].items())
                p.errors[k] = v.get<std::string>();
        return p;
    } catch (const ojson::exception& e) {
        throw Error(std::string("page JSON: ") + e.what());
    }
}

// -- reports ------------------------------------------------------------------

std::optional<ReportFormat> report_format_from_string(std::string_view s) noexcept
{
    if (s == "xml")
        return ReportFormat::Xml;
    if (s == "text")
        return ReportFormat::Text;
    return std::nullopt;
}

std::string render_report(const Report& r, ReportFormat format)
{
    if (format == ReportFormat::Text) {
        std::string out;
        for (const auto& f : r.fields)
            out += f.label + ": " + f.value + "\n";
        return out;
    }
    xml::Writer w;
    xml::Writer::Attributes attrs{{"service", r.service_name}, {"citizen", r.citizen_id}};
    if (r.completed_at)
        attrs.emplace_back("completedAt", *r.completed_at);
    w.open("Report", attrs);
    for (const auto& f : r.fields)
        w.leaf("Field", {{"path", f.path}, {"label", f.label}, {"value", f.value}});
    w.close();
    return w.str();
}

} // namespace formweave
