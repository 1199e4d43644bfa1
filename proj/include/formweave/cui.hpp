#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <formweave/error.hpp>
#include <formweave/value.hpp>

namespace formweave {

// Concrete UI model: pages of Input, Output, Navigation and Layout widgets.

enum class InputKind { Text, Radio, Checkbox, Select };
enum class NavigationKind { Submit, Next, Back };
enum class LayoutKind { GroupStart, GroupEnd, LineBreak };

std::string_view to_string(InputKind k) noexcept;
std::string_view to_string(NavigationKind k) noexcept;
std::string_view to_string(LayoutKind k) noexcept;

struct Option {
    std::string value;
    std::string label;

    friend bool operator==(const Option&, const Option&) = default;
};

struct Input {
    InputKind kind = InputKind::Text;
    std::string name;
    std::string label;
    std::optional<ValueType> value_type;   // text inputs only
    bool required = false;
    std::optional<std::string> prefill;
    std::vector<Option> options;           // radio, checkbox, select

    friend bool operator==(const Input&, const Input&) = default;
};

struct Output {
    std::string text;

    friend bool operator==(const Output&, const Output&) = default;
};

struct Navigation {
    NavigationKind kind = NavigationKind::Submit;

    friend bool operator==(const Navigation&, const Navigation&) = default;
};

struct Layout {
    LayoutKind kind = LayoutKind::LineBreak;

    friend bool operator==(const Layout&, const Layout&) = default;
};

using Widget = std::variant<Input, Output, Navigation, Layout>;

struct Page {
    std::string id;
    std::string title;
    std::vector<Widget> widgets;
    std::map<std::string, std::string> errors;   // widget name -> message

    std::vector<const Input*> inputs() const;
    const Input* find_input(std::string_view name) const;

    friend bool operator==(const Page&, const Page&) = default;
};

struct WebApplication {
    std::string service_name;
    std::vector<Page> pages;
};

/// "page-001", "page-002", ...
std::string page_id(int number);

/// Problems that make a page unfit for rendering: empty input names,
/// duplicate names, radio/select with fewer than two options.
std::vector<std::string> check_page(const Page& p);

/// A complete HTML document for the page. Deterministic.
std::string render_html(const Page& p);

/// JSON object {pageId, title, widgets, errors} with a fixed key order.
std::string page_to_wire(const Page& p);
Page page_from_wire(std::string_view json_text);

struct ReportField {
    std::string path;
    std::string label;
    std::string value;

    friend bool operator==(const ReportField&, const ReportField&) = default;
};

struct Report {
    std::string service_name;
    std::string citizen_id;
    std::vector<ReportField> fields;
    std::optional<std::string> completed_at;   // ISO-8601, only when stamped

    friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat { Xml, Text };

std::optional<ReportFormat> report_format_from_string(std::string_view s) noexcept;

std::string render_report(const Report& r, ReportFormat format);

} // namespace formweave
