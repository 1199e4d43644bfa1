#include <formweave/value.hpp>

#include <array>
#include <charconv>
#include <cstdio>

namespace formweave {

ParseError::ParseError(const std::string& message, int line, std::string path)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message)
    , line_(line)
    , path_(std::move(path))
{
}

namespace {

constexpr std::array<std::pair<ValueType, std::string_view>, 5> type_names{{
    {ValueType::String, "string"},
    {ValueType::Integer, "integer"},
    {ValueType::Float, "float"},
    {ValueType::Boolean, "boolean"},
    {ValueType::Date, "date"},
}};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (!is_digit(c))
            return false;
    return true;
}

std::optional<std::int64_t> parse_integer(std::string_view s)
{
    std::string_view digits = s;
    if (!digits.empty() && (digits.front() == '+' || digits.front() == '-'))
        digits.remove_prefix(1);
    if (!all_digits(digits))
        return std::nullopt;
    // from_chars rejects a leading '+'
    std::string_view body = s.front() == '+' ? s.substr(1) : s;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size())
        return std::nullopt;
    return v;
}

std::optional<double> parse_float(std::string_view s)
{
    std::string_view body = s;
    if (!body.empty() && (body.front() == '+' || body.front() == '-'))
        body.remove_prefix(1);
    auto dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if (dot != std::string_view::npos && frac.empty())
        return std::nullopt;
    if (whole.empty() && frac.empty())
        return std::nullopt;
    if (!whole.empty() && !all_digits(whole))
        return std::nullopt;
    if (!frac.empty() && !all_digits(frac))
        return std::nullopt;
    std::string_view num = s.front() == '+' ? s.substr(1) : s;
    double v = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc() || ptr != num.data() + num.size())
        return std::nullopt;
    return v;
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

std::optional<Date> parse_date(std::string_view s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        return std::nullopt;
    auto y = s.substr(0, 4), m = s.substr(5, 2), d = s.substr(8, 2);
    if (!all_digits(y) || !all_digits(m) || !all_digits(d))
        return std::nullopt;
    Date out;
    std::from_chars(y.data(), y.data() + 4, out.year);
    std::from_chars(m.data(), m.data() + 2, out.month);
    std::from_chars(d.data(), d.data() + 2, out.day);
    static constexpr std::array<unsigned, 12> days{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (out.month < 1 || out.month > 12 || out.day < 1)
        return std::nullopt;
    unsigned limit = days[out.month - 1] + (out.month == 2 && leap(out.year) ? 1 : 0);
    if (out.day > limit)
        return std::nullopt;
    return out;
}

} // namespace

std::string_view to_string(ValueType t) noexcept
{
    for (auto& [type, name] : type_names)
        if (type == t)
            return name;
    return "string";
}

std::optional<ValueType> value_type_from_string(std::string_view s) noexcept
{
    for (auto& [type, name] : type_names)
        if (name == s)
            return type;
    return std::nullopt;
}

LexicalError::LexicalError(ValueType expected, std::string text)
    : Error("'" + text + "' is not a valid " + std::string(to_string(expected)))
    , expected_(expected)
    , text_(std::move(text))
{
}

std::optional<Value> Value::try_parse(ValueType type, std::string_view text) noexcept
{
    try {
        switch (type) {
        case ValueType::String:
            return Value::string(std::string(text));
        case ValueType::Integer:
            if (auto v = parse_integer(text))
                return Value::integer(*v);
            break;
        case ValueType::Float:
            if (text.empty())
                break;
            if (auto v = parse_float(text))
                return Value::floating(*v);
            break;
        case ValueType::Boolean:
            if (text == "true")
                return Value::boolean(true);
            if (text == "false")
                return Value::boolean(false);
            break;
        case ValueType::Date:
            if (auto v = parse_date(text))
                return Value::date(*v);
            break;
        }
    } catch (...) {
    }
    return std::nullopt;
}

Value Value::parse(ValueType type, std::string_view text)
{
    if (auto v = try_parse(type, text))
        return *v;
    throw LexicalError(type, std::string(text));
}

ValueType Value::type() const noexcept
{
    switch (storage_.index()) {
    case 1:
        return ValueType::Integer;
    case 2:
        return ValueType::Float;
    case 3:
        return ValueType::Boolean;
    case 4:
        return ValueType::Date;
    default:
        return ValueType::String;
    }
}

std::string Value::text() const
{
    struct Visitor {
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const
        {
            // fixed notation keeps the text inside the float lexical rule
            std::array<char, 400> buf{};
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
            std::string out(buf.data(), ptr);
            if (out.find('.') == std::string::npos)
                out += ".0";
            return out;
        }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const Date& d) const
        {
            std::array<char, 16> buf{};
            std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", d.year, d.month, d.day);
            return buf.data();
        }
    };
    return std::visit(Visitor{}, storage_);
}

} // namespace formweave
