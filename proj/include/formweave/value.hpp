#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <formweave/error.hpp>

namespace formweave {

enum class ValueType { String, Integer, Float, Boolean, Date };

std::string_view to_string(ValueType t) noexcept;
std::optional<ValueType> value_type_from_string(std::string_view s) noexcept;

// Boolean and Date go beyond the string/integer/float set of the original
// notation; strict-types validation rejects them.
constexpr bool is_extension_type(ValueType t) noexcept
{
    return t == ValueType::Boolean || t == ValueType::Date;
}

struct Date {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    friend auto operator<=>(const Date&, const Date&) = default;
};

class LexicalError : public Error {
public:
    LexicalError(ValueType expected, std::string text);

    ValueType expected() const noexcept { return expected_; }
    const std::string& text() const noexcept { return text_; }

private:
    ValueType expected_;
    std::string text_;
};

/// A typed attribute value. `text()` is the canonical lexical form, so two
/// values compare equal iff their canonical texts (and types) match.
class Value {
public:
    using Storage = std::variant<std::string, std::int64_t, double, bool, Date>;

    Value() = default;
    static Value string(std::string s) { return Value(Storage(std::move(s))); }
    static Value integer(std::int64_t v) { return Value(Storage(v)); }
    static Value floating(double v) { return Value(Storage(v)); }
    static Value boolean(bool v) { return Value(Storage(v)); }
    static Value date(Date d) { return Value(Storage(d)); }

    /// Lexical rules: integer = optional sign + digits; float = decimal with
    /// '.'; date = YYYY-MM-DD (calendar-checked); boolean = true|false.
    static Value parse(ValueType type, std::string_view text);
    static std::optional<Value> try_parse(ValueType type, std::string_view text) noexcept;

    ValueType type() const noexcept;
    std::string text() const;
    const Storage& storage() const noexcept { return storage_; }

    friend bool operator==(const Value& a, const Value& b) { return a.storage_ == b.storage_; }

private:
    explicit Value(Storage s) : storage_(std::move(s)) {}
    Storage storage_;
};

} // namespace formweave
