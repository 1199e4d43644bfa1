#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace formweave::xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    int line = 0;

    const std::string* attr(std::string_view key) const;
};

/// Builds an element tree from a UTF-8 document. Character data is dropped;
/// the model vocabularies carry everything in attributes. Throws ParseError
/// with the expat line number on malformed input.
Element parse(std::string_view text);

std::string escape(std::string_view text);

/// Two-space indented writer with self-closing empty elements. Output is a
/// pure function of the call sequence.
class Writer {
public:
    using Attributes = std::vector<std::pair<std::string, std::string>>;

    Writer();

    void open(std::string_view name, const Attributes& attrs = {});
    void leaf(std::string_view name, const Attributes& attrs = {});
    void close();

    std::string str() const;

private:
    void flush_pending(bool self_close);
    void start_tag(std::string_view name, const Attributes& attrs);

    std::string out_;
    std::vector<std::string> stack_;
    bool pending_ = false;
};

} // namespace formweave::xml
