#include "xml_dom.hpp"

#include <formweave/error.hpp>

#include <expat.h>

#include <memory>

namespace formweave::xml {

const std::string* Element::attr(std::string_view key) const
{
    for (auto& [k, v] : attributes)
        if (k == key)
            return &v;
    return nullptr;
}

namespace {

struct BuildState {
    XML_Parser parser = nullptr;
    std::vector<Element*> stack;
    Element root;
    bool have_root = false;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts)
{
    auto* st = static_cast<BuildState*>(user);
    Element e;
    e.name = name;
    e.line = static_cast<int>(XML_GetCurrentLineNumber(st->parser));
    for (int i = 0; atts[i]; i += 2)
        e.attributes.emplace_back(atts[i], atts[i + 1]);

    if (st->stack.empty()) {
        st->root = std::move(e);
        st->have_root = true;
        st->stack.push_back(&st->root);
    } else {
        auto& siblings = st->stack.back()->children;
        siblings.push_back(std::move(e));
        st->stack.push_back(&siblings.back());
    }
}

void XMLCALL on_end(void* user, const XML_Char*)
{
    static_cast<BuildState*>(user)->stack.pop_back();
}

} // namespace

Element parse(std::string_view text)
{
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
        XML_ParserCreate("UTF-8"), &XML_ParserFree);
    BuildState st;
    st.parser = parser.get();
    XML_SetUserData(parser.get(), &st);
    XML_SetElementHandler(parser.get(), on_start, on_end);

    if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
        throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                         static_cast<int>(XML_GetCurrentLineNumber(parser.get())));
    }
    if (!st.have_root)
        throw ParseError("empty document");
    return std::move(st.root);
}

std::string escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        case '\n': out += "&#10;"; break;
        case '\r': out += "&#13;"; break;
        case '\t': out += "&#9;"; break;
        default: out += c;
        }
    }
    return out;
}

Writer::Writer() : out_("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n") {}

void Writer::start_tag(std::string_view name, const Attributes& attrs)
{
    out_.append(stack_.size() * 2, ' ');
    out_ += '<';
    out_ += name;
    for (auto& [k, v] : attrs) {
        out_ += ' ';
        out_ += k;
        out_ += "=\"";
        out_ += escape(v);
        out_ += '"';
    }
}

void Writer::flush_pending(bool self_close)
{
    if (!pending_)
        return;
    out_ += self_close ? "/>\n" : ">\n";
    pending_ = false;
}

void Writer::open(std::string_view name, const Attributes& attrs)
{
    flush_pending(false);
    start_tag(name, attrs);
    stack_.emplace_back(name);
    pending_ = true;
}

void Writer::leaf(std::string_view name, const Attributes& attrs)
{
    flush_pending(false);
    start_tag(name, attrs);
    out_ += "/>\n";
}

void Writer::close()
{
    std::string name = std::move(stack_.back());
    stack_.pop_back();
    if (pending_) {
        flush_pending(true);
        return;
    }
    out_.append(stack_.size() * 2, ' ');
    out_ += "</" + name + ">\n";
}

std::string Writer::str() const { return out_; }

} // namespace formweave::xml
