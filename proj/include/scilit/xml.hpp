#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scilit/error.hpp"

namespace scilit::xml {

// Malformed input, with the 1-based line/column where parsing stopped.
class MalformedXml : public Error {
public:
    MalformedXml(const std::string& msg, size_t line, size_t col)
        : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(col)),
          line_(line),
          col_(col) {}
    size_t line() const { return line_; }
    size_t column() const { return col_; }

private:
    size_t line_;
    size_t col_;
};

struct Attribute {
    std::string name;
    std::string value;
};

enum class EventType { StartElement, EndElement, Text, Finished };

struct Event {
    EventType type = EventType::Finished;
    std::string name;               // element name for Start/End
    std::vector<Attribute> attrs;   // StartElement only
    std::string text;               // Text only; entities decoded, CDATA verbatim
    bool self_closing = false;      // StartElement: <el/> also emits EndElement
};

// Pull parser over a whole-document buffer. Emits start/end/text events in
// document order; comments, processing instructions, and the DOCTYPE are
// consumed silently. Only the element subset needed for JATS articles is
// enforced: tags must nest properly and attributes must be quoted. The five
// predefined entities and numeric character references are decoded; unknown
// entities pass through verbatim.
class Reader {
public:
    explicit Reader(std::string_view input) : in_(input) {}

    // Next event; EndElement is synthesized after a self-closing start tag.
    Event next();

    // True once the document has been fully consumed and all tags closed.
    bool finished() const { return finished_; }

    std::pair<size_t, size_t> position() const;  // line, column at cursor

private:
    [[noreturn]] void fail(const std::string& msg) const;
    void skip_misc();  // comments, PIs, doctype, inter-element whitespace at top level
    Event read_tag();
    std::string read_name();
    std::string decode_entities(std::string_view raw) const;

    std::string_view in_;
    size_t pos_ = 0;
    std::vector<std::string> stack_;
    bool pending_end_ = false;  // synthesized end for self-closing element
    std::string pending_name_;
    bool seen_root_ = false;
    bool finished_ = false;
};

// Finds an attribute by name (exact match, or local name after ':' for
// namespace-prefixed attributes like xlink:href). Returns nullptr if absent.
const std::string* find_attr(const std::vector<Attribute>& attrs, std::string_view name);

}  // namespace scilit::xml
