#include "scilit/xml.hpp"

#include <cctype>

namespace scilit::xml {

namespace {

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
    return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
           c == '.';
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::pair<size_t, size_t> Reader::position() const {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < pos_ && i < in_.size(); ++i) {
        if (in_[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void Reader::fail(const std::string& msg) const {
    auto [line, col] = position();
    throw MalformedXml(msg, line, col);
}

const std::string* find_attr(const std::vector<Attribute>& attrs, std::string_view name) {
    for (const auto& a : attrs) {
        if (a.name == name) return &a.value;
        const auto colon = a.name.find(':');
        if (colon != std::string::npos && std::string_view(a.name).substr(colon + 1) == name)
            return &a.value;
    }
    return nullptr;
}

std::string Reader::decode_entities(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size());
    size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] != '&') {
            out.push_back(raw[i++]);
            continue;
        }
        const size_t semi = raw.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(raw[i++]);  // stray ampersand, keep verbatim
            continue;
        }
        const std::string_view ent = raw.substr(i + 1, semi - i - 1);
        if (ent == "amp") {
            out.push_back('&');
        } else if (ent == "lt") {
            out.push_back('<');
        } else if (ent == "gt") {
            out.push_back('>');
        } else if (ent == "quot") {
            out.push_back('"');
        } else if (ent == "apos") {
            out.push_back('\'');
        } else if (!ent.empty() && ent[0] == '#') {
            char32_t cp = 0;
            bool ok = ent.size() > 1;
            if (ent.size() > 2 && (ent[1] == 'x' || ent[1] == 'X')) {
                for (size_t k = 2; k < ent.size() && ok; ++k) {
                    const char c = ent[k];
                    cp <<= 4;
                    if (c >= '0' && c <= '9') cp |= static_cast<char32_t>(c - '0');
                    else if (c >= 'a' && c <= 'f') cp |= static_cast<char32_t>(c - 'a' + 10);
                    else if (c >= 'A' && c <= 'F') cp |= static_cast<char32_t>(c - 'A' + 10);
                    else ok = false;
                }
            } else {
                for (size_t k = 1; k < ent.size() && ok; ++k) {
                    const char c = ent[k];
                    if (c < '0' || c > '9') { ok = false; break; }
                    cp = cp * 10 + static_cast<char32_t>(c - '0');
                }
            }
            if (!ok || cp == 0 || cp > 0x10FFFF) {
                out.append(raw.substr(i, semi - i + 1));
            } else if (cp < 0x80) {
                out.push_back(static_cast<char>(cp));
            } else if (cp < 0x800) {
                out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            } else if (cp < 0x10000) {
                out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            } else {
                out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            }
        } else {
            out.append(raw.substr(i, semi - i + 1));  // unknown entity, keep verbatim
        }
        i = semi + 1;
    }
    return out;
}

void Reader::skip_misc() {
    while (pos_ < in_.size()) {
        if (in_[pos_] == '<' && pos_ + 1 < in_.size()) {
            if (in_.compare(pos_, 4, "<!--") == 0) {
                const size_t end = in_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (in_[pos_ + 1] == '?') {
                const size_t end = in_.find("?>", pos_ + 2);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
                continue;
            }
            if (in_.compare(pos_, 2, "<!") == 0 && in_.compare(pos_, 9, "<![CDATA[") != 0) {
                // DOCTYPE; may carry an internal subset in brackets
                size_t depth = 0;
                size_t i = pos_ + 2;
                for (; i < in_.size(); ++i) {
                    if (in_[i] == '[') ++depth;
                    else if (in_[i] == ']' && depth > 0) --depth;
                    else if (in_[i] == '>' && depth == 0) break;
                }
                if (i >= in_.size()) fail("unterminated DOCTYPE");
                pos_ = i + 1;
                continue;
            }
        }
        if (stack_.empty() && is_ws(in_[pos_])) {
            ++pos_;
            continue;
        }
        break;
    }
}

std::string Reader::read_name() {
    if (pos_ >= in_.size() || !is_name_start(in_[pos_])) fail("expected name");
    const size_t start = pos_;
    while (pos_ < in_.size() && is_name_char(in_[pos_])) ++pos_;
    return std::string(in_.substr(start, pos_ - start));
}

Event Reader::read_tag() {
    // cursor sits on '<'
    ++pos_;
    if (pos_ < in_.size() && in_[pos_] == '/') {
        ++pos_;
        Event ev;
        ev.type = EventType::EndElement;
        ev.name = read_name();
        while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
        if (pos_ >= in_.size() || in_[pos_] != '>') fail("malformed end tag");
        ++pos_;
        if (stack_.empty() || stack_.back() != ev.name)
            fail("mismatched end tag </" + ev.name + ">");
        stack_.pop_back();
        if (stack_.empty()) finished_ = true;
        return ev;
    }

    Event ev;
    ev.type = EventType::StartElement;
    ev.name = read_name();
    for (;;) {
        while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
        if (pos_ >= in_.size()) fail("unterminated start tag <" + ev.name + ">");
        if (in_[pos_] == '>') {
            ++pos_;
            break;
        }
        if (in_[pos_] == '/') {
            ++pos_;
            if (pos_ >= in_.size() || in_[pos_] != '>') fail("malformed self-closing tag");
            ++pos_;
            ev.self_closing = true;
            break;
        }
        Attribute attr;
        attr.name = read_name();
        while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
        if (pos_ >= in_.size() || in_[pos_] != '=') fail("attribute without value");
        ++pos_;
        while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
        if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\''))
            fail("attribute value must be quoted");
        const char quote = in_[pos_++];
        const size_t vstart = pos_;
        while (pos_ < in_.size() && in_[pos_] != quote) {
            if (in_[pos_] == '<') fail("'<' in attribute value");
            ++pos_;
        }
        if (pos_ >= in_.size()) fail("unterminated attribute value");
        attr.value = decode_entities(in_.substr(vstart, pos_ - vstart));
        ++pos_;
        ev.attrs.push_back(std::move(attr));
    }

    seen_root_ = true;
    if (ev.self_closing) {
        pending_end_ = true;
        pending_name_ = ev.name;
    } else {
        stack_.push_back(ev.name);
    }
    return ev;
}

Event Reader::next() {
    if (pending_end_) {
        pending_end_ = false;
        Event ev;
        ev.type = EventType::EndElement;
        ev.name = pending_name_;
        if (stack_.empty()) finished_ = true;
        return ev;
    }
    skip_misc();
    if (pos_ >= in_.size()) {
        if (!stack_.empty()) fail("unexpected end of input inside <" + stack_.back() + ">");
        if (!seen_root_) fail("no root element");
        finished_ = true;
        return Event{};
    }
    if (in_.compare(pos_, 9, "<![CDATA[") == 0) {
        const size_t end = in_.find("]]>", pos_ + 9);
        if (end == std::string_view::npos) fail("unterminated CDATA section");
        Event ev;
        ev.type = EventType::Text;
        ev.text = std::string(in_.substr(pos_ + 9, end - pos_ - 9));
        pos_ = end + 3;
        return ev;
    }
    if (in_[pos_] == '<') return read_tag();
    if (stack_.empty()) fail("text outside root element");
    const size_t start = pos_;
    while (pos_ < in_.size() && in_[pos_] != '<') ++pos_;
    Event ev;
    ev.type = EventType::Text;
    ev.text = decode_entities(in_.substr(start, pos_ - start));
    return ev;
}

}  // namespace scilit::xml
