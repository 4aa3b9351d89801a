#include "scilit/text.hpp"

#include <cctype>

namespace scilit::text {

char32_t decode_utf8(std::string_view s, size_t pos, size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        len = 1;
        return b0;
    }
    size_t need = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        cp = b0 & 0x07;
    } else {
        len = 1;
        return 0xFFFD;
    }
    for (size_t i = 1; i <= need; ++i) {
        if (pos + i >= s.size()) {
            len = 1;
            return 0xFFFD;
        }
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            len = 1;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    len = need + 1;
    return cp;
}

bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        switch (cp) {
            case '!': case '"': case '#': case '%': case '&': case '\'':
            case '(': case ')': case '*': case ',': case '-': case '.':
            case '/': case ':': case ';': case '?': case '@': case '[':
            case '\\': case ']': case '_': case '{': case '}':
                return true;
            default:
                return false;
        }
    }
    // Latin-1 punctuation (letters and number forms in the block excluded).
    if (cp == 0x00A1 || cp == 0x00A7 || cp == 0x00AB || cp == 0x00B6 ||
        cp == 0x00B7 || cp == 0x00BB || cp == 0x00BF)
        return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, bullets
    if (cp >= 0x2030 && cp <= 0x205E) return true;   // per mille, primes, ...
    if (cp >= 0x2E00 && cp <= 0x2E7F) return true;   // supplemental punctuation
    if (cp == 0x3001 || cp == 0x3002 || cp == 0x3003) return true;
    if (cp >= 0x3008 && cp <= 0x3011) return true;   // CJK brackets
    if (cp >= 0x3014 && cp <= 0x301F) return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth ASCII punct
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    return false;
}

bool is_space(char32_t cp) {
    if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v')
        return true;
    if (cp == 0x00A0 || cp == 0x1680) return true;
    if (cp >= 0x2000 && cp <= 0x200A) return true;
    if (cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000)
        return true;
    return false;
}

namespace {

bool is_ascii_alnum(char32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) return is_ascii_alnum(cp);
    if (cp == 0xFFFD) return false;
    return !is_punctuation(cp) && !is_space(cp);
}

void append_lowered(std::string& out, std::string_view s, size_t pos, size_t len, char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') {
        out.push_back(static_cast<char>(cp - 'A' + 'a'));
    } else {
        out.append(s.substr(pos, len));
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t len = 0;
        char32_t cp = decode_utf8(s, pos, len);
        if (is_word_char(cp)) {
            append_lowered(current, s, pos, len, cp);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
        pos += len;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

size_t whitespace_token_count(std::string_view s) {
    size_t count = 0;
    bool in_token = false;
    for (char c : s) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (ws) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::pair<size_t, size_t>> whitespace_token_spans(std::string_view s) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t start = 0;
    bool in_token = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (ws) {
            if (in_token) {
                spans.emplace_back(start, i);
                in_token = false;
            }
        } else if (!in_token) {
            start = i;
            in_token = true;
        }
    }
    if (in_token) spans.emplace_back(start, s.size());
    return spans;
}

std::vector<std::pair<size_t, size_t>> sentence_spans(std::string_view p) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t start = 0;
    size_t i = 0;
    while (i < p.size()) {
        const char c = p[i];
        if (c == '.' || c == '!' || c == '?') {
            // boundary iff whitespace+ then ASCII uppercase
            size_t j = i + 1;
            while (j < p.size() && (p[j] == ' ' || p[j] == '\t' || p[j] == '\n' || p[j] == '\r'))
                ++j;
            if (j > i + 1 && j < p.size() && p[j] >= 'A' && p[j] <= 'Z') {
                spans.emplace_back(start, i + 1);
                start = j;
                i = j;
                continue;
            }
        }
        ++i;
    }
    if (start < p.size()) {
        // trim trailing whitespace from the last sentence
        size_t end = p.size();
        while (end > start) {
            const char c = p[end - 1];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                --end;
            } else {
                break;
            }
        }
        if (end > start) spans.emplace_back(start, end);
    }
    return spans;
}

std::string normalize_answer(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t len = 0;
        char32_t cp = decode_utf8(s, pos, len);
        if (is_punctuation(cp)) {
            // deleted outright: "Adeno-carcinoma" -> "adenocarcinoma"
        } else if (is_space(cp) || cp == 0xFFFD) {
            pending_space = true;
        } else {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            append_lowered(out, s, pos, len, cp);
        }
        pos += len;
    }
    return out;
}

}  // namespace scilit::text
