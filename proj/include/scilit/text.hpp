#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scilit::text {

// Decodes one UTF-8 codepoint starting at `pos`. Returns the codepoint and
// writes the byte length consumed into `len`. Invalid sequences decode as a
// single byte with codepoint 0xFFFD so callers can keep scanning.
char32_t decode_utf8(std::string_view s, size_t pos, size_t& len);

// True for codepoints we classify as punctuation: the ASCII characters in
// Unicode category P plus the common non-ASCII punctuation blocks that occur
// in scientific text (Latin-1 punctuation, general punctuation U+2010..206F,
// supplemental punctuation, CJK punctuation, fullwidth ASCII punctuation).
bool is_punctuation(char32_t cp);

// True for ASCII whitespace and the common Unicode space codepoints
// (NBSP, en/em spaces, ideographic space, line/paragraph separators).
bool is_space(char32_t cp);

// Index tokenizer: lowercases ASCII letters and splits on every codepoint
// that is not ASCII alphanumeric, punctuation, or whitespace-classified.
// Non-ASCII codepoints outside the punctuation/space tables count as word
// characters and are kept verbatim, so "α-synuclein" -> ["α", "synuclein"].
std::vector<std::string> tokenize(std::string_view s);

// Whitespace-delimited token count; the rule used for caption word counts
// and LLM context-window budgeting.
size_t whitespace_token_count(std::string_view s);

// Byte spans [begin, end) of whitespace-delimited tokens, in order.
std::vector<std::pair<size_t, size_t>> whitespace_token_spans(std::string_view s);

// Byte spans of sentences within one paragraph. A sentence ends at '.', '!'
// or '?' when followed by one or more whitespace characters and then an
// ASCII uppercase letter; the final sentence ends at the end of the text.
// Spans include the terminator but not the following whitespace.
std::vector<std::pair<size_t, size_t>> sentence_spans(std::string_view paragraph);

// Answer normalization for exact-match scoring: lowercase ASCII, delete
// punctuation codepoints, map whitespace runs to a single space, trim.
std::string normalize_answer(std::string_view s);

}  // namespace scilit::text
