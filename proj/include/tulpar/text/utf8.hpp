#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tulpar::text {

// Strict UTF-8 validation: rejects overlong encodings, surrogates,
// code points above U+10FFFF, and truncated sequences.
bool is_valid_utf8(std::string_view s);

// Decodes one code point at byte offset `pos`. Returns the code point and
// advances `pos` past it. Must only be called on validated input.
uint32_t decode_cp(std::string_view s, size_t& pos);

// Appends the UTF-8 encoding of `cp` to `out`.
void append_cp(std::string& out, uint32_t cp);

std::vector<uint32_t> to_codepoints(std::string_view s);
std::string from_codepoints(const std::vector<uint32_t>& cps);

// Number of Unicode scalar values in a valid UTF-8 string.
size_t codepoint_count(std::string_view s);

}  // namespace tulpar::text
