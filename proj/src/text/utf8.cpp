#include "tulpar/text/utf8.hpp"

namespace tulpar::text {

bool is_valid_utf8(std::string_view s) {
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        const uint8_t c0 = static_cast<uint8_t>(s[i]);
        if (c0 < 0x80) {
            ++i;
            continue;
        }
        size_t len;
        uint32_t cp, min;
        if ((c0 >> 5) == 0x6) {
            len = 2; cp = c0 & 0x1F; min = 0x80;
        } else if ((c0 >> 4) == 0xE) {
            len = 3; cp = c0 & 0x0F; min = 0x800;
        } else if ((c0 >> 3) == 0x1E) {
            len = 4; cp = c0 & 0x07; min = 0x10000;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (size_t k = 1; k < len; ++k) {
            const uint8_t c = static_cast<uint8_t>(s[i + k]);
            if ((c >> 6) != 0x2) return false;
            cp = (cp << 6) | (c & 0x3F);
        }
        if (cp < min) return false;                    // overlong
        if (cp >= 0xD800 && cp <= 0xDFFF) return false; // surrogate
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

uint32_t decode_cp(std::string_view s, size_t& pos) {
    const uint8_t c0 = static_cast<uint8_t>(s[pos]);
    if (c0 < 0x80) {
        ++pos;
        return c0;
    }
    // Malformed leads or truncated tails degrade to one byte rather than
    // reading out of bounds.
    if ((c0 >> 5) == 0x6 && pos + 1 < s.size()) {
        const uint32_t cp = ((c0 & 0x1Fu) << 6) | (static_cast<uint8_t>(s[pos + 1]) & 0x3Fu);
        pos += 2;
        return cp;
    }
    if ((c0 >> 4) == 0xE && pos + 2 < s.size()) {
        const uint32_t cp = ((c0 & 0x0Fu) << 12) |
                            ((static_cast<uint8_t>(s[pos + 1]) & 0x3Fu) << 6) |
                            (static_cast<uint8_t>(s[pos + 2]) & 0x3Fu);
        pos += 3;
        return cp;
    }
    if ((c0 >> 3) == 0x1E && pos + 3 < s.size()) {
        const uint32_t cp = ((c0 & 0x07u) << 18) |
                            ((static_cast<uint8_t>(s[pos + 1]) & 0x3Fu) << 12) |
                            ((static_cast<uint8_t>(s[pos + 2]) & 0x3Fu) << 6) |
                            (static_cast<uint8_t>(s[pos + 3]) & 0x3Fu);
        pos += 4;
        return cp;
    }
    ++pos;
    return c0;
}

void append_cp(std::string& out, uint32_t cp) {
    if (cp <= 0x7F) {
        out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp <= 0xFFFF) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::vector<uint32_t> to_codepoints(std::string_view s) {
    std::vector<uint32_t> out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) out.push_back(decode_cp(s, i));
    return out;
}

std::string from_codepoints(const std::vector<uint32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 2);
    for (uint32_t cp : cps) append_cp(out, cp);
    return out;
}

size_t codepoint_count(std::string_view s) {
    size_t count = 0;
    for (char c : s) {
        if ((static_cast<uint8_t>(c) & 0xC0) != 0x80) ++count;
    }
    return count;
}

}  // namespace tulpar::text
