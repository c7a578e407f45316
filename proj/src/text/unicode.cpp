#include "tulpar/text/unicode.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

#include "tulpar/text/utf8.hpp"

namespace tulpar::text {
namespace {

#include "unicode_tables.inc"

bool in_ranges(uint32_t cp, const uint32_t ranges[][2], size_t count) {
    size_t lo = 0, hi = count;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (cp > ranges[mid][1]) lo = mid + 1;
        else if (cp < ranges[mid][0]) hi = mid;
        else return true;
    }
    return false;
}

// Hangul syllable arithmetic (UAX #15).
constexpr uint32_t kSBase = 0xAC00, kLBase = 0x1100, kVBase = 0x1161, kTBase = 0x11A7;
constexpr uint32_t kLCount = 19, kVCount = 21, kTCount = 28;
constexpr uint32_t kNCount = kVCount * kTCount;
constexpr uint32_t kSCount = kLCount * kNCount;

bool is_hangul_syllable(uint32_t cp) { return cp >= kSBase && cp < kSBase + kSCount; }

const DecompEntry* find_decomp(uint32_t cp) {
    size_t lo = 0, hi = kDecompEntries_count;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (kDecompEntries[mid].cp < cp) lo = mid + 1;
        else hi = mid;
    }
    if (lo < kDecompEntries_count && kDecompEntries[lo].cp == cp) return &kDecompEntries[lo];
    return nullptr;
}

// Composed code point for (first, second), or 0 if the pair does not compose.
uint32_t compose_pair(uint32_t first, uint32_t second) {
    if (first >= kLBase && first < kLBase + kLCount &&
        second >= kVBase && second < kVBase + kVCount) {
        return kSBase + ((first - kLBase) * kVCount + (second - kVBase)) * kTCount;
    }
    if (is_hangul_syllable(first) && (first - kSBase) % kTCount == 0 &&
        second > kTBase && second < kTBase + kTCount) {
        return first + (second - kTBase);
    }
    size_t lo = 0, hi = kCompEntries_count;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        const CompEntry& e = kCompEntries[mid];
        if (e.first < first || (e.first == first && e.second < second)) lo = mid + 1;
        else hi = mid;
    }
    if (lo < kCompEntries_count && kCompEntries[lo].first == first &&
        kCompEntries[lo].second == second) {
        return kCompEntries[lo].composed;
    }
    return 0;
}

bool may_compose_backward(uint32_t cp) {
    if (cp >= kVBase && cp < kVBase + kVCount) return true;
    if (cp > kTBase && cp < kTBase + kTCount) return true;
    size_t lo = 0, hi = kCompSecond_count;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (kCompSecond[mid] < cp) lo = mid + 1;
        else hi = mid;
    }
    return lo < kCompSecond_count && kCompSecond[lo] == cp;
}

void decompose_into(uint32_t cp, std::vector<uint32_t>& out) {
    if (is_hangul_syllable(cp)) {
        const uint32_t idx = cp - kSBase;
        out.push_back(kLBase + idx / kNCount);
        out.push_back(kVBase + (idx % kNCount) / kTCount);
        const uint32_t t = idx % kTCount;
        if (t != 0) out.push_back(kTBase + t);
        return;
    }
    if (const DecompEntry* e = find_decomp(cp)) {
        for (uint8_t k = 0; k < e->len; ++k) out.push_back(kDecompData[e->offset + k]);
        return;
    }
    out.push_back(cp);
}

// Canonical ordering: stable bubble of adjacent marks with decreasing ccc.
void canonical_order(std::vector<uint32_t>& cps) {
    for (size_t i = 1; i < cps.size(); ++i) {
        const uint8_t c = combining_class(cps[i]);
        if (c == 0) continue;
        size_t j = i;
        while (j > 0 && combining_class(cps[j - 1]) > c) {
            std::swap(cps[j - 1], cps[j]);
            --j;
        }
    }
}

void compose(std::vector<uint32_t>& cps) {
    if (cps.empty()) return;
    std::vector<uint32_t> out;
    out.reserve(cps.size());
    out.push_back(cps[0]);
    // Index into `out` of the last starter, or npos if none seen yet.
    size_t starter = combining_class(cps[0]) == 0 ? 0 : static_cast<size_t>(-1);
    uint8_t last_ccc = combining_class(cps[0]);
    for (size_t i = 1; i < cps.size(); ++i) {
        const uint32_t cp = cps[i];
        const uint8_t c = combining_class(cp);
        if (starter != static_cast<size_t>(-1) && (last_ccc < c || last_ccc == 0)) {
            if (const uint32_t composed = compose_pair(out[starter], cp)) {
                out[starter] = composed;
                continue;  // last_ccc unchanged: the mark was absorbed
            }
        }
        out.push_back(cp);
        if (c == 0) starter = out.size() - 1;
        last_ccc = c;
    }
    cps = std::move(out);
}

}  // namespace

bool is_letter(uint32_t cp) { return in_ranges(cp, kLetterRanges, kLetterRanges_count); }
bool is_number(uint32_t cp) { return in_ranges(cp, kNumberRanges, kNumberRanges_count); }
bool is_space_separator(uint32_t cp) {
    return in_ranges(cp, kSpaceSepRanges, kSpaceSepRanges_count);
}

bool is_control(uint32_t cp) {
    return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

bool is_whitespace(uint32_t cp) {
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) return true;
    if (cp == 0x85 || cp == 0x2028 || cp == 0x2029) return true;
    return is_space_separator(cp);
}

uint8_t combining_class(uint32_t cp) {
    size_t lo = 0, hi = kCccEntries_count;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (cp > kCccEntries[mid].hi) lo = mid + 1;
        else if (cp < kCccEntries[mid].lo) hi = mid;
        else return kCccEntries[mid].ccc;
    }
    return 0;
}

std::string normalize_nfc(std::string_view s) {
    // Fast path: nothing decomposes, no marks, nothing composes backward.
    bool trivial = true;
    {
        size_t i = 0;
        while (i < s.size()) {
            const uint8_t c0 = static_cast<uint8_t>(s[i]);
            if (c0 < 0x80) {
                ++i;
                continue;
            }
            size_t pos = i;
            const uint32_t cp = decode_cp(s, pos);
            if (combining_class(cp) != 0 || is_hangul_syllable(cp) ||
                find_decomp(cp) != nullptr || may_compose_backward(cp)) {
                trivial = false;
                break;
            }
            i = pos;
        }
    }
    if (trivial) return std::string(s);

    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) decompose_into(decode_cp(s, i), cps);
    canonical_order(cps);
    compose(cps);
    return from_codepoints(cps);
}

}  // namespace tulpar::text
