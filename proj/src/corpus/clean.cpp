#include "tulpar/corpus/clean.hpp"

#include <algorithm>
#include <stdexcept>

#include "tulpar/text/unicode.hpp"
#include "tulpar/text/utf8.hpp"

namespace tulpar::corpus {

ScriptSet ScriptSet::cyrillic() {
    return {"cyrillic",
            {{0x0400, 0x04FF}, {0x0500, 0x052F}, {0x1C80, 0x1C88},
             {0x2DE0, 0x2DFF}, {0xA640, 0xA69F}}};
}

ScriptSet ScriptSet::latin() {
    return {"latin",
            {{0x0041, 0x005A}, {0x0061, 0x007A}, {0x00C0, 0x00FF},
             {0x0100, 0x024F}}};
}

ScriptSet ScriptSet::named(const std::string& name) {
    if (name == "cyrillic") return cyrillic();
    if (name == "latin") return latin();
    throw std::invalid_argument("unknown script set: " + name);
}

std::unordered_set<uint32_t> StageConfig::default_kazakh_markers() {
    // Ә Ғ Қ Ң Ө Ұ Ү Һ І and their lowercase forms.
    return {0x04D8, 0x04D9, 0x0492, 0x0493, 0x049A, 0x049B, 0x04A2, 0x04A3,
            0x04E8, 0x04E9, 0x04B0, 0x04B1, 0x04AE, 0x04AF, 0x04BA, 0x04BB,
            0x0406, 0x0456};
}

void StageConfig::validate() const {
    if (min_length_chars < 1) throw std::invalid_argument("min_length_chars must be >= 1");
    if (max_urls_per_1000_chars < 0) {
        throw std::invalid_argument("max_urls_per_1000_chars must be >= 0");
    }
    if (max_html_tags < 0) throw std::invalid_argument("max_html_tags must be >= 0");
    if (min_language_script_ratio < 0 || min_language_script_ratio > 1) {
        throw std::invalid_argument("min_language_script_ratio must be in [0,1]");
    }
    if (min_language_marker_ratio < 0 || min_language_marker_ratio > 1) {
        throw std::invalid_argument("min_language_marker_ratio must be in [0,1]");
    }
}

std::string strip_control_chars(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const size_t start = i;
        const uint32_t cp = text::decode_cp(text, i);
        if (text::is_control(cp) && cp != '\n' && cp != '\t') continue;
        out.append(text.substr(start, i - start));
    }
    return out;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const size_t start = i;
        size_t peek = i;
        uint32_t cp = text::decode_cp(text, peek);
        if (!text::is_whitespace(cp)) {
            out.append(text.substr(start, peek - start));
            i = peek;
            continue;
        }
        // Whole whitespace run: collapse to " ", "\n" or "\n\n".
        int newlines = 0;
        while (true) {
            if (cp == '\n') ++newlines;
            i = peek;
            if (peek >= text.size()) break;
            cp = text::decode_cp(text, peek);
            if (!text::is_whitespace(cp)) break;
        }
        if (out.empty()) continue;  // leading whitespace trimmed
        if (newlines == 0) out.push_back(' ');
        else out.append(newlines >= 2 ? "\n\n" : "\n");
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\n')) out.pop_back();
    return out;
}

bool filter_min_length(std::string_view text, const StageConfig& cfg) {
    return static_cast<int64_t>(text::codepoint_count(text)) >= cfg.min_length_chars;
}

namespace {

bool imatch(std::string_view text, size_t pos, std::string_view lower) {
    if (pos + lower.size() > text.size()) return false;
    for (size_t k = 0; k < lower.size(); ++k) {
        char c = text[pos + k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != lower[k]) return false;
    }
    return true;
}

}  // namespace

int64_t count_urls(std::string_view text) {
    int64_t count = 0;
    size_t i = 0;
    while (i < text.size()) {
        size_t matched = 0;
        if (imatch(text, i, "https://")) matched = 8;
        else if (imatch(text, i, "http://")) matched = 7;
        else if (imatch(text, i, "www.")) matched = 4;
        if (matched == 0) {
            ++i;
            continue;
        }
        ++count;
        i += matched;
        if (matched > 4 && imatch(text, i, "www.")) i += 4;  // same URL, not a second one
    }
    return count;
}

int64_t count_html_tags(std::string_view text) {
    int64_t count = 0;
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        size_t j = i + 1;
        if (j < text.size() && text[j] == '/') ++j;
        const bool has_letter =
            j < text.size() && ((text[j] >= 'a' && text[j] <= 'z') ||
                                (text[j] >= 'A' && text[j] <= 'Z'));
        if (!has_letter) {
            ++i;
            continue;
        }
        bool closed = false;
        size_t k = j;
        for (; k < text.size() && k - j <= 100; ++k) {
            if (text[k] == '>') {
                closed = true;
                break;
            }
        }
        if (closed) {
            ++count;
            i = k + 1;
        } else {
            ++i;
        }
    }
    return count;
}

bool filter_url_density(std::string_view text, const StageConfig& cfg) {
    const int64_t urls = count_urls(text);
    if (urls == 0) return true;
    const double chars = static_cast<double>(text::codepoint_count(text));
    // urls/chars*1000 <= max, arranged to keep integer boundaries exact
    return static_cast<double>(urls) * 1000.0 <= cfg.max_urls_per_1000_chars * chars;
}

bool filter_html_tags(std::string_view text, const StageConfig& cfg) {
    return count_html_tags(text) <= cfg.max_html_tags;
}

bool filter_script_ratio(std::string_view text, const StageConfig& cfg) {
    int64_t letters = 0, in_script = 0;
    size_t i = 0;
    while (i < text.size()) {
        const uint32_t cp = text::decode_cp(text, i);
        if (!text::is_letter(cp)) continue;
        ++letters;
        if (cfg.script.contains(cp)) ++in_script;
    }
    if (letters == 0) return false;
    return static_cast<double>(in_script) / static_cast<double>(letters) >=
           cfg.min_language_script_ratio;
}

bool filter_language_id(std::string_view text, const StageConfig& cfg) {
    if (cfg.marker_letters.empty()) return true;
    int64_t script_letters = 0, markers = 0;
    size_t i = 0;
    while (i < text.size()) {
        const uint32_t cp = text::decode_cp(text, i);
        if (!text::is_letter(cp) || !cfg.script.contains(cp)) continue;
        ++script_letters;
        if (cfg.marker_letters.count(cp)) ++markers;
    }
    if (script_letters == 0) return false;
    return static_cast<double>(markers) / static_cast<double>(script_letters) >=
           cfg.min_language_marker_ratio;
}

}  // namespace tulpar::corpus
