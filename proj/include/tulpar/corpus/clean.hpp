#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace tulpar::corpus {

// Inclusive code point ranges defining the target script.
struct ScriptSet {
    std::string name;
    std::vector<std::pair<uint32_t, uint32_t>> ranges;

    bool contains(uint32_t cp) const {
        for (const auto& [lo, hi] : ranges) {
            if (cp >= lo && cp <= hi) return true;
        }
        return false;
    }

    static ScriptSet cyrillic();
    static ScriptSet latin();
    static ScriptSet named(const std::string& name);  // throws on unknown name
};

// Thresholds for the filter stages. Defaults target Kazakh web text.
struct StageConfig {
    int64_t min_length_chars = 50;
    double max_urls_per_1000_chars = 5.0;
    int64_t max_html_tags = 5;
    double min_language_script_ratio = 0.7;
    double min_language_marker_ratio = 0.02;
    ScriptSet script = ScriptSet::cyrillic();
    // Language-specific marker letters; empty set disables the language-id
    // stage. Defaults to the nine Kazakh-specific Cyrillic letters, both cases.
    std::unordered_set<uint32_t> marker_letters = default_kazakh_markers();

    static std::unordered_set<uint32_t> default_kazakh_markers();
    void validate() const;  // throws std::invalid_argument on bad thresholds
};

// -- Transforms (idempotent) --

// Drops category Cc code points except \n and \t, which the whitespace stage
// still needs.
std::string strip_control_chars(std::string_view text);

// Whitespace runs without a newline collapse to one space; runs containing
// newlines keep at most two of them; leading/trailing whitespace is trimmed.
std::string collapse_whitespace(std::string_view text);

// -- Filters (true = keep) --

bool filter_min_length(std::string_view text, const StageConfig& cfg);
bool filter_url_density(std::string_view text, const StageConfig& cfg);
bool filter_html_tags(std::string_view text, const StageConfig& cfg);
bool filter_script_ratio(std::string_view text, const StageConfig& cfg);
bool filter_language_id(std::string_view text, const StageConfig& cfg);

// Detection primitives behind the URL/HTML filters, exposed for testing.
// A URL is a case-insensitive match of "http://", "https://" or "www.",
// except a "www." immediately following a matched scheme. A tag is '<',
// optional '/', an ASCII letter, at most 100 non-'>' characters, then '>'.
int64_t count_urls(std::string_view text);
int64_t count_html_tags(std::string_view text);

}  // namespace tulpar::corpus
