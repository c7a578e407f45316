#include "tulpar/tokenizer/fertility.hpp"

#include <stdexcept>

#include "tulpar/text/unicode.hpp"
#include "tulpar/text/utf8.hpp"

namespace tulpar::bpe {

int64_t count_words(std::string_view text) {
    int64_t words = 0;
    bool in_word = false;
    size_t i = 0;
    while (i < text.size()) {
        const uint32_t cp = text::decode_cp(text, i);
        const bool ws = text::is_whitespace(cp);
        if (!ws && !in_word) ++words;
        in_word = !ws;
    }
    if (words == 0) throw std::invalid_argument("text has no whitespace-separated words");
    return words;
}

FertilityReport fertility(const TokenizerModel& model, std::string_view text) {
    FertilityReport report;
    report.tokenizer_name = model.name;
    report.word_count = count_words(text);
    report.token_count = static_cast<int64_t>(encode(model, text).size());
    report.fertility =
        static_cast<double>(report.token_count) / static_cast<double>(report.word_count);
    return report;
}

}  // namespace tulpar::bpe
