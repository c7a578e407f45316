#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tulpar/tokenizer/bpe.hpp"

namespace tulpar::bpe {

// Tokens per whitespace-separated word; the efficiency metric for comparing
// tokenizers on a fixed text.
struct FertilityReport {
    std::string tokenizer_name;
    int64_t token_count = 0;
    int64_t word_count = 0;
    double fertility = 0.0;
};

// Words are maximal non-whitespace runs. Throws std::invalid_argument when
// the text contains none.
int64_t count_words(std::string_view text);

FertilityReport fertility(const TokenizerModel& model, std::string_view text);

}  // namespace tulpar::bpe
