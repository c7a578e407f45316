#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tulpar/tokenizer/byte_map.hpp"

namespace tulpar::bpe {

// Trained byte-level BPE model. Token strings live in byte-map symbol space.
// Ids are contiguous from 0: the 256 base byte symbols in byte order, then
// one id per merge in rank order, then the special tokens.
struct TokenizerModel {
    std::string name;
    std::unordered_map<std::string, int> vocab;
    std::vector<std::string> id_to_token;
    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::string> specials = {"<|endoftext|>"};

    int vocab_size() const { return static_cast<int>(id_to_token.size()); }
    int eot_id() const;  // id of the first special token
    std::optional<int> token_id(std::string_view token) const;

    // Rank lookup keyed by (left id, right id); built by finalize().
    struct MergeRule { int rank; int merged_id; };
    std::unordered_map<uint64_t, MergeRule> rank_by_pair;

    void finalize();   // rebuilds id_to_token/rank_by_pair from vocab+merges
    void validate() const;  // throws std::runtime_error on broken invariants
};

// Splits raw text into pre-token byte spans: runs of letters, digits, or
// other non-space symbols, each optionally owning one preceding space;
// whitespace otherwise forms its own spans.
std::vector<std::string_view> pretokenize(std::string_view text);

// Counts pre-tokens (in byte-map symbol space) across added texts, then runs
// greedy pair merging until the vocabulary budget is exhausted or no pair
// occurs at least twice. Ties break to the lexicographically smallest
// (left, right) token-string pair.
class BpeTrainer {
  public:
    BpeTrainer(int vocab_size, std::vector<std::string> specials = {"<|endoftext|>"});

    void add_text(std::string_view text);
    TokenizerModel train() const;

  private:
    int vocab_size_;
    std::vector<std::string> specials_;
    std::unordered_map<std::string, int64_t> word_counts_;
};

TokenizerModel train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                         std::vector<std::string> specials = {"<|endoftext|>"});

// Byte-level encoding: every input is encodable; specials are never produced
// from raw text. Decoding of ids produced by encode round-trips exactly;
// `lossy` is set when foreign byte sequences force U+FFFD replacement.
std::vector<int> encode(const TokenizerModel& model, std::string_view text);
std::string decode(const TokenizerModel& model, const std::vector<int>& ids,
                   bool* lossy = nullptr);

void save_tokenizer(const TokenizerModel& model, const std::string& path);
TokenizerModel load_tokenizer(const std::string& path);

}  // namespace tulpar::bpe
