#include "tulpar/tokenizer/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tulpar/text/unicode.hpp"
#include "tulpar/text/utf8.hpp"

namespace tulpar::bpe {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kBaseAlphabet = 256;

inline uint64_t pack_pair(int a, int b) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
           static_cast<uint32_t>(b);
}

enum class CpClass { Letter, Digit, Other, Whitespace };

CpClass classify(uint32_t cp) {
    if (text::is_whitespace(cp)) return CpClass::Whitespace;
    if (text::is_letter(cp)) return CpClass::Letter;
    if (text::is_number(cp)) return CpClass::Digit;
    return CpClass::Other;
}

}  // namespace

int TokenizerModel::eot_id() const {
    if (specials.empty()) throw std::runtime_error("tokenizer has no special tokens");
    return kBaseAlphabet + static_cast<int>(merges.size());
}

std::optional<int> TokenizerModel::token_id(std::string_view token) const {
    const auto it = vocab.find(std::string(token));
    if (it == vocab.end()) return std::nullopt;
    return it->second;
}

void TokenizerModel::finalize() {
    vocab.clear();
    id_to_token.clear();
    rank_by_pair.clear();
    id_to_token.reserve(kBaseAlphabet + merges.size() + specials.size());
    for (int b = 0; b < kBaseAlphabet; ++b) {
        id_to_token.push_back(byte_map().symbol(static_cast<uint8_t>(b)));
    }
    for (const auto& [left, right] : merges) id_to_token.push_back(left + right);
    for (const auto& s : specials) id_to_token.push_back(s);
    for (size_t i = 0; i < id_to_token.size(); ++i) {
        if (!vocab.emplace(id_to_token[i], static_cast<int>(i)).second) {
            throw std::runtime_error("duplicate token string in vocabulary: " + id_to_token[i]);
        }
    }
    for (size_t r = 0; r < merges.size(); ++r) {
        const auto left = vocab.find(merges[r].first);
        const auto right = vocab.find(merges[r].second);
        if (left == vocab.end() || right == vocab.end()) {
            throw std::runtime_error("merge operand missing from vocabulary");
        }
        rank_by_pair[pack_pair(left->second, right->second)] = {
            static_cast<int>(r), kBaseAlphabet + static_cast<int>(r)};
    }
    validate();
}

void TokenizerModel::validate() const {
    if (id_to_token.size() != kBaseAlphabet + merges.size() + specials.size()) {
        throw std::runtime_error("vocabulary accounting broken: |vocab| != 256+merges+specials");
    }
    for (size_t r = 0; r < merges.size(); ++r) {
        const auto& [left, right] = merges[r];
        const auto lid = vocab.find(left);
        const auto rid = vocab.find(right);
        const int cap = kBaseAlphabet + static_cast<int>(r);
        if (lid == vocab.end() || rid == vocab.end() || lid->second >= cap ||
            rid->second >= cap) {
            throw std::runtime_error("merge " + std::to_string(r) +
                                     " uses an operand that does not precede it");
        }
        if (!vocab.count(left + right)) {
            throw std::runtime_error("merge product missing from vocabulary");
        }
    }
}

std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<std::string_view> out;
    const size_t n = text.size();
    size_t i = 0;

    // Consumes a letter/digit/other run starting at `pos` (which may point at
    // one owned leading space) and emits it.
    auto consume_run = [&](size_t start, size_t pos) {
        size_t j = pos;
        uint32_t cp = text::decode_cp(text, j);
        const CpClass cls = classify(cp);
        size_t end = j;
        while (j < n) {
            const size_t next = j;
            size_t peek = next;
            cp = text::decode_cp(text, peek);
            if (classify(cp) != cls) break;
            j = peek;
            end = j;
        }
        out.push_back(text.substr(start, end - start));
        return end;
    };

    while (i < n) {
        size_t peek = i;
        const uint32_t cp = text::decode_cp(text, peek);
        if (classify(cp) != CpClass::Whitespace) {
            i = consume_run(i, i);
            continue;
        }
        // Maximal whitespace run; remember where its final code point starts.
        size_t j = i, last_start = i;
        size_t cps = 0;
        while (j < n) {
            size_t q = j;
            const uint32_t wcp = text::decode_cp(text, q);
            if (classify(wcp) != CpClass::Whitespace) break;
            last_start = j;
            j = q;
            ++cps;
        }
        if (j >= n) {  // trailing whitespace is one span
            out.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        if (cps > 1) {  // all but the final whitespace code point form a span
            out.push_back(text.substr(i, last_start - i));
            i = last_start;
            continue;
        }
        if (cp == ' ') {  // a single space binds to the following run
            i = consume_run(i, i + 1);
        } else {
            out.push_back(text.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

BpeTrainer::BpeTrainer(int vocab_size, std::vector<std::string> specials)
    : vocab_size_(vocab_size), specials_(std::move(specials)) {
    if (vocab_size_ < kBaseAlphabet + static_cast<int>(specials_.size())) {
        throw std::invalid_argument("vocab_size must be at least 256 + |specials|");
    }
}

void BpeTrainer::add_text(std::string_view text) {
    for (const auto span : pretokenize(text)) {
        ++word_counts_[std::string(span)];
    }
}

TokenizerModel BpeTrainer::train() const {
    if (word_counts_.empty()) throw std::invalid_argument("empty training corpus");

    struct Word {
        std::vector<int> syms;
        int64_t count;
    };
    std::vector<Word> words;
    words.reserve(word_counts_.size());
    for (const auto& [raw, count] : word_counts_) {
        Word w;
        w.count = count;
        w.syms.reserve(raw.size());
        for (char c : raw) w.syms.push_back(static_cast<uint8_t>(c));
        words.push_back(std::move(w));
    }
    // Input order of an unordered_map is not deterministic; the tie rule
    // below makes the merge sequence independent of it, but sorting keeps the
    // word table itself reproducible for debugging.
    std::sort(words.begin(), words.end(),
              [](const Word& a, const Word& b) { return a.syms < b.syms; });

    std::vector<std::string> token_str;
    token_str.reserve(static_cast<size_t>(vocab_size_));
    for (int b = 0; b < kBaseAlphabet; ++b) {
        token_str.push_back(byte_map().symbol(static_cast<uint8_t>(b)));
    }

    std::unordered_map<uint64_t, int64_t> pair_counts;
    std::unordered_map<uint64_t, std::vector<int>> pair_words;

    auto add_word_pairs = [&](int widx, int64_t sign) {
        const Word& w = words[static_cast<size_t>(widx)];
        for (size_t k = 0; k + 1 < w.syms.size(); ++k) {
            const uint64_t key = pack_pair(w.syms[k], w.syms[k + 1]);
            auto& c = pair_counts[key];
            c += sign * w.count;
            if (c <= 0) pair_counts.erase(key);
            else if (sign > 0) pair_words[key].push_back(widx);
        }
    };
    for (size_t widx = 0; widx < words.size(); ++widx) {
        add_word_pairs(static_cast<int>(widx), +1);
    }

    TokenizerModel model;
    model.specials = specials_;
    const int merge_budget = vocab_size_ - kBaseAlphabet - static_cast<int>(specials_.size());

    for (int rank = 0; rank < merge_budget; ++rank) {
        // Highest count, ties to lexicographically smallest (left, right).
        int64_t best_count = 0;
        int best_left = -1, best_right = -1;
        for (const auto& [key, count] : pair_counts) {
            if (count < 2) continue;
            const int left = static_cast<int>(key >> 32);
            const int right = static_cast<int>(key & 0xFFFFFFFFu);
            if (count > best_count) {
                best_count = count;
                best_left = left;
                best_right = right;
            } else if (count == best_count) {
                const auto cand = std::tie(token_str[static_cast<size_t>(left)],
                                           token_str[static_cast<size_t>(right)]);
                const auto cur = std::tie(token_str[static_cast<size_t>(best_left)],
                                          token_str[static_cast<size_t>(best_right)]);
                if (cand < cur) {
                    best_left = left;
                    best_right = right;
                }
            }
        }
        if (best_count < 2) break;

        const int merged_id = kBaseAlphabet + rank;
        token_str.push_back(token_str[static_cast<size_t>(best_left)] +
                            token_str[static_cast<size_t>(best_right)]);
        model.merges.emplace_back(token_str[static_cast<size_t>(best_left)],
                                  token_str[static_cast<size_t>(best_right)]);

        const uint64_t key = pack_pair(best_left, best_right);
        auto affected = std::move(pair_words[key]);
        pair_words.erase(key);
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

        for (const int widx : affected) {
            Word& w = words[static_cast<size_t>(widx)];
            bool contains = false;
            for (size_t k = 0; k + 1 < w.syms.size(); ++k) {
                if (w.syms[k] == best_left && w.syms[k + 1] == best_right) {
                    contains = true;
                    break;
                }
            }
            if (!contains) continue;  // stale index from an earlier rewrite
            add_word_pairs(widx, -1);
            std::vector<int> rewritten;
            rewritten.reserve(w.syms.size());
            size_t k = 0;
            while (k < w.syms.size()) {
                if (k + 1 < w.syms.size() && w.syms[k] == best_left &&
                    w.syms[k + 1] == best_right) {
                    rewritten.push_back(merged_id);
                    k += 2;
                } else {
                    rewritten.push_back(w.syms[k]);
                    ++k;
                }
            }
            w.syms = std::move(rewritten);
            add_word_pairs(widx, +1);
        }
    }

    model.finalize();
    return model;
}

TokenizerModel train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                         std::vector<std::string> specials) {
    BpeTrainer trainer(vocab_size, std::move(specials));
    for (const auto& text : corpus) trainer.add_text(text);
    return trainer.train();
}

std::vector<int> encode(const TokenizerModel& model, std::string_view text) {
    std::vector<int> out;
    out.reserve(text.size() / 3 + 1);
    std::vector<int> ids;
    for (const auto span : pretokenize(text)) {
        ids.clear();
        ids.reserve(span.size());
        for (char c : span) ids.push_back(static_cast<uint8_t>(c));
        while (ids.size() > 1) {
            int best_rank = std::numeric_limits<int>::max();
            size_t best_pos = 0;
            int best_id = -1;
            for (size_t i = 0; i + 1 < ids.size(); ++i) {
                const auto it = model.rank_by_pair.find(pack_pair(ids[i], ids[i + 1]));
                if (it != model.rank_by_pair.end() && it->second.rank < best_rank) {
                    best_rank = it->second.rank;
                    best_pos = i;
                    best_id = it->second.merged_id;
                }
            }
            if (best_id < 0) break;
            ids[best_pos] = best_id;
            ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
        }
        out.insert(out.end(), ids.begin(), ids.end());
    }
    return out;
}

std::string decode(const TokenizerModel& model, const std::vector<int>& ids, bool* lossy) {
    if (lossy) *lossy = false;
    std::string symbols;
    for (const int id : ids) {
        if (id < 0 || id >= model.vocab_size()) {
            throw std::out_of_range("token id " + std::to_string(id) + " not in vocabulary");
        }
        symbols += model.id_to_token[static_cast<size_t>(id)];
    }
    bool mapped_ok = true;
    std::string bytes = byte_map().unmap_symbols(symbols, &mapped_ok);
    if (!mapped_ok && lossy) *lossy = true;
    if (text::is_valid_utf8(bytes)) return bytes;

    // Foreign ids can produce byte sequences that are not UTF-8; replace the
    // offending bytes instead of failing.
    if (lossy) *lossy = true;
    std::string repaired;
    repaired.reserve(bytes.size());
    size_t i = 0;
    while (i < bytes.size()) {
        size_t len = 1;
        const uint8_t c0 = static_cast<uint8_t>(bytes[i]);
        if ((c0 >> 5) == 0x6) len = 2;
        else if ((c0 >> 4) == 0xE) len = 3;
        else if ((c0 >> 3) == 0x1E) len = 4;
        else if (c0 >= 0x80) len = 1;
        const std::string_view candidate(bytes.data() + i, std::min(len, bytes.size() - i));
        if (text::is_valid_utf8(candidate) && candidate.size() == len) {
            repaired.append(candidate);
            i += len;
        } else {
            text::append_cp(repaired, 0xFFFD);
            ++i;
        }
    }
    return repaired;
}

void save_tokenizer(const TokenizerModel& model, const std::string& path) {
    ordered_json j;
    ordered_json vocab = ordered_json::object();
    for (const auto& token : model.id_to_token) vocab[token] = model.vocab.at(token);
    j["vocab"] = vocab;
    ordered_json merges = ordered_json::array();
    for (const auto& [left, right] : model.merges) merges.push_back(left + " " + right);
    j["merges"] = merges;
    j["specials"] = model.specials;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write tokenizer file: " + path);
    out << j.dump(1) << "\n";
}

TokenizerModel load_tokenizer(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tokenizer file: " + path);
    json j;
    in >> j;

    TokenizerModel model;
    model.name = path;
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) model.name = path.substr(slash + 1);

    for (const auto& m : j.at("merges")) {
        const std::string s = m.get<std::string>();
        const auto sp = s.find(' ');
        if (sp == std::string::npos) throw std::runtime_error("malformed merge entry: " + s);
        model.merges.emplace_back(s.substr(0, sp), s.substr(sp + 1));
    }
    model.specials.clear();
    for (const auto& s : j.at("specials")) model.specials.push_back(s.get<std::string>());
    model.finalize();

    // The stored vocab is authoritative for ids; confirm it matches the
    // canonical layout rebuilt from merges+specials.
    const auto& vocab = j.at("vocab");
    if (vocab.size() != model.id_to_token.size()) {
        throw std::runtime_error("tokenizer vocab size disagrees with merges+specials");
    }
    for (auto it = vocab.begin(); it != vocab.end(); ++it) {
        const auto found = model.vocab.find(it.key());
        if (found == model.vocab.end() || found->second != it.value().get<int>()) {
            throw std::runtime_error("tokenizer vocab entry disagrees with canonical ids: " +
                                     it.key());
        }
    }
    return model;
}

}  // namespace tulpar::bpe
