#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tulpar/tokenizer/bpe.hpp"

namespace tulpar::bpe {

// Fixed-length training blocks. File layout, little-endian: "TLPB" magic,
// u32 version, u32 block_len, u64 block_count, u32 vocab_size, then
// block_count * block_len u32 token ids.
struct BlockFileHeader {
    uint32_t version = 1;
    uint32_t block_len = 0;
    uint64_t block_count = 0;
    uint32_t vocab_size = 0;
};

// Streams ids into consecutive blocks of exactly block_len; the final
// partial block is dropped. finish() patches the header and atomically
// renames into place.
class BlockWriter {
  public:
    BlockWriter(const std::string& path, uint32_t block_len, uint32_t vocab_size);
    ~BlockWriter();

    void add(const std::vector<int>& ids);
    void add_id(int id);
    // Returns the final header; `dropped` (optional) receives the number of
    // trailing ids discarded.
    BlockFileHeader finish(uint64_t* dropped = nullptr);

  private:
    struct Impl;
    Impl* impl_;
};

struct BlockFile {
    BlockFileHeader header;
    std::vector<uint32_t> ids;  // block_count * block_len, row-major
};

BlockFile load_blocks(const std::string& path);

// Encodes each document, appends the end-of-text id, and packs everything
// into blocks. Returns the number of blocks written.
uint64_t pretokenize_corpus(const TokenizerModel& model,
                            const std::vector<std::string>& texts, uint32_t block_len,
                            const std::string& out_path, uint64_t* dropped = nullptr);

}  // namespace tulpar::bpe
