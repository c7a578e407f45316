#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tulpar::bpe {

// Byte-level alphabet: the 256 byte values mapped bijectively onto printable
// code points. Printable ASCII and two Latin-1 ranges map to themselves; the
// remaining 68 bytes take consecutive code points from U+0100 upward.
class ByteMap {
  public:
    ByteMap();

    uint32_t to_codepoint(uint8_t b) const { return to_cp_[b]; }
    // Byte for a mapped code point, or -1 if the code point is foreign.
    int to_byte(uint32_t cp) const { return cp < 512 ? from_cp_[cp] : -1; }

    // Raw bytes -> symbol string (UTF-8 of the mapped code points).
    std::string map_bytes(std::string_view raw) const;
    // Inverse. Foreign code points make `ok` false and are dropped.
    std::string unmap_symbols(std::string_view symbols, bool* ok = nullptr) const;

    const std::string& symbol(uint8_t b) const { return symbols_[b]; }

  private:
    uint32_t to_cp_[256];
    int from_cp_[512];
    std::string symbols_[256];
};

const ByteMap& byte_map();  // shared immutable instance

}  // namespace tulpar::bpe
