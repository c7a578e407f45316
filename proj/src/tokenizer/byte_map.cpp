#include "tulpar/tokenizer/byte_map.hpp"

#include "tulpar/text/utf8.hpp"

namespace tulpar::bpe {

ByteMap::ByteMap() {
    for (int i = 0; i < 512; ++i) from_cp_[i] = -1;
    int next = 0;
    for (int b = 0; b < 256; ++b) {
        const bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || b >= 174;
        const uint32_t cp = printable ? static_cast<uint32_t>(b)
                                      : static_cast<uint32_t>(256 + next++);
        to_cp_[b] = cp;
        from_cp_[cp] = b;
        std::string s;
        text::append_cp(s, cp);
        symbols_[b] = s;
    }
}

std::string ByteMap::map_bytes(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size() * 2);
    for (char c : raw) out += symbols_[static_cast<uint8_t>(c)];
    return out;
}

std::string ByteMap::unmap_symbols(std::string_view symbols, bool* ok) const {
    if (ok) *ok = true;
    std::string out;
    out.reserve(symbols.size());
    size_t i = 0;
    while (i < symbols.size()) {
        const uint32_t cp = text::decode_cp(symbols, i);
        const int b = to_byte(cp);
        if (b < 0) {
            if (ok) *ok = false;
            continue;
        }
        out.push_back(static_cast<char>(b));
    }
    return out;
}

const ByteMap& byte_map() {
    static const ByteMap instance;
    return instance;
}

}  // namespace tulpar::bpe
