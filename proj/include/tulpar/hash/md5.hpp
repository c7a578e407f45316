#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace tulpar::hash {

using Md5Digest = std::array<uint8_t, 16>;

Md5Digest md5(std::string_view data);

std::string to_hex(const Md5Digest& d);

// Parses 32 lowercase/uppercase hex chars; returns false on malformed input.
bool from_hex(std::string_view hex, Md5Digest& out);

}  // namespace tulpar::hash
