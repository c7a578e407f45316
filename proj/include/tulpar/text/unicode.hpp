#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tulpar::text {

// Character classes backed by generated UCD tables.
bool is_letter(uint32_t cp);       // general category L*
bool is_number(uint32_t cp);       // general category N*
bool is_space_separator(uint32_t cp);  // general category Zs
bool is_control(uint32_t cp);      // general category Cc

// Whitespace for word counting and collapsing: Zs plus the ASCII controls
// \t \n \v \f \r and NEL/LS/PS.
bool is_whitespace(uint32_t cp);

uint8_t combining_class(uint32_t cp);

// Canonical composition (NFC): full canonical decomposition, canonical
// reordering, then canonical recomposition. Input must be valid UTF-8.
std::string normalize_nfc(std::string_view s);

}  // namespace tulpar::text
