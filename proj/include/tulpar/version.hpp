#pragma once

namespace tulpar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tulpar
