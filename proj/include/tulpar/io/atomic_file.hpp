#pragma once

#include <string>

namespace tulpar::io {

// Writes content to <path>.tmp.<pid> and renames into place, so outputs are
// either complete or absent.
void atomic_write(const std::string& path, const std::string& content);

// Temp-path helper for writers that stream before renaming.
std::string temp_path_for(const std::string& path);
void rename_into_place(const std::string& temp, const std::string& path);

}  // namespace tulpar::io
