#include "tulpar/io/atomic_file.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace tulpar::io {

std::string temp_path_for(const std::string& path) {
    return path + ".tmp." + std::to_string(static_cast<long>(getpid()));
}

void rename_into_place(const std::string& temp, const std::string& path) {
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp);
        throw std::runtime_error("cannot move " + temp + " to " + path + ": " + ec.message());
    }
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string temp = temp_path_for(path);
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write: " + temp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::filesystem::remove(temp);
            throw std::runtime_error("short write: " + temp);
        }
    }
    rename_into_place(temp, path);
}

}  // namespace tulpar::io
