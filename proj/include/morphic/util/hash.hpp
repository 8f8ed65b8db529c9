#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "morphic/util/expected.hpp"

namespace morphic::util {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& s);

// Streams the file; never loads it whole.
Expected<std::string, std::string> sha256_file_hex(
    const std::filesystem::path& path);

}  // namespace morphic::util
