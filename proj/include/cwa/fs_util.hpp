#pragma once

#include <filesystem>
#include <string>

namespace cwa {

// Writes bytes to path via a temp file in the same directory, then renames.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace cwa
