#pragma once

#include <filesystem>
#include <iosfwd>

#include "cwa/tensor.hpp"

namespace cwa {

// Binary tensor format: magic "CWT1", u8 rank, little-endian u32 dims,
// little-endian float32 payload, no padding.

void write_cwt(std::ostream& os, const Tensor& t);
Tensor read_cwt(std::istream& is);

// File variants write atomically (temp file + rename).
void write_cwt_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_cwt_file(const std::filesystem::path& path);

}  // namespace cwa
