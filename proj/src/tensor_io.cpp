#include "cwa/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "cwa/fs_util.hpp"

namespace cwa {

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return std::move(ss).str();
}

namespace {

constexpr char kMagic[4] = {'C', 'W', 'T', '1'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_cwt(std::ostream& os, const Tensor& t) {
  if (t.rank() < 1 || t.rank() > 255) throw InvalidInputError("cwt: rank out of range");
  os.write(kMagic, 4);
  const unsigned char rank = static_cast<unsigned char>(t.rank());
  os.write(reinterpret_cast<const char*>(&rank), 1);
  for (int d : t.shape()) put_u32_le(os, static_cast<std::uint32_t>(d));
  static_assert(sizeof(float) == 4);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    float v = t[i];
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32_le(os, bits);
  }
  if (!os) throw IoError("cwt: write failed");
}

Tensor read_cwt(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("cwt: bad magic");
  unsigned char rank = 0;
  is.read(reinterpret_cast<char*>(&rank), 1);
  if (!is || rank == 0) throw IoError("cwt: bad rank");
  std::vector<int> shape(rank);
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32_le(is);
    if (!is || d == 0 || d > (1u << 24)) throw IoError("cwt: bad dim");
    shape[static_cast<std::size_t>(i)] = static_cast<int>(d);
  }
  Tensor t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    const std::uint32_t bits = get_u32_le(is);
    float v;
    std::memcpy(&v, &bits, 4);
    t[i] = v;
  }
  if (!is) throw IoError("cwt: truncated payload");
  if (!t.all_finite()) throw IoError("cwt: non-finite payload");
  return t;
}

void write_cwt_file(const std::filesystem::path& path, const Tensor& t) {
  std::ostringstream ss(std::ios::binary);
  write_cwt(ss, t);
  atomic_write_file(path, std::move(ss).str());
}

Tensor read_cwt_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  return read_cwt(is);
}

}  // namespace cwa
