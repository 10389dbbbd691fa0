#include "binary_io.hpp"

namespace meshwarp::detail {

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot open for writing: " + path.string());
}

void BinaryWriter::u32(std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out_.write(bytes, 4);
}

void BinaryWriter::finish() {
  out_.flush();
  if (!out_) throw Error("write failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot open: " + path.string());
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat: " + path.string());
}

void BinaryReader::read(char* dst, std::size_t n) {
  if (pos_ + n > size_) throw Error("truncated file: " + path_.string());
  in_.read(dst, static_cast<std::streamsize>(n));
  if (!in_) throw Error("truncated file: " + path_.string());
  pos_ += n;
}

void BinaryReader::expect_magic(std::string_view tag) {
  std::string got(tag.size(), '\0');
  if (pos_ + tag.size() > size_) throw Error("bad magic (file too short): " + path_.string());
  read(got.data(), got.size());
  if (got != tag) throw Error("bad magic in " + path_.string() + ": expected " + std::string(tag));
}

std::uint8_t BinaryReader::u8() {
  char c;
  read(&c, 1);
  return static_cast<std::uint8_t>(c);
}

std::uint32_t BinaryReader::u32() {
  unsigned char bytes[4];
  read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void BinaryReader::require(std::uint64_t bytes) {
  if (size_ - pos_ < bytes) throw Error("truncated file: " + path_.string());
}

void BinaryReader::expect_end() {
  if (pos_ != size_) throw Error("trailing bytes in " + path_.string());
}

}  // namespace meshwarp::detail
