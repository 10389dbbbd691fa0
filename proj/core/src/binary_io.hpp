#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "meshwarp/error.hpp"

namespace meshwarp::detail {

// Little-endian primitive writer for the FNT1/FB1/FLO1/MSEQ1 containers.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  // Throws unless the next bytes equal `tag`.
  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  float f32() { return std::bit_cast<float>(u32()); }
  // Throws unless the remaining byte count is at least `bytes`.
  void require(std::uint64_t bytes);
  void expect_end();

 private:
  void read(char* dst, std::size_t n);

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t pos_ = 0;
};

}  // namespace meshwarp::detail
