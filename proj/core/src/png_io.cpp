#include "meshwarp/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "meshwarp/error.hpp"

namespace meshwarp {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp, png_const_charp message) {
  throw Error(std::string("libpng: ") + message);
}
void png_warn(png_structp, png_const_charp) {}

class PngReader {
 public:
  explicit PngReader(const std::filesystem::path& path) : file_(open_file(path, "rb")) {
    png_byte header[8];
    if (std::fread(header, 1, 8, file_.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
      throw Error("not a PNG file: " + path.string());
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
    png_set_sig_bytes(png_, 8);
    png_read_info(png_, info_);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }

  std::vector<png_byte> read_rows(int& width, int& height, int& channels) {
    png_read_update_info(png_, info_);
    width = static_cast<int>(png_get_image_width(png_, info_));
    height = static_cast<int>(png_get_image_height(png_, info_));
    channels = png_get_channels(png_, info_);
    const std::size_t stride = png_get_rowbytes(png_, info_);
    std::vector<png_byte> buffer(stride * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + stride * y;
    png_read_image(png_, rows.data());
    png_read_end(png_, nullptr);
    return buffer;
  }

 private:
  FilePtr file_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
 public:
  explicit PngWriter(const std::filesystem::path& path) : file_(open_file(path, "wb")) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  void write(int width, int height, int bit_depth, int color_type, const png_byte* data,
             std::size_t stride) {
    png_set_IHDR(png_, info_, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_, info_);
    if (bit_depth == 16) png_set_swap(png_);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
    png_write_image(png_, rows.data());
    png_write_end(png_, nullptr);
  }

 private:
  FilePtr file_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

}  // namespace

ImageU8 read_png(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw Error("read_png: channels must be 1 or 3");
  PngReader reader(path);
  png_structp png = reader.png();
  png_infop info = reader.info();

  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  const bool gray = (color & PNG_COLOR_MASK_COLOR) == 0;
  if (channels == 3 && gray) png_set_gray_to_rgb(png);
  if (channels == 1 && !gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);

  int w = 0, h = 0, c = 0;
  auto buffer = reader.read_rows(w, h, c);
  if (c != channels) throw Error("read_png: unexpected channel count in " + path.string());
  ImageU8 image(w, h, channels);
  std::copy(buffer.begin(), buffer.end(), image.data().begin());
  return image;
}

ImageU16 read_png16(const std::filesystem::path& path) {
  PngReader reader(path);
  png_structp png = reader.png();
  png_infop info = reader.info();
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 16) {
    throw Error("read_png16: expected 16-bit gray PNG: " + path.string());
  }
  png_set_swap(png);
  int w = 0, h = 0, c = 0;
  auto buffer = reader.read_rows(w, h, c);
  ImageU16 image(w, h, 1);
  auto out = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
  }
  return image;
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error("write_png: channels must be 1 or 3");
  }
  PngWriter writer(path);
  writer.write(image.width(), image.height(), 8,
               image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               image.data().data(), static_cast<std::size_t>(image.width()) * image.channels());
}

void write_png16(const std::filesystem::path& path, const ImageU16& image) {
  if (image.channels() != 1) throw Error("write_png16: expected 1 channel");
  std::vector<png_byte> bytes(image.pixel_count() * 2);
  auto in = image.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    bytes[2 * i] = static_cast<png_byte>(in[i] & 0xFF);
    bytes[2 * i + 1] = static_cast<png_byte>(in[i] >> 8);
  }
  PngWriter writer(path);
  writer.write(image.width(), image.height(), 16, PNG_COLOR_TYPE_GRAY, bytes.data(),
               static_cast<std::size_t>(image.width()) * 2);
}

}  // namespace meshwarp
