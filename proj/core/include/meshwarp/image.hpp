#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace meshwarp {

struct PixelPos {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Interleaved row-major image, `channels` values per pixel.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    assert(width >= 0 && height >= 0 && channels > 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::size_t index(int x, int y, int c = 0) const {
    assert(contains(x, y) && c >= 0 && c < channels_);
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height() && channels_ == other.channels();
  }
  template <typename U>
  bool same_size(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;
using ImageF = Image<float>;

inline Rgb8 get_rgb(const ImageU8& image, int x, int y) {
  return {image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)};
}

inline void set_rgb(ImageU8& image, int x, int y, Rgb8 c) {
  image.at(x, y, 0) = c.r;
  image.at(x, y, 1) = c.g;
  image.at(x, y, 2) = c.b;
}

/// Widens 8-bit values to float without rescaling (0..255).
ImageF to_float(const ImageU8& image);
/// Rounds to nearest and clamps to [0, 255].
ImageU8 to_u8(const ImageF& image);

}  // namespace meshwarp
