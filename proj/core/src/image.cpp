#include "meshwarp/image.hpp"

#include <algorithm>
#include <cmath>

namespace meshwarp {

ImageF to_float(const ImageU8& image) {
  ImageF out(image.width(), image.height(), image.channels());
  std::copy(image.data().begin(), image.data().end(), out.data().begin());
  return out;
}

ImageU8 to_u8(const ImageF& image) {
  ImageU8 out(image.width(), image.height(), image.channels());
  std::transform(image.data().begin(), image.data().end(), out.data().begin(), [](float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return out;
}

}  // namespace meshwarp
