#include "meshwarp/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "binary_io.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/parallel.hpp"

namespace meshwarp {

FlowField identity_flow(int width, int height) {
  FlowField flow(width, height);
  std::fill(flow.valid.begin(), flow.valid.end(), 1);
  return flow;
}

namespace {

struct PixelSum {
  std::int64_t sx = 0;
  std::int64_t sy = 0;
  std::int64_t count = 0;
};

std::vector<PixelSum> face_pixel_sums(const FaceBuffer& buffer, std::size_t face_slots) {
  std::vector<PixelSum> sums(face_slots);
  for (int y = 0; y < buffer.height; ++y) {
    for (int x = 0; x < buffer.width; ++x) {
      const FaceId f = buffer.face_at(x, y);
      if (f == kNoFace) continue;
      sums[f].sx += x;
      sums[f].sy += y;
      ++sums[f].count;
    }
  }
  return sums;
}

// Unrounded: rounding both ends can put a one-pixel error on the axis the face
// did not move along.
double mean(std::int64_t sum, std::int64_t count) { return static_cast<double>(sum) / static_cast<double>(count); }

}  // namespace

FlowField flow_between(const FaceBuffer& buffer_t, const FaceBuffer& buffer_t1) {
  if (buffer_t.width != buffer_t1.width || buffer_t.height != buffer_t1.height) {
    throw Error("flow_between: buffers differ in resolution");
  }
  std::size_t slots = 0;
  for (const FaceBuffer* b : {&buffer_t, &buffer_t1}) {
    for (FaceId f : b->face_id) {
      if (f != kNoFace) slots = std::max<std::size_t>(slots, static_cast<std::size_t>(f) + 1);
    }
  }
  const auto before = face_pixel_sums(buffer_t, slots);
  const auto after = face_pixel_sums(buffer_t1, slots);

  FlowField flow(buffer_t1.width, buffer_t1.height);
  for (int y = 0; y < buffer_t1.height; ++y) {
    for (int x = 0; x < buffer_t1.width; ++x) {
      const FaceId f = buffer_t1.face_at(x, y);
      if (f == kNoFace || before[f].count == 0) continue;
      const std::size_t i = flow.index(x, y);
      flow.dx[i] = static_cast<float>(mean(after[f].sx, after[f].count) - mean(before[f].sx, before[f].count));
      flow.dy[i] = static_cast<float>(mean(after[f].sy, after[f].count) - mean(before[f].sy, before[f].count));
      flow.valid[i] = 1;
    }
  }
  return flow;
}

ImageF warp(const ImageF& image, const FlowField& flow) {
  if (image.width() != flow.width || image.height() != flow.height) {
    throw Error("warp: image and flow differ in resolution");
  }
  const int w = image.width();
  const int h = image.height();
  const int channels = image.channels();
  ImageF out(w, h, channels, 0.0f);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid[i]) continue;
      const double sx = x - static_cast<double>(flow.dx[i]);
      const double sy = y - static_cast<double>(flow.dy[i]);
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1)) continue;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - x0;
      const double ay = sy - y0;
      for (int c = 0; c < channels; ++c) {
        const double top = (1.0 - ax) * image.at(x0, y0, c) + ax * image.at(x1, y0, c);
        const double bottom = (1.0 - ax) * image.at(x0, y1, c) + ax * image.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - ay) * top + ay * bottom);
      }
    }
  });
  return out;
}

ImageF temporal_compose(const ImageF& initial, const ImageF& previous, const FlowField& flow,
                        double zeta) {
  if (!initial.same_shape(previous)) throw Error("temporal_compose: image shapes differ");
  const ImageF warped = warp(previous, flow);
  ImageF out(initial.width(), initial.height(), initial.channels());
  auto a = initial.data();
  auto b = warped.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double v = static_cast<double>(a[i]) + zeta * static_cast<double>(b[i]);
    o[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

ImageF composite(const ImageF& fg, const ImageF& bg, const ImageU8& mask) {
  if (!fg.same_shape(bg) || !fg.same_size(mask) || mask.channels() != 1) {
    throw Error("composite: foreground, background, and mask shapes differ");
  }
  ImageF out(fg.width(), fg.height(), fg.channels());
  for (int y = 0; y < fg.height(); ++y) {
    for (int x = 0; x < fg.width(); ++x) {
      const ImageF& src = mask.at(x, y) != 0 ? fg : bg;
      for (int c = 0; c < fg.channels(); ++c) out.at(x, y, c) = src.at(x, y, c);
    }
  }
  return out;
}

namespace {
constexpr std::string_view kFlowMagic = "FLO1";
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  detail::BinaryWriter out(path);
  out.magic(kFlowMagic);
  out.u32(static_cast<std::uint32_t>(flow.width));
  out.u32(static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < flow.dx.size(); ++i) {
    out.f32(flow.dx[i]);
    out.f32(flow.dy[i]);
  }
  for (std::uint8_t v : flow.valid) out.u8(v);
  out.finish();
}

FlowField read_flow(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic(kFlowMagic);
  const std::uint32_t w = in.u32();
  const std::uint32_t h = in.u32();
  in.require(static_cast<std::uint64_t>(w) * h * 9);
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < flow.dx.size(); ++i) {
    flow.dx[i] = in.f32();
    flow.dy[i] = in.f32();
  }
  for (auto& v : flow.valid) v = in.u8();
  in.expect_end();
  return flow;
}

ImageU8 flow_to_color(const FlowField& flow, double max_magnitude) {
  if (max_magnitude <= 0.0) {
    for (std::size_t i = 0; i < flow.dx.size(); ++i) {
      if (flow.valid[i]) max_magnitude = std::max(max_magnitude, std::hypot(double{flow.dx[i]}, double{flow.dy[i]}));
    }
  }
  ImageU8 out(flow.width, flow.height, 3, 0);
  if (max_magnitude <= 0.0) return out;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid[i]) continue;
      const double mag = std::min(1.0, std::hypot(flow.dx[i], flow.dy[i]) / max_magnitude);
      double hue = std::atan2(flow.dy[i], flow.dx[i]) / (2.0 * std::numbers::pi);
      if (hue < 0.0) hue += 1.0;
      // HSV with full saturation.
      const double h6 = hue * 6.0;
      const int sector = static_cast<int>(h6) % 6;
      const double frac = h6 - std::floor(h6);
      const double v = mag;
      const double p = 0.0;
      const double q = v * (1.0 - frac);
      const double t = v * frac;
      double r = 0, g = 0, b = 0;
      switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
      }
      set_rgb(out, x, y,
              {static_cast<std::uint8_t>(std::lround(255 * r)),
               static_cast<std::uint8_t>(std::lround(255 * g)),
               static_cast<std::uint8_t>(std::lround(255 * b))});
    }
  }
  return out;
}

}  // namespace meshwarp
