#pragma once

#include <filesystem>
#include <vector>

#include "meshwarp/image.hpp"
#include "meshwarp/raster.hpp"

namespace meshwarp {

/// Backward motion: at each pixel of frame t+1, the offset (dx, dy) such that
/// the same surface element sat at (x - dx, y - dy) in frame t.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w),
        height(h),
        dx(static_cast<std::size_t>(w) * h, 0.0f),
        dy(static_cast<std::size_t>(w) * h, 0.0f),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Zero flow marked valid everywhere.
FlowField identity_flow(int width, int height);

/// Flow from buffer_t1 back to buffer_t. A face's position in a buffer is the
/// centroid of its pixels (not rounded); every pixel of face f
/// in buffer_t1 gets position_t1(f) - position_t(f). Faces not visible at t
/// get (0, 0) and valid = 0.
FlowField flow_between(const FaceBuffer& buffer_t, const FaceBuffer& buffer_t1);

/// Backward warp: out(p) = bilinear(image, p - flow(p)) where the flow is
/// valid and the sample lies inside [0, w-1] x [0, h-1]; 0 elsewhere.
ImageF warp(const ImageF& image, const FlowField& flow);

/// Residual temporal synthesis: initial + zeta * warp(previous, flow),
/// clamped to [0, 255]. For the first frame callers use `initial` as is.
ImageF temporal_compose(const ImageF& initial, const ImageF& previous, const FlowField& flow,
                        double zeta);

/// Foreground/background compositing with a binary mask: fg where mask != 0,
/// bg elsewhere.
ImageF composite(const ImageF& fg, const ImageF& bg, const ImageU8& mask);

/// FLO1: magic, w, h (u32 LE), w*h*2 f32 (dx, dy interleaved), w*h u8 validity.
void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);

/// HSV coding: hue = direction, value = magnitude / max_magnitude (the
/// largest valid magnitude when max_magnitude <= 0). Invalid pixels are black.
ImageU8 flow_to_color(const FlowField& flow, double max_magnitude = 0.0);

}  // namespace meshwarp
