#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "meshwarp/camera.hpp"
#include "meshwarp/image.hpp"
#include "meshwarp/mesh.hpp"

namespace meshwarp {

inline constexpr FaceId kNoFace = 0xFFFFFFFFu;

/// Per-pixel visible face id and camera-space depth for one view and
/// timestep. depth is +inf exactly where face_id is kNoFace.
struct FaceBuffer {
  int width = 0;
  int height = 0;
  std::vector<FaceId> face_id;
  std::vector<float> depth;

  FaceBuffer() = default;
  FaceBuffer(int w, int h)
      : width(w),
        height(h),
        face_id(static_cast<std::size_t>(w) * h, kNoFace),
        depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity()) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  FaceId face_at(int x, int y) const { return face_id[index(x, y)]; }
  float depth_at(int x, int y) const { return depth[index(x, y)]; }
  std::size_t covered_pixels() const;

  friend bool operator==(const FaceBuffer&, const FaceBuffer&) = default;
};

/// Z-buffer rasterization of the posed mesh. A pixel is covered when its
/// center lies inside a projected triangle (top-left fill rule on shared
/// edges); the nearest perspective-correct depth wins and exact depth ties go
/// to the lower face id. Triangles with a vertex at or behind z = 1e-9 and
/// triangles of zero projected area are skipped. No back-face culling.
FaceBuffer rasterize(std::span<const Triangle> faces, const Vertices& posed, const Camera& camera);

inline FaceBuffer rasterize(const BodyMesh& mesh, const Vertices& posed, const Camera& camera) {
  return rasterize(mesh.faces, posed, camera);
}

/// Rasterizes the body together with static occluding geometry. Pixels where
/// an occluder is nearest become kNoFace in the returned body buffer.
FaceBuffer rasterize_with_occluders(const BodyMesh& mesh, const Vertices& posed,
                                    const Vertices& occluder_vertices,
                                    std::span<const Triangle> occluder_faces,
                                    const Camera& camera);

/// 1 where a face is visible, else 0 (1 channel).
ImageU8 mask_of(const FaceBuffer& buffer);
/// Part label per pixel, kBackgroundLabel where empty.
Image<PartLabel> segmentation_of(const FaceBuffer& buffer, const BodyMesh& mesh);
/// Camera-space depth in meters, +inf where empty.
ImageF depth_of(const FaceBuffer& buffer);

/// Flat Lambertian gray shading lit by a headlight at the camera center,
/// 255 * |cos| of the angle between the face normal and the direction to the
/// camera from the face centroid. Empty pixels are black.
ImageU8 shade(const FaceBuffer& buffer, const BodyMesh& mesh, const Vertices& posed,
              const Camera& camera);

/// FB1: magic, w, h (u32 LE), w*h u32 face ids (0xFFFFFFFF = none), w*h f32 depths.
void write_face_buffer(const std::filesystem::path& path, const FaceBuffer& buffer);
FaceBuffer read_face_buffer(const std::filesystem::path& path);

/// 16-bit PNG in millimeters, 0 = no surface (clamped to 65535).
void write_depth_png(const std::filesystem::path& path, const ImageF& depth);
/// 8-bit PNG of label ids (labels above 255 are rejected).
void write_segmentation_png(const std::filesystem::path& path, const Image<PartLabel>& labels);

}  // namespace meshwarp
