#include "meshwarp/raster.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "binary_io.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/parallel.hpp"
#include "meshwarp/png_io.hpp"

namespace meshwarp {

std::size_t FaceBuffer::covered_pixels() const {
  return static_cast<std::size_t>(
      std::count_if(face_id.begin(), face_id.end(), [](FaceId f) { return f != kNoFace; }));
}

namespace {

constexpr double kNearPlane = 1e-9;

struct ScreenVertex {
  double x;
  double y;
  double z;
};

struct SetupTriangle {
  ScreenVertex v[3];
  double area;  // > 0 after orientation fix-up
  bool top_left[3];  // per edge opposite to vertex i
  int x0, x1, y0, y1;  // inclusive pixel range
  FaceId id;
};

inline double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

inline bool is_top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

std::vector<SetupTriangle> setup(std::span<const Triangle> faces, const Vertices& posed,
                                 const Camera& camera) {
  std::vector<ScreenVertex> screen(posed.size());
  for (std::size_t i = 0; i < posed.size(); ++i) {
    const Eigen::Vector3d c = camera.to_camera(posed[i]);
    if (c.z() > kNearPlane) {
      const Eigen::Vector2d p = camera.project_camera(c);
      screen[i] = {p.x(), p.y(), c.z()};
    } else {
      screen[i] = {0.0, 0.0, c.z()};
    }
  }

  std::vector<SetupTriangle> tris;
  tris.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    SetupTriangle t;
    for (int k = 0; k < 3; ++k) t.v[k] = screen[faces[f][k]];
    if (t.v[0].z <= kNearPlane || t.v[1].z <= kNearPlane || t.v[2].z <= kNearPlane) continue;
    t.area = edge(t.v[0], t.v[1], t.v[2].x, t.v[2].y);
    if (t.area == 0.0 || !std::isfinite(t.area)) continue;
    if (t.area < 0.0) {
      std::swap(t.v[1], t.v[2]);
      t.area = -t.area;
    }
    t.top_left[0] = is_top_left(t.v[1], t.v[2]);
    t.top_left[1] = is_top_left(t.v[2], t.v[0]);
    t.top_left[2] = is_top_left(t.v[0], t.v[1]);
    const double minx = std::min({t.v[0].x, t.v[1].x, t.v[2].x});
    const double maxx = std::max({t.v[0].x, t.v[1].x, t.v[2].x});
    const double miny = std::min({t.v[0].y, t.v[1].y, t.v[2].y});
    const double maxy = std::max({t.v[0].y, t.v[1].y, t.v[2].y});
    // Pixel centers sit at integer + 0.5.
    const double lo_x = std::ceil(minx - 0.5), hi_x = std::floor(maxx - 0.5);
    const double lo_y = std::ceil(miny - 0.5), hi_y = std::floor(maxy - 0.5);
    if (hi_x < 0 || hi_y < 0 || lo_x > camera.width - 1 || lo_y > camera.height - 1) continue;
    t.x0 = static_cast<int>(std::max(lo_x, 0.0));
    t.x1 = static_cast<int>(std::min(hi_x, camera.width - 1.0));
    t.y0 = static_cast<int>(std::max(lo_y, 0.0));
    t.y1 = static_cast<int>(std::min(hi_y, camera.height - 1.0));
    if (t.x0 > t.x1 || t.y0 > t.y1) continue;
    t.id = static_cast<FaceId>(f);
    tris.push_back(t);
  }
  return tris;
}

inline bool inside(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

}  // namespace

FaceBuffer rasterize(std::span<const Triangle> faces, const Vertices& posed, const Camera& camera) {
  camera.validate();
  const auto tris = setup(faces, posed, camera);
  FaceBuffer buffer(camera.width, camera.height);
  std::vector<double> zbuf(buffer.face_id.size(), std::numeric_limits<double>::infinity());

  // Row bands are independent; each pixel keeps the minimum (depth, id),
  // which does not depend on traversal order.
  parallel_for_chunks(static_cast<std::size_t>(camera.height), [&](std::size_t row_begin,
                                                                    std::size_t row_end) {
    const int ry0 = static_cast<int>(row_begin);
    const int ry1 = static_cast<int>(row_end) - 1;
    for (const auto& t : tris) {
      const int y0 = std::max(t.y0, ry0);
      const int y1 = std::min(t.y1, ry1);
      for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = t.x0; x <= t.x1; ++x) {
          const double px = x + 0.5;
          const double w0 = edge(t.v[1], t.v[2], px, py);
          const double w1 = edge(t.v[2], t.v[0], px, py);
          const double w2 = edge(t.v[0], t.v[1], px, py);
          if (!inside(w0, t.top_left[0]) || !inside(w1, t.top_left[1]) ||
              !inside(w2, t.top_left[2])) {
            continue;
          }
          const double inv_z = (w0 / t.v[0].z + w1 / t.v[1].z + w2 / t.v[2].z) / t.area;
          const double z = 1.0 / inv_z;
          const std::size_t idx = buffer.index(x, y);
          if (z < zbuf[idx] || (z == zbuf[idx] && t.id < buffer.face_id[idx])) {
            zbuf[idx] = z;
            buffer.face_id[idx] = t.id;
          }
        }
      }
    }
  });

  for (std::size_t i = 0; i < zbuf.size(); ++i) buffer.depth[i] = static_cast<float>(zbuf[i]);
  return buffer;
}

FaceBuffer rasterize_with_occluders(const BodyMesh& mesh, const Vertices& posed,
                                    const Vertices& occluder_vertices,
                                    std::span<const Triangle> occluder_faces,
                                    const Camera& camera) {
  if (occluder_faces.empty()) return rasterize(mesh, posed, camera);
  Vertices all = posed;
  all.insert(all.end(), occluder_vertices.begin(), occluder_vertices.end());
  std::vector<Triangle> faces = mesh.faces;
  const auto offset = static_cast<std::uint32_t>(posed.size());
  for (const auto& t : occluder_faces) faces.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  FaceBuffer buffer = rasterize(faces, all, camera);
  const FaceId body_faces = static_cast<FaceId>(mesh.face_count());
  for (std::size_t i = 0; i < buffer.face_id.size(); ++i) {
    if (buffer.face_id[i] != kNoFace && buffer.face_id[i] >= body_faces) {
      buffer.face_id[i] = kNoFace;
      buffer.depth[i] = std::numeric_limits<float>::infinity();
    }
  }
  return buffer;
}

ImageU8 mask_of(const FaceBuffer& buffer) {
  ImageU8 mask(buffer.width, buffer.height, 1);
  auto out = mask.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = buffer.face_id[i] != kNoFace ? 1 : 0;
  return mask;
}

Image<PartLabel> segmentation_of(const FaceBuffer& buffer, const BodyMesh& mesh) {
  Image<PartLabel> labels(buffer.width, buffer.height, 1, kBackgroundLabel);
  auto out = labels.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (buffer.face_id[i] != kNoFace) out[i] = mesh.face_to_label(buffer.face_id[i]);
  }
  return labels;
}

ImageF depth_of(const FaceBuffer& buffer) {
  ImageF depth(buffer.width, buffer.height, 1);
  std::copy(buffer.depth.begin(), buffer.depth.end(), depth.data().begin());
  return depth;
}

ImageU8 shade(const FaceBuffer& buffer, const BodyMesh& mesh, const Vertices& posed,
              const Camera& camera) {
  ImageU8 image(buffer.width, buffer.height, 3, 0);
  const Eigen::Vector3d eye = camera.center();
  std::vector<std::int16_t> face_value(mesh.face_count(), -1);
  for (int y = 0; y < buffer.height; ++y) {
    for (int x = 0; x < buffer.width; ++x) {
      const FaceId f = buffer.face_at(x, y);
      if (f == kNoFace) continue;
      if (face_value[f] < 0) {
        const auto& t = mesh.faces[f];
        const Eigen::Vector3d n = (posed[t[1]] - posed[t[0]]).cross(posed[t[2]] - posed[t[0]]);
        const Eigen::Vector3d l = eye - mesh.face_centroid(f, posed);
        const double denom = n.norm() * l.norm();
        const double c = denom > 0.0 ? std::abs(n.dot(l)) / denom : 0.0;
        face_value[f] = static_cast<std::int16_t>(std::lround(255.0 * std::min(c, 1.0)));
      }
      const auto v = static_cast<std::uint8_t>(face_value[f]);
      set_rgb(image, x, y, {v, v, v});
    }
  }
  return image;
}

namespace {
constexpr std::string_view kBufferMagic = "FB1";
}

void write_face_buffer(const std::filesystem::path& path, const FaceBuffer& buffer) {
  detail::BinaryWriter out(path);
  out.magic(kBufferMagic);
  out.u32(static_cast<std::uint32_t>(buffer.width));
  out.u32(static_cast<std::uint32_t>(buffer.height));
  for (FaceId f : buffer.face_id) out.u32(f);
  for (float d : buffer.depth) out.f32(d);
  out.finish();
}

FaceBuffer read_face_buffer(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic(kBufferMagic);
  const std::uint32_t w = in.u32();
  const std::uint32_t h = in.u32();
  in.require(static_cast<std::uint64_t>(w) * h * 8);
  FaceBuffer buffer(static_cast<int>(w), static_cast<int>(h));
  for (auto& f : buffer.face_id) f = in.u32();
  for (auto& d : buffer.depth) d = in.f32();
  in.expect_end();
  return buffer;
}

void write_depth_png(const std::filesystem::path& path, const ImageF& depth) {
  ImageU16 mm(depth.width(), depth.height(), 1, 0);
  auto in = depth.data();
  auto out = mm.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!std::isfinite(in[i]) || in[i] <= 0.0f) continue;
    out[i] = static_cast<std::uint16_t>(std::clamp(std::lround(in[i] * 1000.0), 1L, 65535L));
  }
  write_png16(path, mm);
}

void write_segmentation_png(const std::filesystem::path& path, const Image<PartLabel>& labels) {
  ImageU8 out(labels.width(), labels.height(), 1);
  auto in = labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] > 255) throw Error("label " + std::to_string(in[i]) + " does not fit an 8-bit PNG");
    dst[i] = static_cast<std::uint8_t>(in[i]);
  }
  write_png(path, out);
}

}  // namespace meshwarp
