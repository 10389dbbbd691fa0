#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include "meshwarp/camera.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/raster.hpp"
#include "support.hpp"

using namespace meshwarp;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

Camera plain_camera(int w, int h, double focal) {
  Camera c;
  c.fx = c.fy = focal;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  c.width = w;
  c.height = h;
  return c;
}

// Triangle facing the camera at depth z, covering roughly `half` pixels around
// the image center.
BodyMesh fronto(const Camera& c, double z, double half, FaceId count = 1) {
  Vertices v;
  std::vector<Triangle> f;
  for (FaceId i = 0; i < count; ++i) {
    const double zi = z + i;
    const double s = zi / c.fx;
    v.push_back({-half * s, -half * s, zi});
    v.push_back({half * s, -half * s, zi});
    v.push_back({0.0, half * s, zi});
    f.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  return ts::labeled(std::move(v), std::move(f));
}

void expect_matches_oracle(const BodyMesh& m, const Camera& cam) {
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  const auto oracle = ts::raycast(m.faces, m.vertices, cam);
  for (std::size_t i = 0; i < buf.face_id.size(); ++i) {
    if (oracle.near_edge[i]) continue;
    ASSERT_EQ(buf.face_id[i], oracle.buffer.face_id[i]) << "pixel " << i;
    if (buf.face_id[i] != kNoFace) EXPECT_NEAR(buf.depth[i], oracle.buffer.depth[i], 1e-4);
  }
}

}  // namespace

TEST(Camera, ValidationAndJsonRoundTrip) {
  Camera c = plain_camera(32, 24, 40.0);
  EXPECT_NO_THROW(c.validate());
  const fs::path dir = ts::temp_dir("camera_json");
  c.rotation = Eigen::AngleAxisd(0.3, Eigen::Vector3d(0.2, 1.0, 0.1).normalized()).toRotationMatrix();
  c.translation = {0.1, -0.2, 3.0};
  write_camera_json(dir / "c.json", c);
  const Camera back = read_camera_json(dir / "c.json");
  EXPECT_NEAR((back.rotation - c.rotation).norm(), 0.0, 1e-6);
  EXPECT_NEAR((back.translation - c.translation).norm(), 0.0, 1e-6);
  EXPECT_EQ(back.width, 32);

  Camera bad = c;
  bad.fx = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.rotation(0, 0) += 1e-3;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Camera, WeakPerspectiveMatchesOrthographicProjection) {
  const int w = 224;
  const double s = 0.9, tx = 0.05, ty = -0.1;
  const Camera c = weak_perspective_to_pinhole(s, tx, ty, w, w);
  EXPECT_NEAR(c.translation.z(), 2.0 * 5000.0 / (s * w), 1e-9);
  for (const Eigen::Vector3d p : {Eigen::Vector3d(0.1, 0.2, 0.0), Eigen::Vector3d(-0.3, 0.4, 0.01)}) {
    const Eigen::Vector2d uv = c.project(p);
    const double u = (s * (p.x() + tx) + 1.0) * w / 2.0;
    const double v = (s * (p.y() + ty) + 1.0) * w / 2.0;
    EXPECT_NEAR(uv.x(), u, 0.05);
    EXPECT_NEAR(uv.y(), v, 0.05);
  }
}

TEST(Raster, SingleTriangleCoversCenter) {
  const Camera cam = plain_camera(8, 8, 8.0);
  const BodyMesh m = fronto(cam, 2.0, 3.0);
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  EXPECT_EQ(buf.face_at(4, 4), 0u);
  EXPECT_EQ(buf.face_at(0, 0), kNoFace);
  EXPECT_EQ(buf.face_at(7, 0), kNoFace);
  for (std::size_t i = 0; i < buf.face_id.size(); ++i) {
    EXPECT_EQ(buf.face_id[i] != kNoFace, std::isfinite(buf.depth[i]));
    if (buf.face_id[i] != kNoFace) EXPECT_FLOAT_EQ(buf.depth[i], 2.0f);
  }
  expect_matches_oracle(m, cam);
}

TEST(Raster, NearerOfTwoStackedTrianglesWins) {
  const Camera cam = plain_camera(16, 16, 16.0);
  // Face 0 is farther, face 1 nearer, so the z-buffer is not just index order.
  BodyMesh m = fronto(cam, 2.0, 6.0, 2);
  std::swap(m.faces[0], m.faces[1]);
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < buf.face_id.size(); ++i) {
    if (buf.face_id[i] == kNoFace) continue;
    ++covered;
    EXPECT_EQ(buf.face_id[i], 1u);
    EXPECT_FLOAT_EQ(buf.depth[i], 2.0f);
  }
  EXPECT_GT(covered, 10u);
}

TEST(Raster, ExactDepthTieGoesToLowerId) {
  const Camera cam = plain_camera(16, 16, 16.0);
  BodyMesh m = fronto(cam, 2.0, 6.0);
  m.faces.push_back(m.faces[0]);
  m.face_labels.push_back(1);
  std::swap(m.faces[0], m.faces[1]);
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  for (FaceId id : buf.face_id) {
    if (id != kNoFace) EXPECT_EQ(id, 0u);
  }
}

TEST(Raster, SharedEdgesCoverEachPixelOnce) {
  // A square split along its diagonal, with pixel centers exactly on the
  // shared edge: the fill rule must give every covered center to one face
  // and leave no holes.
  const Camera cam = plain_camera(16, 16, 1.0);
  Camera ortho = cam;
  ortho.cx = 0.0;
  ortho.cy = 0.0;
  const BodyMesh m = ts::labeled({{2.0, 2.0, 1.0}, {12.0, 2.0, 1.0}, {12.0, 12.0, 1.0}, {2.0, 12.0, 1.0}},
                                 {{0, 1, 2}, {0, 2, 3}});
  const FaceBuffer buf = rasterize(m, m.vertices, ortho);
  int covered = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const bool inside = x + 0.5 >= 2.0 && x + 0.5 < 12.0 && y + 0.5 >= 2.0 && y + 0.5 < 12.0;
      EXPECT_EQ(buf.face_at(x, y) != kNoFace, inside) << x << "," << y;
      covered += inside;
    }
  }
  EXPECT_EQ(buf.covered_pixels(), static_cast<std::size_t>(covered));
}

TEST(Raster, RandomSoupMatchesRaycastOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const Camera cam = ts::random_camera(rng, 32, 32);
    const BodyMesh m = ts::random_soup(rng, cam, 50);
    expect_matches_oracle(m, cam);
  }
}

TEST(Raster, ClosedMeshMatchesRaycastOracle) {
  std::mt19937_64 rng(3);
  const BodyMesh m = ts::heightfield(rng, 7, 7, 0.3);
  Camera cam = plain_camera(48, 48, 30.0);
  cam.rotation = Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitX()).toRotationMatrix();
  cam.translation = {-3.5, -3.5, 9.0};
  expect_matches_oracle(m, cam);
}

TEST(Raster, TranslatingAlongAxisAddsOneToDepth) {
  // Fronto-parallel facets at distinct depths, so the same facet keeps a
  // constant depth at every pixel it covers.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Camera cam = plain_camera(32, 32, 5000.0);
  Vertices v;
  std::vector<Triangle> f;
  for (std::uint32_t i = 0; i < 12; ++i) {
    const double z = 50.0 + 0.15 * i;
    for (int k = 0; k < 3; ++k) v.push_back({0.2 * u(rng), 0.2 * u(rng), z});
    f.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  const BodyMesh m = ts::labeled(v, f);
  Vertices moved = m.vertices;
  for (auto& p : moved) p.z() += 1.0;
  const FaceBuffer a = rasterize(m, m.vertices, cam);
  const FaceBuffer b = rasterize(m, moved, cam);
  const auto edges_a = ts::raycast(m.faces, m.vertices, cam).near_edge;
  const auto edges_b = ts::raycast(m.faces, moved, cam).near_edge;
  std::size_t same_face = 0;
  for (std::size_t i = 0; i < a.face_id.size(); ++i) {
    const bool ca = a.face_id[i] != kNoFace, cb = b.face_id[i] != kNoFace;
    // The projected scale shrinks by 50/51; only pixels at silhouettes may flip.
    if (ca != cb) EXPECT_TRUE(edges_a[i] || edges_b[i]) << "pixel " << i;
    if (ca && cb && a.face_id[i] == b.face_id[i]) {
      EXPECT_NEAR(b.depth[i] - a.depth[i], 1.0, 1e-5);
      ++same_face;
    }
  }
  EXPECT_GT(same_face, 100u);
}

TEST(Raster, MaskInvariantUnderFullRoll) {
  std::mt19937_64 rng(6);
  const Camera cam = ts::random_camera(rng, 32, 32);
  const BodyMesh m = ts::random_soup(rng, cam, 20);
  Camera rolled = cam;
  rolled.rotation = Eigen::AngleAxisd(2.0 * std::numbers::pi, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
                    cam.rotation;
  rolled.translation = Eigen::AngleAxisd(2.0 * std::numbers::pi, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
                       cam.translation;
  const ImageU8 a = mask_of(rasterize(m, m.vertices, cam));
  const ImageU8 b = mask_of(rasterize(m, m.vertices, rolled));
  const auto oracle = ts::raycast(m.faces, m.vertices, cam);
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    if (!oracle.near_edge[i]) EXPECT_EQ(a.data()[i], b.data()[i]);
  }
}

TEST(Raster, MaskAndSegmentation) {
  const Camera cam = plain_camera(16, 16, 16.0);
  EXPECT_EQ(mask_of(FaceBuffer(16, 16)), ImageU8(16, 16, 1, 0));
  FaceBuffer full(4, 4);
  std::fill(full.face_id.begin(), full.face_id.end(), 0u);
  std::fill(full.depth.begin(), full.depth.end(), 1.0f);
  EXPECT_EQ(mask_of(full), ImageU8(4, 4, 1, 1));

  // Two parts split left/right of the image center.
  BodyMesh m = ts::labeled({{-1, -1, 2}, {0, -1, 2}, {0, 1, 2}, {-1, 1, 2}, {1, -1, 2}, {1, 1, 2}},
                           {{0, 1, 2}, {0, 2, 3}, {1, 4, 5}, {1, 5, 2}});
  m.face_labels = {3, 3, 7, 7};
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  const ImageU8 mask = mask_of(buf);
  const auto seg = segmentation_of(buf, m);
  std::size_t mask_sum = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      mask_sum += mask.at(x, y);
      const FaceId f = buf.face_at(x, y);
      const PartLabel expected = f == kNoFace ? kBackgroundLabel : m.face_labels[f];
      EXPECT_EQ(seg.at(x, y), expected);
      EXPECT_EQ(seg.at(x, y) != kBackgroundLabel, mask.at(x, y) != 0);
      if (f != kNoFace) EXPECT_EQ(seg.at(x, y), x < 8 ? 3 : 7);
    }
  }
  EXPECT_EQ(mask_sum, buf.covered_pixels());
}

TEST(Raster, ShadingFollowsCosine) {
  const Camera cam = plain_camera(32, 32, 3200.0);
  const double z = 100.0, s = z / cam.fx * 12.0;
  const BodyMesh flat = ts::labeled({{-s, -s, z}, {s, -s, z}, {0, s, z}}, {{0, 1, 2}});
  const FaceBuffer buf = rasterize(flat, flat.vertices, cam);
  EXPECT_EQ(shade(buf, flat, flat.vertices, cam).at(16, 16), 255);

  // Tilt by 60 degrees about the vertical axis through the centroid.
  const Eigen::Matrix3d r = Eigen::AngleAxisd(std::numbers::pi / 3.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Vector3d c = flat.face_centroid(0);
  Vertices tilted;
  for (const auto& p : flat.vertices) tilted.push_back(c + r * (p - c));
  const FaceBuffer tb = rasterize(flat, tilted, cam);
  EXPECT_NEAR(shade(tb, flat, tilted, cam).at(16, 16), 128, 1);
  EXPECT_EQ(shade(FaceBuffer(8, 8), flat, flat.vertices, cam), ImageU8(8, 8, 3, 0));
}

TEST(Raster, DegenerateAndBehindCameraSkipped) {
  const Camera cam = plain_camera(16, 16, 16.0);
  const BodyMesh m = ts::labeled({{0, 0, 2}, {1, 0, 2}, {2, 0, 2}, {-1, -1, -1}, {1, -1, 2}, {0, 1, 2}},
                                 {{0, 1, 2}, {3, 4, 5}});
  EXPECT_EQ(rasterize(m.faces, m.vertices, cam).covered_pixels(), 0u);
}

TEST(Raster, OccluderHidesBody) {
  const Camera cam = plain_camera(16, 16, 16.0);
  const BodyMesh body = fronto(cam, 3.0, 6.0);
  const Vertices occ = {{-1, -1, 1}, {0, -1, 1}, {0, 1, 1}, {-1, 1, 1}};
  const std::vector<Triangle> occ_faces = {{0, 1, 2}, {0, 2, 3}};
  const FaceBuffer plain = rasterize(body, body.vertices, cam);
  const FaceBuffer hidden = rasterize_with_occluders(body, body.vertices, occ, occ_faces, cam);
  std::size_t removed = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (x + 0.5 < 8.0 && y > 0 && y < 15) {
        EXPECT_EQ(hidden.face_at(x, y), kNoFace);
      } else if (x >= 8) {
        EXPECT_EQ(hidden.face_at(x, y), plain.face_at(x, y));
      }
      removed += plain.face_at(x, y) != hidden.face_at(x, y);
    }
  }
  EXPECT_GT(removed, 0u);
}

TEST(Raster, FaceBufferAndPngExports) {
  std::mt19937_64 rng(12);
  const Camera cam = ts::random_camera(rng, 24, 20);
  const BodyMesh m = ts::random_soup(rng, cam, 15);
  const FaceBuffer buf = rasterize(m, m.vertices, cam);
  const fs::path dir = ts::temp_dir("raster_io");
  write_face_buffer(dir / "b.fb1", buf);
  EXPECT_EQ(read_face_buffer(dir / "b.fb1"), buf);
  EXPECT_NO_THROW(write_depth_png(dir / "d.png", depth_of(buf)));
  EXPECT_NO_THROW(write_segmentation_png(dir / "s.png", segmentation_of(buf, m)));
  Image<PartLabel> big(2, 2, 1, 300);
  EXPECT_THROW(write_segmentation_png(dir / "big.png", big), Error);
}
