#include "meshwarp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "json.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/geodesy.hpp"
#include "meshwarp/parallel.hpp"
#include "meshwarp/png_io.hpp"

namespace meshwarp {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
const Eigen::Vector3d kLookTarget(0.0, 0.9, 0.0);

// Per-part chart colors, shared by left/right counterparts. Parts covered by
// the same garment (shirt, skin, trousers, shoes) share a base hue and differ
// by small per-part offsets, as clothing does on real bodies.
Rgb8 class_color(PartLabel label) {
  using namespace part;
  switch (label) {
    case kTorsoLower: return {176, 52, 60};
    case kTorso: return {196, 62, 66};
    case kTorsoUpper: return {212, 74, 78};
    case kLeftCollar: case kRightCollar: return {200, 84, 96};
    case kLeftUpperArm: case kRightUpperArm: return {184, 70, 92};
    case kNeck: return {214, 170, 140};
    case kHead: return {226, 182, 150};
    case kLeftForearm: case kRightForearm: return {232, 190, 160};
    case kLeftWrist: case kRightWrist: return {222, 176, 146};
    case kLeftHand: case kRightHand: return {240, 198, 170};
    case kPelvis: return {46, 64, 132};
    case kLeftThigh: case kRightThigh: return {54, 74, 148};
    case kLeftCalf: case kRightCalf: return {62, 84, 160};
    case kLeftAnkle: case kRightAnkle: return {70, 90, 150};
    case kLeftFoot: case kRightFoot: return {66, 48, 36};
    default: return {128, 128, 128};
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Camera orbit_camera(const SceneSpec& spec, double yaw_deg) {
  const double yaw = yaw_deg * kDeg;
  const Eigen::Vector3d eye =
      kLookTarget + spec.camera_distance * Eigen::Vector3d(std::sin(yaw), 0.0, std::cos(yaw));
  // Keeps the body at about 80% of the image height at any distance.
  const double focal = 1.4 * spec.height * spec.camera_distance / 3.0;
  return look_at(eye, kLookTarget, Eigen::Vector3d::UnitY(), focal, spec.width, spec.height);
}

// Barycentric coordinates (of v1, v2) where the ray hits the plane of the
// triangle; clamped into the triangle.
Eigen::Vector2d ray_barycentric(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                                const Eigen::Vector3d& v2) {
  const Eigen::Vector3d e1 = v1 - v0;
  const Eigen::Vector3d e2 = v2 - v0;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-18) return {1.0 / 3.0, 1.0 / 3.0};
  const Eigen::Vector3d s = origin - v0;
  double u = s.dot(p) / det;
  const Eigen::Vector3d q = s.cross(e1);
  double v = dir.dot(q) / det;
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  if (u + v > 1.0) {
    const double sum = u + v;
    u /= sum;
    v /= sum;
  }
  return {u, v};
}

// Standard normal draws from a seeded 64-bit engine (Box-Muller), so noise
// does not depend on the standard library's distribution implementation.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

ObjGeometry make_occluder(const Humanoid& body, const MeshSequence& sequence, const Camera& cam) {
  const std::array<PartLabel, 3> arm = {part::kLeftUpperArm, part::kLeftForearm, part::kLeftHand};
  const auto faces = body.faces_with_labels(arm);
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0, zmin = u0;
  double u1 = -u0, v1 = -u0;
  for (const Vertices& posed : sequence.frames) {
    for (FaceId f : faces) {
      for (std::uint32_t vi : body.mesh().faces[f]) {
        const Eigen::Vector3d c = cam.to_camera(posed[vi]);
        const Eigen::Vector2d p = cam.project_camera(c);
        u0 = std::min(u0, p.x());
        u1 = std::max(u1, p.x());
        v0 = std::min(v0, p.y());
        v1 = std::max(v1, p.y());
        zmin = std::min(zmin, c.z());
      }
    }
  }
  constexpr double kMarginPx = 2.0;
  u0 -= kMarginPx;
  v0 -= kMarginPx;
  u1 += kMarginPx;
  v1 += kMarginPx;
  const double z = 0.35 * zmin;
  auto back_project = [&](double u, double v) {
    const Eigen::Vector3d c((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z);
    return Eigen::Vector3d(cam.rotation.transpose() * (c - cam.translation));
  };
  ObjGeometry g;
  g.vertices = {back_project(u0, v0), back_project(u1, v0), back_project(u1, v1),
                back_project(u0, v1)};
  g.faces = {{0, 1, 2}, {0, 2, 3}};
  return g;
}

std::string frame_name(std::size_t t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", t);
  return buf;
}

}  // namespace

BodyPose scene_pose(const SceneSpec& spec, int frame) {
  BodyPose pose;
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
  // Negative rotation about +x swings a hanging segment forward (+z).
  const double bend = -spec.elbow_bend_deg * kDeg;
  pose[Bone::kLeftForearm] = bend * x;
  pose[Bone::kRightForearm] = bend * x;
  switch (spec.motion) {
    case MotionScript::kStatic:
      break;
    case MotionScript::kTranslate:
      pose.root_translation = spec.velocity * frame;
      break;
    case MotionScript::kWalk: {
      const double phase = 2.0 * std::numbers::pi * frame / 16.0;
      const double s = std::sin(phase);
      pose.root_translation = spec.velocity * frame;
      pose.root_yaw = 0.15 * s;
      pose[Bone::kLeftUpperArm] = -0.45 * s * x;
      pose[Bone::kRightUpperArm] = 0.45 * s * x;
      pose[Bone::kLeftForearm] = (bend - 0.25 * std::max(0.0, s)) * x;
      pose[Bone::kRightForearm] = (bend - 0.25 * std::max(0.0, -s)) * x;
      pose[Bone::kLeftThigh] = 0.35 * s * x;
      pose[Bone::kRightThigh] = -0.35 * s * x;
      pose[Bone::kLeftCalf] = 0.3 * std::max(0.0, -s) * x;
      pose[Bone::kRightCalf] = 0.3 * std::max(0.0, s) * x;
      break;
    }
  }
  return pose;
}

Rgb8 reference_color(const BodyMesh& rest, FaceId face, const Eigen::Vector3d& rest_point) {
  const Rgb8 base = class_color(rest.face_to_label(face));
  const Eigen::Vector3d c = rest.face_centroid(face);
  constexpr double kCell = 0.07;
  const long parity = static_cast<long>(std::floor(std::abs(c.x()) / kCell)) +
                      static_cast<long>(std::floor(c.y() / kCell)) +
                      static_cast<long>(std::floor((c.z() + 1.0) / kCell));
  const double checker = (parity % 2 == 0) ? 1.0 : 0.72;
  const double wave =
      1.0 + 0.06 * std::sin(2.0 * std::numbers::pi *
                            (std::abs(rest_point.x()) + rest_point.y() + rest_point.z()) / 0.45);
  const double k = checker * wave;
  return {to_byte(base.r * k), to_byte(base.g * k), to_byte(base.b * k)};
}

ImageU8 background_plate(int width, int height, int variant) {
  ImageU8 img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) / std::max(1, width - 1);
      const double fy = static_cast<double>(y) / std::max(1, height - 1);
      set_rgb(img, x, y,
              {to_byte(40 + 70 * fx + 15 * variant), to_byte(70 + 50 * fy),
               to_byte(100 + 30 * std::sin(3.0 * fx + variant))});
    }
  }
  return img;
}

ImageU8 render_reference(const BodyMesh& rest, const Vertices& posed, const ObjGeometry& occluder,
                         const Camera& camera, const ImageU8& background) {
  Vertices all = posed;
  all.insert(all.end(), occluder.vertices.begin(), occluder.vertices.end());
  std::vector<Triangle> faces = rest.faces;
  const auto offset = static_cast<std::uint32_t>(posed.size());
  for (const auto& t : occluder.faces) faces.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  const FaceBuffer buffer = rasterize(faces, all, camera);

  ImageU8 out = background;
  const Eigen::Vector3d origin = camera.center();
  const Eigen::Matrix3d rt = camera.rotation.transpose();
  parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < camera.width; ++x) {
      const FaceId f = buffer.face_at(x, y);
      if (f == kNoFace) continue;
      if (f >= rest.face_count()) {
        const bool stripe = ((x + y) / 4) % 2 == 0;
        set_rgb(out, x, y, stripe ? Rgb8{150, 150, 150} : Rgb8{110, 110, 110});
        continue;
      }
      const Eigen::Vector3d dir =
          rt * Eigen::Vector3d((x + 0.5 - camera.cx) / camera.fx, (y + 0.5 - camera.cy) / camera.fy, 1.0);
      const Triangle& tri = rest.faces[f];
      const Eigen::Vector2d uv = ray_barycentric(origin, dir, posed[tri[0]], posed[tri[1]], posed[tri[2]]);
      const Eigen::Vector3d rp = (1.0 - uv.x() - uv.y()) * rest.vertices[tri[0]] +
                                 uv.x() * rest.vertices[tri[1]] + uv.y() * rest.vertices[tri[2]];
      set_rgb(out, x, y, reference_color(rest, f, rp));
    }
  });
  return out;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.frames < 1) {
    throw Error("scene: width, height, and frames must be positive");
  }
  const Humanoid body(spec.subdivisions);
  SyntheticScene scene;
  scene.spec = spec;
  scene.mesh = body.mesh();
  scene.symmetry = default_symmetry();
  for (int t = 0; t < spec.frames; ++t) scene.sequence.frames.push_back(body.pose(scene_pose(spec, t)));
  scene.input_camera = orbit_camera(spec, spec.input_yaw_deg);
  scene.target_camera = orbit_camera(spec, spec.target_yaw_deg);
  if (spec.occluder) scene.occluder = make_occluder(body, scene.sequence, scene.input_camera);

  const ImageU8 input_background = background_plate(spec.width, spec.height, 0);
  scene.target_background = background_plate(spec.width, spec.height, 1);
  for (int t = 0; t < spec.frames; ++t) {
    const Vertices& posed = scene.sequence.frames[t];
    ImageU8 input = render_reference(scene.mesh, posed, scene.occluder, scene.input_camera,
                                     input_background);
    if (spec.noise_sigma > 0.0) {
      NormalStream noise(spec.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(t));
      for (auto& v : input.data()) v = to_byte(v + spec.noise_sigma * noise.next());
    }
    scene.input_frames.push_back(std::move(input));
    scene.target_frames.push_back(render_reference(scene.mesh, posed, scene.occluder,
                                                   scene.target_camera, scene.target_background));
  }
  return scene;
}

void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir,
                const SaveOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "input");
  fs::create_directories(dir / "target_gt");
  write_obj(dir / "template.obj", scene.mesh.vertices, scene.mesh.faces);
  write_labels_csv(dir / "labels.csv", scene.mesh);
  write_sym_pairs_csv(dir / "sym_pairs.csv", scene.symmetry);
  write_mesh_sequence(dir / "sequence.mseq", scene.sequence);
  write_camera_json(dir / "cam_input.json", scene.input_camera);
  write_camera_json(dir / "cam_target.json", scene.target_camera);
  for (std::size_t t = 0; t < scene.input_frames.size(); ++t) {
    write_png(dir / "input" / (frame_name(t) + ".png"), scene.input_frames[t]);
    write_png(dir / "target_gt" / (frame_name(t) + ".png"), scene.target_frames[t]);
  }
  write_png(dir / "background_target.png", scene.target_background);

  nlohmann::json job;
  job["input"] = {{"frames", "input"}, {"camera", "cam_input.json"}};
  job["target"] = {{"camera", "cam_target.json"},
                   {"ground_truth", "target_gt"},
                   {"background", "background_target.png"}};
  job["mesh_sequence"] = "sequence.mseq";
  job["template"] = {{"mesh", "template.obj"}, {"labels", "labels.csv"}, {"sym_pairs", "sym_pairs.csv"}};
  if (!scene.occluder.faces.empty()) {
    write_obj(dir / "occluder.obj", scene.occluder.vertices, scene.occluder.faces);
    job["occluder"] = "occluder.obj";
  }
  if (options.write_tables) {
    const std::size_t k = std::min(options.table_k, scene.mesh.face_count() - 1);
    save_table(dir / "table_geodesic.fnt",
               build_neighbor_table(scene.mesh, k, DistanceMetric::kGeodesic));
    save_table(dir / "table_euclidean.fnt",
               build_neighbor_table(scene.mesh, k, DistanceMetric::kEuclidean));
    job["table"] = "table_geodesic.fnt";
    job["euclidean_table"] = "table_euclidean.fnt";
  }
  job["mode"] = "I+II+III";
  job["n"] = 50;
  job["zeta"] = 0.1;
  job["output"] = "out";
  std::ofstream out(dir / "job.json");
  if (!out) throw Error("cannot write " + (dir / "job.json").string());
  out << job.dump(2) << '\n';
}

}  // namespace meshwarp
