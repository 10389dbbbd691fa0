#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "meshwarp/camera.hpp"
#include "meshwarp/humanoid.hpp"
#include "meshwarp/image.hpp"
#include "meshwarp/mesh.hpp"
#include "meshwarp/raster.hpp"

namespace meshwarp {

enum class MotionScript {
  kStatic,     // rest pose (plus elbow bend) in every frame
  kTranslate,  // rigid translation by `velocity` per frame
  kWalk,       // arm and leg swing with a small root yaw and translation
};

struct SceneSpec {
  int width = 128;
  int height = 128;
  int frames = 8;
  int subdivisions = 4;
  /// Camera azimuths about the body's vertical axis; 0 looks at the front,
  /// negative angles view the character's right side.
  double input_yaw_deg = -45.0;
  double target_yaw_deg = 45.0;
  double camera_distance = 3.0;
  MotionScript motion = MotionScript::kWalk;
  Eigen::Vector3d velocity = Eigen::Vector3d(0.01, 0.0, 0.0);
  /// Constant elbow flexion bringing the forearms in front of the body.
  double elbow_bend_deg = 0.0;
  /// Places a static quad between the input camera and the left arm.
  bool occluder = false;
  /// Per-pixel Gaussian noise added to input frames (0..255 units).
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticScene {
  SceneSpec spec;
  BodyMesh mesh;  // rest-pose template
  SymmetricPartMap symmetry;
  MeshSequence sequence;
  Camera input_camera;
  Camera target_camera;
  ObjGeometry occluder;  // empty when disabled
  std::vector<ImageU8> input_frames;
  std::vector<ImageU8> target_frames;  // ground truth in the target view
  ImageU8 target_background;
};

/// Deterministic for a given SceneSpec, seed included.
SyntheticScene generate_scene(const SceneSpec& spec);

/// Body pose of frame t under the scene's motion script.
BodyPose scene_pose(const SceneSpec& spec, int frame);

/// Ground-truth surface color of `face` at rest-pose point `rest_point`: a
/// per-part color (shared by left/right counterparts), a per-face checker, and
/// a low-amplitude smooth variation. Mirror-symmetric in x.
Rgb8 reference_color(const BodyMesh& rest, FaceId face, const Eigen::Vector3d& rest_point);

/// Renders the posed textured body plus occluders over `background`.
ImageU8 render_reference(const BodyMesh& rest, const Vertices& posed, const ObjGeometry& occluder,
                         const Camera& camera, const ImageU8& background);

/// Smooth per-view background plate.
ImageU8 background_plate(int width, int height, int variant);

struct SaveOptions {
  /// Neighbor table size; clamped to face_count - 1.
  std::size_t table_k = 512;
  bool write_tables = true;
};

/// Writes the scene as a job directory: template.obj, labels.csv,
/// sym_pairs.csv, sequence.mseq, cam_input.json, cam_target.json,
/// input/NNNNNN.png, target_gt/NNNNNN.png, background_target.png,
/// occluder.obj (if any), table_geodesic.fnt, table_euclidean.fnt, job.json.
void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir,
                const SaveOptions& options = {});

}  // namespace meshwarp
