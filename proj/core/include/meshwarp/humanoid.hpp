#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "meshwarp/mesh.hpp"

namespace meshwarp {

/// Part ids of the 24-part body convention shipped in core/data.
namespace part {
inline constexpr PartLabel kPelvis = 1;
inline constexpr PartLabel kLeftThigh = 2;
inline constexpr PartLabel kRightThigh = 3;
inline constexpr PartLabel kTorsoLower = 4;
inline constexpr PartLabel kLeftCalf = 5;
inline constexpr PartLabel kRightCalf = 6;
inline constexpr PartLabel kTorso = 7;
inline constexpr PartLabel kLeftAnkle = 8;
inline constexpr PartLabel kRightAnkle = 9;
inline constexpr PartLabel kTorsoUpper = 10;
inline constexpr PartLabel kLeftFoot = 11;
inline constexpr PartLabel kRightFoot = 12;
inline constexpr PartLabel kNeck = 13;
inline constexpr PartLabel kLeftCollar = 14;
inline constexpr PartLabel kRightCollar = 15;
inline constexpr PartLabel kHead = 16;
inline constexpr PartLabel kLeftUpperArm = 17;
inline constexpr PartLabel kRightUpperArm = 18;
inline constexpr PartLabel kLeftForearm = 19;
inline constexpr PartLabel kRightForearm = 20;
inline constexpr PartLabel kLeftWrist = 21;
inline constexpr PartLabel kRightWrist = 22;
inline constexpr PartLabel kLeftHand = 23;
inline constexpr PartLabel kRightHand = 24;
inline constexpr PartLabel kCount = 24;
}  // namespace part

/// Names of the 24-part convention, indexed by label (index 0 unused).
std::string_view part_name(PartLabel label);
/// Left/right pairs plus self-paired midline parts for all 24 labels.
SymmetricPartMap default_symmetry();

enum class Bone : std::uint8_t {
  kTorso,
  kNeck,
  kHead,
  kLeftCollar,
  kLeftUpperArm,
  kLeftForearm,
  kLeftHand,
  kRightCollar,
  kRightUpperArm,
  kRightForearm,
  kRightHand,
  kLeftThigh,
  kLeftCalf,
  kLeftFoot,
  kRightThigh,
  kRightCalf,
  kRightFoot,
};
inline constexpr std::size_t kBoneCount = 17;

/// Joint rotations (angle-axis, radians) per bone plus a root transform.
struct BodyPose {
  std::array<Eigen::Vector3d, kBoneCount> joint_rotation;
  double root_yaw = 0.0;  // about +y
  Eigen::Vector3d root_translation = Eigen::Vector3d::Zero();

  BodyPose() { joint_rotation.fill(Eigen::Vector3d::Zero()); }
  Eigen::Vector3d& operator[](Bone b) { return joint_rotation[static_cast<std::size_t>(b)]; }
  const Eigen::Vector3d& operator[](Bone b) const { return joint_rotation[static_cast<std::size_t>(b)]; }
};

/// Procedural box-modeled human: a subdivided torso box with extruded neck,
/// head, arms hanging at the sides, and legs. The surface is a closed genus-0
/// triangle mesh in meters, y up, facing +z, character's left at +x, feet at
/// y = 0. Every coarse quad is split into subdivisions^2 cells.
class Humanoid {
 public:
  explicit Humanoid(int subdivisions = 4);

  /// Rest-pose template with part labels.
  const BodyMesh& mesh() const { return mesh_; }
  Vertices pose(const BodyPose& pose) const;
  int subdivisions() const { return subdivisions_; }

  /// Faces whose label is in `labels`.
  std::vector<FaceId> faces_with_labels(std::span<const PartLabel> labels) const;

 private:
  struct Quad {
    std::array<std::uint32_t, 4> v;
    PartLabel label;
    Bone bone;
  };
  struct FineVertex {
    std::array<std::uint32_t, 4> coarse;
    std::array<double, 4> weight;
  };

  std::uint32_t add_coarse(const Eigen::Vector3d& p, Bone owner);
  std::size_t extrude(std::size_t quad, const Eigen::Vector3d& offset, double scale,
                      PartLabel label, Bone bone, Bone parent);
  std::size_t side_quad_facing(std::size_t first_side, const Eigen::Vector3d& direction) const;
  void subdivide();

  int subdivisions_;
  Vertices coarse_rest_;
  std::vector<Bone> coarse_owner_;
  std::vector<Quad> quads_;
  std::array<Eigen::Vector3d, kBoneCount> pivot_;
  std::array<int, kBoneCount> parent_;
  std::vector<FineVertex> fine_;
  BodyMesh mesh_;
};

/// Genus-0 closed ellipsoid-like body with exactly kSmplFaceCount faces and
/// 6890 vertices (the SMPL vertex/face counts), labeled into 24 regions by
/// height and side. Used for SMPL-scale sizing tests and benchmarks.
BodyMesh smpl_scale_template();

}  // namespace meshwarp
