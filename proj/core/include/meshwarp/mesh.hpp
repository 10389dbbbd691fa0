#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace meshwarp {

using FaceId = std::uint32_t;
/// Body-part id. 0 is reserved for background in segmentation maps.
using PartLabel = std::uint16_t;
inline constexpr PartLabel kBackgroundLabel = 0;

using Vertices = std::vector<Eigen::Vector3d>;
using Triangle = std::array<std::uint32_t, 3>;

/// Number of faces in the SMPL body topology.
inline constexpr std::size_t kSmplFaceCount = 13776;

/// Fixed-topology triangle mesh with one body-part label per face.
struct BodyMesh {
  Vertices vertices;
  std::vector<Triangle> faces;
  std::vector<PartLabel> face_labels;
  std::map<PartLabel, std::string> label_names;

  std::size_t face_count() const { return faces.size(); }

  /// Throws Error if face_id >= face_count().
  PartLabel face_to_label(FaceId face_id) const;

  /// Checks index ranges, label totality, and (for templates) that no face
  /// has zero area. Throws Error describing the first violation.
  void validate(bool require_nondegenerate = true) const;

  Eigen::Vector3d face_centroid(FaceId face, const Vertices& posed) const;
  Eigen::Vector3d face_centroid(FaceId face) const { return face_centroid(face, vertices); }
};

/// Involution over part labels (left <-> right, midline parts map to
/// themselves).
class SymmetricPartMap {
 public:
  SymmetricPartMap() = default;

  /// Each pair (a, b) maps a -> b and b -> a; (a, a) marks a self-paired
  /// label. Throws if a label is paired inconsistently.
  static SymmetricPartMap from_pairs(std::span<const std::pair<PartLabel, PartLabel>> pairs);

  PartLabel mirror(PartLabel label) const;
  bool contains(PartLabel label) const { return mirror_.contains(label); }
  const std::map<PartLabel, PartLabel>& entries() const { return mirror_; }

  /// Throws unless every label used by the mesh has an entry.
  void validate_covers(const BodyMesh& mesh) const;

 private:
  std::map<PartLabel, PartLabel> mirror_;
};

/// Per-timestep vertex positions sharing one topology.
struct MeshSequence {
  std::vector<Vertices> frames;
  double fps = 30.0;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t vertex_count() const { return frames.empty() ? 0 : frames.front().size(); }
  /// Throws if frames disagree on vertex count or mismatch `expected_vertices`.
  void validate(std::size_t expected_vertices) const;
};

struct ObjGeometry {
  Vertices vertices;
  std::vector<Triangle> faces;
};

/// Parses v/f records of a Wavefront OBJ (1-based or negative indices,
/// `v/vt/vn` tokens allowed). Rejects non-triangular faces.
ObjGeometry read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Vertices& vertices,
               std::span<const Triangle> faces);

struct LabelTable {
  std::vector<PartLabel> face_labels;
  std::map<PartLabel, std::string> names;
};

/// Reads `face_index,label_id[,label_name]` rows; a non-numeric first row is
/// treated as a header. Every face in [0, face_count) must appear once.
LabelTable read_labels_csv(const std::filesystem::path& path, std::size_t face_count);
void write_labels_csv(const std::filesystem::path& path, const BodyMesh& mesh);

/// Reads `label_a,label_b` rows.
SymmetricPartMap read_sym_pairs_csv(const std::filesystem::path& path);
void write_sym_pairs_csv(const std::filesystem::path& path, const SymmetricPartMap& map);

/// Reads `label_id,label_name` rows.
std::map<PartLabel, std::string> read_part_names_csv(const std::filesystem::path& path);

BodyMesh load_mesh(const std::filesystem::path& obj_path,
                   const std::filesystem::path& labels_path);

/// MSEQ1 container: magic, T, V (u32 LE), then T*V*3 f32 LE.
MeshSequence read_mesh_sequence(const std::filesystem::path& path, double fps = 30.0);
void write_mesh_sequence(const std::filesystem::path& path, const MeshSequence& sequence);

/// Loads either an MSEQ1 file or a directory of `NNNNNN.obj` frames.
MeshSequence load_mesh_sequence(const std::filesystem::path& path, double fps = 30.0);

}  // namespace meshwarp
