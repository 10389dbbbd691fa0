#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "meshwarp/mesh.hpp"

namespace meshwarp {

enum class DistanceMetric : std::uint8_t { kGeodesic = 0, kEuclidean = 1 };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_metric(std::string_view name);

/// Marks the unused tail of a row whose source cannot reach k other faces.
inline constexpr FaceId kNoNeighbor = std::numeric_limits<FaceId>::max();

/// Per face, the k closest other faces on the template mesh, sorted by
/// (distance, face id). Rows of faces that cannot reach k others are padded
/// with kNoNeighbor / +inf.
class NeighborTable {
 public:
  NeighborTable() = default;
  NeighborTable(DistanceMetric metric, std::size_t face_count, std::size_t k);

  DistanceMetric metric() const { return metric_; }
  std::size_t face_count() const { return face_count_; }
  std::size_t k() const { return k_; }

  std::span<const FaceId> neighbor_ids(FaceId face) const;
  std::span<const float> neighbor_dists(FaceId face) const;
  std::span<FaceId> neighbor_ids(FaceId face);
  std::span<float> neighbor_dists(FaceId face);

  /// Number of valid (non-padding) entries in the row.
  std::size_t row_size(FaceId face) const;
  /// Rows holding fewer than k valid entries.
  std::size_t short_rows() const;

  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;

 private:
  DistanceMetric metric_ = DistanceMetric::kGeodesic;
  std::size_t face_count_ = 0;
  std::size_t k_ = 0;
  std::vector<FaceId> ids_;
  std::vector<float> dists_;
};

/// Faces sharing an edge, per face, in ascending face order.
std::vector<std::vector<FaceId>> face_adjacency(std::span<const Triangle> faces);

/// Builds the table on the canonical-pose template.
///
/// Geodesic distances are shortest paths over the face-adjacency graph with
/// centroid-to-centroid edge weights (one truncated Dijkstra per source
/// face). Euclidean distances are centroid chords. Both are computed in
/// double precision and ranked with ties broken by ascending face id.
/// Sources that cannot reach k faces (disconnected meshes) get a padded row
/// and are counted by short_rows().
NeighborTable build_neighbor_table(const BodyMesh& mesh, std::size_t k, DistanceMetric metric);

/// First n entries of the row. Throws if n > k, advising a rebuild.
std::vector<FaceId> nearest_faces(const NeighborTable& table, FaceId face, std::size_t n);

/// FNT1: magic, metric byte, N_f, k (u32 LE), then N_f rows of k
/// (face id u32, distance f32) pairs.
void save_table(const std::filesystem::path& path, const NeighborTable& table);
/// Validates the header, size, and row sortedness on a sample of rows.
NeighborTable load_table(const std::filesystem::path& path);

}  // namespace meshwarp
