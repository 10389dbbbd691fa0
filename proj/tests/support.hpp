#pragma once

// Scene builders and brute-force oracles shared by the unit tests and the
// acceptance runner. Oracles deliberately avoid the library's algorithms:
// ray casting instead of rasterization, Bellman-Ford instead of truncated
// Dijkstra, full rankings instead of neighbor tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "meshwarp/camera.hpp"
#include "meshwarp/image.hpp"
#include "meshwarp/mesh.hpp"
#include "meshwarp/motion.hpp"
#include "meshwarp/raster.hpp"
#include "meshwarp/transfer.hpp"

namespace testing_support {

using namespace meshwarp;

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

BodyMesh tetrahedron();
/// n triangles in a row, each sharing one edge with the next.
BodyMesh strip(int n);
/// (nx x ny) cell heightfield, two triangles per cell, z jittered.
BodyMesh heightfield(std::mt19937_64& rng, int nx, int ny, double jitter);
/// Single-label mesh from raw geometry.
BodyMesh labeled(Vertices vertices, std::vector<Triangle> faces, PartLabel label = 1);

/// Random camera looking roughly down +z of a random frame.
Camera random_camera(std::mt19937_64& rng, int width, int height);
/// Triangles placed in disjoint depth slabs in front of the camera (so no two
/// interpenetrate), projected inside or partly outside the image.
BodyMesh random_soup(std::mt19937_64& rng, const Camera& camera, int faces);

struct RaycastResult {
  FaceBuffer buffer;
  /// 1 where the pixel center lies within `edge_margin` pixels of a projected
  /// triangle edge.
  std::vector<std::uint8_t> near_edge;
};
RaycastResult raycast(std::span<const Triangle> faces, const Vertices& vertices, const Camera& camera,
                      double edge_margin = 0.5);

/// All-pairs face distances. Geodesic: Bellman-Ford relaxation to a fixpoint
/// on the face-adjacency graph with centroid-chord weights; unreachable is
/// +inf. Euclidean: centroid chords.
std::vector<std::vector<double>> all_pairs_geodesic(const BodyMesh& mesh);
std::vector<std::vector<double>> all_pairs_euclidean(const BodyMesh& mesh);

/// Every other reachable face of `face` sorted by (distance, id).
std::vector<FaceId> full_ranking(const std::vector<double>& row, FaceId face);

/// Per-channel lower median of sorted copies.
Rgb8 median_oracle(std::vector<Rgb8> samples);

/// Step II from the untruncated ranking.
TransferResult step2_oracle(const std::vector<std::optional<Rgb8>>& reduced, const FaceBuffer& target,
                            const BodyMesh& mesh, const std::vector<std::vector<double>>& dist,
                            std::size_t n, bool record_neighbor_fills);

/// Scalar reference versions of compositing, temporal residual and Huber.
float composite_scalar(float fg, float bg, std::uint8_t mask);
float temporal_scalar(float initial, float warped_previous, double zeta);
double huber_scalar(double pred, double gt);
/// Bilinear backward sample written independently of the library.
ImageF warp_oracle(const ImageF& image, const FlowField& flow);

double psnr_oracle(const ImageU8& a, const ImageU8& b);

}  // namespace testing_support
