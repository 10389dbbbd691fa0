#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "meshwarp/geodesy.hpp"
#include "meshwarp/image.hpp"
#include "meshwarp/mesh.hpp"
#include "meshwarp/raster.hpp"

namespace meshwarp {

/// How a target pixel received its color.
enum class Provenance : std::uint8_t {
  kBackground = 0,
  kDirect = 1,
  kNeighbor = 2,
  kSymmetric = 3,
  kSentinel = 4,
};
inline constexpr std::size_t kProvenanceClasses = 5;

std::string_view to_string(Provenance p);

/// Color painted on pixels no transfer step could reach.
inline constexpr Rgb8 kSentinelColor{255, 0, 255};

/// Face id -> RGB samples collected from the input view, reduced to one
/// color per observed face by a per-channel lower median.
class TextureAccumulator {
 public:
  TextureAccumulator() = default;
  explicit TextureAccumulator(std::size_t face_count);

  std::size_t face_count() const { return samples_.size(); }

  /// Appends every covered pixel of `frame` to the sample list of its face.
  void add_frame(const ImageU8& frame, const FaceBuffer& buffer);
  void add_sample(FaceId face, Rgb8 color);
  /// Concatenates `other`'s sample lists after this one's.
  void merge(const TextureAccumulator& other);

  /// Computes the per-channel median of each non-empty sample list. For an
  /// even count the lower median is taken.
  void reduce();

  bool has_color(FaceId face) const { return face < present_.size() && present_[face] != 0; }
  Rgb8 color(FaceId face) const { return reduced_[face]; }
  std::span<const Rgb8> samples(FaceId face) const { return samples_[face]; }
  std::size_t observed_faces() const;

 private:
  std::vector<std::vector<Rgb8>> samples_;
  std::vector<Rgb8> reduced_;
  std::vector<std::uint8_t> present_;
};

/// Step I: accumulate visible-face colors over the input-view sequence and
/// reduce them. Frames and buffers must agree in count and resolution.
TextureAccumulator step1_accumulate(std::span<const ImageU8> frames,
                                    std::span<const FaceBuffer> buffers, std::size_t face_count);

struct LabelPixel {
  Rgb8 color;
  PixelPos pos;
  friend bool operator==(const LabelPixel&, const LabelPixel&) = default;
};

struct TransferResult {
  ImageU8 texture;                // RGB
  Image<Provenance> filled_by;    // per pixel
  /// Visibly painted pixels grouped by part label, in row-major scan order.
  std::map<PartLabel, std::vector<LabelPixel>> label_pixels;
  /// Foreground pixels Step II could not paint, in row-major order.
  std::vector<PixelPos> occluded;

  std::array<std::size_t, kProvenanceClasses> counts() const;
  std::size_t count(Provenance p) const { return counts()[static_cast<std::size_t>(p)]; }

  friend bool operator==(const TransferResult&, const TransferResult&) = default;
};

struct Step2Options {
  /// Neighbor-filled pixels are recorded under their donor face's label, as
  /// the reference pseudocode does. Set false to record only DIRECT pixels.
  bool record_neighbor_fills = true;
};

/// Step II: paint each target pixel from its own face if observed, else
/// from the first of its n nearest faces that was observed. Remaining
/// foreground pixels are marked SENTINEL and listed in `occluded`.
TransferResult step2_fill(const TextureAccumulator& acc, const FaceBuffer& target,
                          const BodyMesh& mesh, const NeighborTable& table, std::size_t n,
                          const Step2Options& options = {});

enum class NearestSearch : std::uint8_t { kBruteForce, kGrid };

/// Step III: each occluded pixel copies the color of the image-plane nearest
/// recorded pixel of its own label, or of the mirrored label when its own
/// label has none. Ties go to the earliest recorded pixel. Pixels with
/// neither stay SENTINEL.
TransferResult step3_symmetric(const TransferResult& partial, const FaceBuffer& target,
                               const BodyMesh& mesh, const SymmetricPartMap& sym,
                               NearestSearch search = NearestSearch::kBruteForce);

/// The four ablation variants.
enum class TransferMode : std::uint8_t {
  kEuclideanII,  // Step II over a Euclidean table, per-frame accumulator
  kII,           // Step II over a geodesic table, per-frame accumulator
  kIIandIII,     // Steps II + III, per-frame accumulator
  kFull,         // Steps I + II + III, accumulator over the whole sequence
};

std::string_view to_string(TransferMode mode);
TransferMode parse_transfer_mode(std::string_view name);
DistanceMetric required_metric(TransferMode mode);

struct TransferOptions {
  TransferMode mode = TransferMode::kFull;
  std::size_t n = 50;
  Step2Options step2;
  NearestSearch search = NearestSearch::kBruteForce;
};

/// Runs one mode over a sequence. Throws on length mismatch or when the
/// table metric does not match the mode.
std::vector<TransferResult> transfer_sequence(std::span<const ImageU8> input_frames,
                                              std::span<const FaceBuffer> input_buffers,
                                              std::span<const FaceBuffer> target_buffers,
                                              const BodyMesh& mesh, const NeighborTable& table,
                                              const SymmetricPartMap& sym,
                                              const TransferOptions& options);

/// Palette-coded provenance image (RGB) for inspection.
ImageU8 provenance_image(const Image<Provenance>& filled_by);

}  // namespace meshwarp
