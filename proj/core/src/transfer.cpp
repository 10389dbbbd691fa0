#include "meshwarp/transfer.hpp"

#include <algorithm>
#include <limits>

#include "meshwarp/error.hpp"
#include "meshwarp/parallel.hpp"

namespace meshwarp {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kBackground: return "background";
    case Provenance::kDirect: return "direct";
    case Provenance::kNeighbor: return "neighbor";
    case Provenance::kSymmetric: return "symmetric";
    case Provenance::kSentinel: return "sentinel";
  }
  return "unknown";
}

TextureAccumulator::TextureAccumulator(std::size_t face_count)
    : samples_(face_count), reduced_(face_count), present_(face_count, 0) {}

void TextureAccumulator::add_sample(FaceId face, Rgb8 color) {
  if (face >= samples_.size()) throw Error("face id " + std::to_string(face) + " out of range");
  samples_[face].push_back(color);
}

void TextureAccumulator::add_frame(const ImageU8& frame, const FaceBuffer& buffer) {
  if (frame.width() != buffer.width || frame.height() != buffer.height || frame.channels() != 3) {
    throw Error("frame and face buffer resolution mismatch");
  }
  for (int y = 0; y < buffer.height; ++y) {
    for (int x = 0; x < buffer.width; ++x) {
      const FaceId f = buffer.face_at(x, y);
      if (f != kNoFace) add_sample(f, get_rgb(frame, x, y));
    }
  }
}

void TextureAccumulator::merge(const TextureAccumulator& other) {
  if (other.face_count() != face_count()) throw Error("accumulator face counts differ");
  for (std::size_t f = 0; f < samples_.size(); ++f) {
    samples_[f].insert(samples_[f].end(), other.samples_[f].begin(), other.samples_[f].end());
  }
}

void TextureAccumulator::reduce() {
  parallel_for_chunks(samples_.size(), [this](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> channel;
    for (std::size_t f = begin; f < end; ++f) {
      const auto& list = samples_[f];
      if (list.empty()) {
        present_[f] = 0;
        continue;
      }
      const std::size_t mid = (list.size() - 1) / 2;
      auto median = [&](auto member) {
        channel.clear();
        for (const Rgb8& c : list) channel.push_back(c.*member);
        std::nth_element(channel.begin(), channel.begin() + static_cast<std::ptrdiff_t>(mid),
                         channel.end());
        return channel[mid];
      };
      reduced_[f] = {median(&Rgb8::r), median(&Rgb8::g), median(&Rgb8::b)};
      present_[f] = 1;
    }
  });
}

std::size_t TextureAccumulator::observed_faces() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), 1));
}

TextureAccumulator step1_accumulate(std::span<const ImageU8> frames,
                                    std::span<const FaceBuffer> buffers, std::size_t face_count) {
  if (frames.size() != buffers.size()) {
    throw Error("step I: " + std::to_string(frames.size()) + " frames but " +
                std::to_string(buffers.size()) + " face buffers");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].width() != buffers[t].width || frames[t].height() != buffers[t].height ||
        frames[t].channels() != 3) {
      throw Error("step I: frame " + std::to_string(t) + " resolution does not match its face buffer");
    }
  }

  // Per-frame sample lists in row-major order, concatenated in frame order so
  // the sample order (and thus the median) is independent of scheduling.
  std::vector<std::vector<std::pair<FaceId, Rgb8>>> per_frame(frames.size());
  parallel_for(frames.size(), [&](std::size_t t) {
    const auto& buf = buffers[t];
    auto& out = per_frame[t];
    for (int y = 0; y < buf.height; ++y) {
      for (int x = 0; x < buf.width; ++x) {
        const FaceId f = buf.face_at(x, y);
        if (f == kNoFace) continue;
        if (f >= face_count) {
          throw Error("step I: face id " + std::to_string(f) + " out of range in frame " +
                      std::to_string(t));
        }
        out.emplace_back(f, get_rgb(frames[t], x, y));
      }
    }
  });

  TextureAccumulator acc(face_count);
  for (const auto& list : per_frame) {
    for (const auto& [face, color] : list) acc.add_sample(face, color);
  }
  acc.reduce();
  return acc;
}

std::array<std::size_t, kProvenanceClasses> TransferResult::counts() const {
  std::array<std::size_t, kProvenanceClasses> c{};
  for (Provenance p : filled_by.data()) ++c[static_cast<std::size_t>(p)];
  return c;
}

TransferResult step2_fill(const TextureAccumulator& acc, const FaceBuffer& target,
                          const BodyMesh& mesh, const NeighborTable& table, std::size_t n,
                          const Step2Options& options) {
  if (n > table.k()) {
    throw Error("step II: n=" + std::to_string(n) + " exceeds table k=" + std::to_string(table.k()) +
                "; rebuild the table with a larger k");
  }
  if (table.face_count() != mesh.face_count() || acc.face_count() != mesh.face_count()) {
    throw Error("step II: table, accumulator, and mesh disagree on the face count");
  }

  TransferResult result;
  result.texture = ImageU8(target.width, target.height, 3, 0);
  result.filled_by = Image<Provenance>(target.width, target.height, 1, Provenance::kBackground);

  // Donor face per pixel; kNoFace marks an occluded foreground pixel.
  std::vector<FaceId> donor(target.face_id.size(), kNoFace);
  parallel_for_chunks(static_cast<std::size_t>(target.height), [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < target.width; ++x) {
        const std::size_t idx = target.index(x, y);
        const FaceId f = target.face_id[idx];
        if (f == kNoFace) continue;
        if (f >= mesh.face_count()) throw Error("step II: target face id out of range");
        if (acc.has_color(f)) {
          donor[idx] = f;
          result.filled_by.at(x, y) = Provenance::kDirect;
          continue;
        }
        const auto row = table.neighbor_ids(f).first(n);
        for (FaceId g : row) {
          if (g == kNoNeighbor) break;
          if (acc.has_color(g)) {
            donor[idx] = g;
            break;
          }
        }
        result.filled_by.at(x, y) =
            donor[idx] == kNoFace ? Provenance::kSentinel : Provenance::kNeighbor;
      }
    }
  });

  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      const Provenance p = result.filled_by.at(x, y);
      if (p == Provenance::kBackground) continue;
      if (p == Provenance::kSentinel) {
        set_rgb(result.texture, x, y, kSentinelColor);
        result.occluded.push_back({x, y});
        continue;
      }
      const FaceId d = donor[target.index(x, y)];
      const Rgb8 color = acc.color(d);
      set_rgb(result.texture, x, y, color);
      if (p == Provenance::kDirect || options.record_neighbor_fills) {
        result.label_pixels[mesh.face_labels[d]].push_back({color, {x, y}});
      }
    }
  }
  return result;
}

namespace {

inline std::int64_t dist2(PixelPos a, PixelPos b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}

std::size_t nearest_brute(const std::vector<LabelPixel>& pool, PixelPos q) {
  std::size_t best = 0;
  std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::int64_t d = dist2(pool[i].pos, q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Uniform bucket grid over one label's recorded pixels. Queries return the
// same index as nearest_brute, including the earliest-index tie-break.
class PixelGrid {
 public:
  PixelGrid(const std::vector<LabelPixel>& pool, int width, int height, int cell)
      : cell_(cell),
        cols_((width + cell - 1) / cell),
        rows_((height + cell - 1) / cell),
        buckets_(static_cast<std::size_t>(cols_) * rows_) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      buckets_[bucket(pool[i].pos)].push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::size_t nearest(const std::vector<LabelPixel>& pool, PixelPos q) const {
    const int qc = std::clamp(q.x / cell_, 0, cols_ - 1);
    const int qr = std::clamp(q.y / cell_, 0, rows_ - 1);
    std::size_t best = 0;
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    const int max_ring = std::max(cols_, rows_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      if (ring > 0) {
        const std::int64_t reach = static_cast<std::int64_t>(ring - 1) * cell_;
        if (reach * reach > best_d) break;
      }
      for (int r = qr - ring; r <= qr + ring; ++r) {
        if (r < 0 || r >= rows_) continue;
        for (int c = qc - ring; c <= qc + ring; ++c) {
          if (c < 0 || c >= cols_) continue;
          if (std::max(std::abs(r - qr), std::abs(c - qc)) != ring) continue;
          for (std::uint32_t i : buckets_[static_cast<std::size_t>(r) * cols_ + c]) {
            const std::int64_t d = dist2(pool[i].pos, q);
            if (d < best_d || (d == best_d && i < best)) {
              best_d = d;
              best = i;
            }
          }
        }
      }
    }
    return best;
  }

 private:
  std::size_t bucket(PixelPos p) const {
    const int c = std::clamp(p.x / cell_, 0, cols_ - 1);
    const int r = std::clamp(p.y / cell_, 0, rows_ - 1);
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int cell_;
  int cols_;
  int rows_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace

TransferResult step3_symmetric(const TransferResult& partial, const FaceBuffer& target,
                               const BodyMesh& mesh, const SymmetricPartMap& sym,
                               NearestSearch search) {
  if (!partial.filled_by.same_size(partial.texture) || partial.texture.width() != target.width ||
      partial.texture.height() != target.height) {
    throw Error("step III: partial result does not match the target face buffer");
  }
  TransferResult result = partial;

  std::map<PartLabel, PixelGrid> grids;
  if (search == NearestSearch::kGrid) {
    for (const auto& [label, pool] : partial.label_pixels) {
      if (!pool.empty()) grids.try_emplace(label, pool, target.width, target.height, 8);
    }
  }
  static const std::vector<LabelPixel> kEmpty;
  auto pool_of = [&](PartLabel label) -> const std::vector<LabelPixel>& {
    auto it = partial.label_pixels.find(label);
    return it == partial.label_pixels.end() ? kEmpty : it->second;
  };

  // Resolve labels up front so a missing symmetric entry raises on the
  // calling thread in scan order.
  std::vector<PartLabel> source_label(partial.occluded.size());
  std::vector<std::uint8_t> has_source(partial.occluded.size(), 0);
  for (std::size_t i = 0; i < partial.occluded.size(); ++i) {
    const PixelPos p = partial.occluded[i];
    const FaceId f = target.face_at(p.x, p.y);
    PartLabel label = mesh.face_to_label(f);
    if (pool_of(label).empty()) label = sym.mirror(label);
    source_label[i] = label;
    has_source[i] = pool_of(label).empty() ? 0 : 1;
  }

  parallel_for(partial.occluded.size(), [&](std::size_t i) {
    const PixelPos p = partial.occluded[i];
    if (!has_source[i]) {
      result.filled_by.at(p.x, p.y) = Provenance::kSentinel;
      set_rgb(result.texture, p.x, p.y, kSentinelColor);
      return;
    }
    const auto& pool = pool_of(source_label[i]);
    const std::size_t best = search == NearestSearch::kGrid
                                 ? grids.at(source_label[i]).nearest(pool, p)
                                 : nearest_brute(pool, p);
    result.filled_by.at(p.x, p.y) = Provenance::kSymmetric;
    set_rgb(result.texture, p.x, p.y, pool[best].color);
  });
  return result;
}

std::string_view to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::kEuclideanII: return "euclidean-II";
    case TransferMode::kII: return "II";
    case TransferMode::kIIandIII: return "II+III";
    case TransferMode::kFull: return "I+II+III";
  }
  return "unknown";
}

TransferMode parse_transfer_mode(std::string_view name) {
  if (name == "euclidean-II" || name == "II-euclidean" || name == "II(Euc)") {
    return TransferMode::kEuclideanII;
  }
  if (name == "II" || name == "geodesic-II") return TransferMode::kII;
  if (name == "II+III") return TransferMode::kIIandIII;
  if (name == "I+II+III") return TransferMode::kFull;
  throw Error("unknown transfer mode '" + std::string(name) +
              "' (expected euclidean-II, II, II+III, or I+II+III)");
}

DistanceMetric required_metric(TransferMode mode) {
  return mode == TransferMode::kEuclideanII ? DistanceMetric::kEuclidean : DistanceMetric::kGeodesic;
}

std::vector<TransferResult> transfer_sequence(std::span<const ImageU8> input_frames,
                                              std::span<const FaceBuffer> input_buffers,
                                              std::span<const FaceBuffer> target_buffers,
                                              const BodyMesh& mesh, const NeighborTable& table,
                                              const SymmetricPartMap& sym,
                                              const TransferOptions& options) {
  if (input_frames.size() != input_buffers.size() || input_frames.size() != target_buffers.size()) {
    throw Error("transfer: sequence lengths differ (" + std::to_string(input_frames.size()) +
                " frames, " + std::to_string(input_buffers.size()) + " input buffers, " +
                std::to_string(target_buffers.size()) + " target buffers)");
  }
  if (table.metric() != required_metric(options.mode)) {
    throw Error("transfer: mode " + std::string(to_string(options.mode)) + " needs a " +
                std::string(to_string(required_metric(options.mode))) + " table, got " +
                std::string(to_string(table.metric())));
  }
  const bool use_step3 =
      options.mode == TransferMode::kIIandIII || options.mode == TransferMode::kFull;

  TextureAccumulator sequence_acc;
  if (options.mode == TransferMode::kFull) {
    sequence_acc = step1_accumulate(input_frames, input_buffers, mesh.face_count());
  }

  std::vector<TransferResult> results;
  results.reserve(target_buffers.size());
  for (std::size_t t = 0; t < target_buffers.size(); ++t) {
    TextureAccumulator frame_acc;
    if (options.mode != TransferMode::kFull) {
      frame_acc = step1_accumulate(input_frames.subspan(t, 1), input_buffers.subspan(t, 1),
                                   mesh.face_count());
    }
    const TextureAccumulator& acc = options.mode == TransferMode::kFull ? sequence_acc : frame_acc;
    TransferResult partial = step2_fill(acc, target_buffers[t], mesh, table, options.n, options.step2);
    results.push_back(use_step3 ? step3_symmetric(partial, target_buffers[t], mesh, sym, options.search)
                                : std::move(partial));
  }
  return results;
}

ImageU8 provenance_image(const Image<Provenance>& filled_by) {
  static constexpr std::array<Rgb8, kProvenanceClasses> kPalette{{
      {0, 0, 0},        // background
      {40, 160, 60},    // direct
      {60, 110, 220},   // neighbor
      {240, 170, 30},   // symmetric
      {255, 0, 255},    // sentinel
  }};
  ImageU8 out(filled_by.width(), filled_by.height(), 3);
  for (int y = 0; y < filled_by.height(); ++y) {
    for (int x = 0; x < filled_by.width(); ++x) {
      set_rgb(out, x, y, kPalette[static_cast<std::size_t>(filled_by.at(x, y))]);
    }
  }
  return out;
}

}  // namespace meshwarp
