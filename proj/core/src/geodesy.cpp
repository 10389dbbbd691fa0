#include "meshwarp/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "binary_io.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/parallel.hpp"

namespace meshwarp {

std::string_view to_string(DistanceMetric metric) {
  return metric == DistanceMetric::kGeodesic ? "geodesic" : "euclidean";
}

DistanceMetric parse_metric(std::string_view name) {
  if (name == "geodesic") return DistanceMetric::kGeodesic;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  throw Error("unknown metric '" + std::string(name) + "' (expected geodesic|euclidean)");
}

NeighborTable::NeighborTable(DistanceMetric metric, std::size_t face_count, std::size_t k)
    : metric_(metric),
      face_count_(face_count),
      k_(k),
      ids_(face_count * k, kNoNeighbor),
      dists_(face_count * k, std::numeric_limits<float>::infinity()) {}

std::span<const FaceId> NeighborTable::neighbor_ids(FaceId face) const {
  return std::span<const FaceId>(ids_).subspan(static_cast<std::size_t>(face) * k_, k_);
}
std::span<const float> NeighborTable::neighbor_dists(FaceId face) const {
  return std::span<const float>(dists_).subspan(static_cast<std::size_t>(face) * k_, k_);
}
std::span<FaceId> NeighborTable::neighbor_ids(FaceId face) {
  return std::span<FaceId>(ids_).subspan(static_cast<std::size_t>(face) * k_, k_);
}
std::span<float> NeighborTable::neighbor_dists(FaceId face) {
  return std::span<float>(dists_).subspan(static_cast<std::size_t>(face) * k_, k_);
}

std::size_t NeighborTable::row_size(FaceId face) const {
  const auto row = neighbor_ids(face);
  return static_cast<std::size_t>(std::find(row.begin(), row.end(), kNoNeighbor) - row.begin());
}

std::size_t NeighborTable::short_rows() const {
  std::size_t count = 0;
  for (std::size_t f = 0; f < face_count_; ++f) {
    if (row_size(static_cast<FaceId>(f)) < k_) ++count;
  }
  return count;
}

std::vector<std::vector<FaceId>> face_adjacency(std::span<const Triangle> faces) {
  std::unordered_map<std::uint64_t, std::vector<FaceId>> edge_faces;
  edge_faces.reserve(faces.size() * 2);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (int e = 0; e < 3; ++e) {
      const std::uint64_t a = std::min(t[e], t[(e + 1) % 3]);
      const std::uint64_t b = std::max(t[e], t[(e + 1) % 3]);
      edge_faces[(a << 32) | b].push_back(static_cast<FaceId>(f));
    }
  }
  std::vector<std::vector<FaceId>> adjacency(faces.size());
  for (const auto& [edge, incident] : edge_faces) {
    for (FaceId f : incident) {
      for (FaceId g : incident) {
        if (f != g) adjacency[f].push_back(g);
      }
    }
  }
  for (auto& row : adjacency) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adjacency;
}

namespace {

struct WeightedEdge {
  FaceId to;
  double weight;
};

using Graph = std::vector<std::vector<WeightedEdge>>;

Graph centroid_graph(const BodyMesh& mesh, const std::vector<Eigen::Vector3d>& centroids) {
  const auto adjacency = face_adjacency(mesh.faces);
  Graph graph(adjacency.size());
  for (std::size_t f = 0; f < adjacency.size(); ++f) {
    graph[f].reserve(adjacency[f].size());
    for (FaceId g : adjacency[f]) graph[f].push_back({g, (centroids[f] - centroids[g]).norm()});
  }
  return graph;
}

// Scratch space for one worker's truncated Dijkstra runs; reset touches only
// the nodes visited by the previous run.
class DijkstraScratch {
 public:
  explicit DijkstraScratch(std::size_t nodes)
      : dist_(nodes, std::numeric_limits<double>::infinity()), settled_(nodes, 0) {}

  void run(const Graph& graph, FaceId source, std::size_t k, std::span<FaceId> out_ids,
           std::span<float> out_dists) {
    for (FaceId v : touched_) {
      dist_[v] = std::numeric_limits<double>::infinity();
      settled_[v] = 0;
    }
    touched_.clear();

    using Entry = std::pair<double, FaceId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist_[source] = 0.0;
    touched_.push_back(source);
    heap.push({0.0, source});
    std::size_t found = 0;
    while (!heap.empty() && found < k) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (settled_[u] || d > dist_[u]) continue;
      settled_[u] = 1;
      if (u != source) {
        out_ids[found] = u;
        out_dists[found] = static_cast<float>(d);
        ++found;
      }
      for (const auto& edge : graph[u]) {
        if (settled_[edge.to]) continue;
        const double nd = d + edge.weight;
        if (nd < dist_[edge.to]) {
          if (std::isinf(dist_[edge.to])) touched_.push_back(edge.to);
          dist_[edge.to] = nd;
          heap.push({nd, edge.to});
        }
      }
    }
  }

 private:
  std::vector<double> dist_;
  std::vector<std::uint8_t> settled_;
  std::vector<FaceId> touched_;
};

}  // namespace

NeighborTable build_neighbor_table(const BodyMesh& mesh, std::size_t k, DistanceMetric metric) {
  const std::size_t n = mesh.face_count();
  if (k == 0 || k >= n) {
    throw Error("neighbor count k=" + std::to_string(k) + " must satisfy 0 < k < N_f=" +
                std::to_string(n));
  }
  std::vector<Eigen::Vector3d> centroids(n);
  for (std::size_t f = 0; f < n; ++f) centroids[f] = mesh.face_centroid(static_cast<FaceId>(f));

  NeighborTable table(metric, n, k);

  if (metric == DistanceMetric::kGeodesic) {
    const Graph graph = centroid_graph(mesh, centroids);
    parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
      DijkstraScratch scratch(n);
      for (std::size_t f = begin; f < end; ++f) {
        const auto src = static_cast<FaceId>(f);
        scratch.run(graph, src, k, table.neighbor_ids(src), table.neighbor_dists(src));
      }
    });
  } else {
    parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
      std::vector<std::pair<double, FaceId>> ranked(n - 1);
      for (std::size_t f = begin; f < end; ++f) {
        std::size_t j = 0;
        for (std::size_t g = 0; g < n; ++g) {
          if (g == f) continue;
          ranked[j++] = {(centroids[f] - centroids[g]).norm(), static_cast<FaceId>(g)};
        }
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                          ranked.end());
        const auto src = static_cast<FaceId>(f);
        auto ids = table.neighbor_ids(src);
        auto dists = table.neighbor_dists(src);
        for (std::size_t i = 0; i < k; ++i) {
          ids[i] = ranked[i].second;
          dists[i] = static_cast<float>(ranked[i].first);
        }
      }
    });
  }
  return table;
}

std::vector<FaceId> nearest_faces(const NeighborTable& table, FaceId face, std::size_t n) {
  if (n > table.k()) {
    throw Error("requested n=" + std::to_string(n) + " nearest faces but the table keeps k=" +
                std::to_string(table.k()) + "; rebuild the table with a larger k");
  }
  if (face >= table.face_count()) throw Error("face id " + std::to_string(face) + " out of range");
  const auto row = table.neighbor_ids(face).first(n);
  std::vector<FaceId> out;
  out.reserve(n);
  for (FaceId id : row) {
    if (id == kNoNeighbor) break;
    out.push_back(id);
  }
  return out;
}

namespace {
constexpr std::string_view kTableMagic = "FNT1";
}

void save_table(const std::filesystem::path& path, const NeighborTable& table) {
  detail::BinaryWriter out(path);
  out.magic(kTableMagic);
  out.u8(static_cast<std::uint8_t>(table.metric()));
  out.u32(static_cast<std::uint32_t>(table.face_count()));
  out.u32(static_cast<std::uint32_t>(table.k()));
  for (std::size_t f = 0; f < table.face_count(); ++f) {
    const auto ids = table.neighbor_ids(static_cast<FaceId>(f));
    const auto dists = table.neighbor_dists(static_cast<FaceId>(f));
    for (std::size_t i = 0; i < table.k(); ++i) {
      out.u32(ids[i]);
      out.f32(dists[i]);
    }
  }
  out.finish();
}

NeighborTable load_table(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic(kTableMagic);
  const std::uint8_t tag = in.u8();
  if (tag > 1) throw Error("unknown metric tag " + std::to_string(tag) + " in " + path.string());
  const std::uint32_t n = in.u32();
  const std::uint32_t k = in.u32();
  in.require(static_cast<std::uint64_t>(n) * k * 8);
  NeighborTable table(static_cast<DistanceMetric>(tag), n, k);
  for (std::uint32_t f = 0; f < n; ++f) {
    auto ids = table.neighbor_ids(f);
    auto dists = table.neighbor_dists(f);
    for (std::uint32_t i = 0; i < k; ++i) {
      ids[i] = in.u32();
      dists[i] = in.f32();
    }
  }
  in.expect_end();

  // Sampled validation: ~256 rows spread evenly, plus the last one.
  const std::uint32_t stride = std::max<std::uint32_t>(1, n / 256);
  auto check_row = [&](std::uint32_t f) {
    const auto ids = table.neighbor_ids(f);
    const auto dists = table.neighbor_dists(f);
    for (std::uint32_t i = 0; i < k; ++i) {
      if (ids[i] == kNoNeighbor) continue;
      if (ids[i] >= n || ids[i] == f || !(dists[i] >= 0.0f)) {
        throw Error("corrupt row " + std::to_string(f) + " in " + path.string());
      }
      if (i > 0 && dists[i] < dists[i - 1]) {
        throw Error("row " + std::to_string(f) + " not sorted in " + path.string());
      }
    }
  };
  for (std::uint32_t f = 0; f < n; f += stride) check_row(f);
  if (n > 0) check_row(n - 1);
  return table;
}

}  // namespace meshwarp
