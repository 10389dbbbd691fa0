#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Geometry>

namespace testing_support {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("meshwarp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

BodyMesh labeled(Vertices vertices, std::vector<Triangle> faces, PartLabel label) {
  BodyMesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  m.face_labels.assign(m.faces.size(), label);
  return m;
}

BodyMesh tetrahedron() {
  // Regular tetrahedron: alternate corners of a cube.
  return labeled({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}},
                 {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}});
}

BodyMesh strip(int n) {
  Vertices v;
  for (int i = 0; i < n / 2 + 2; ++i) {
    v.push_back({static_cast<double>(i), 0.0, 0.0});
    v.push_back({static_cast<double>(i), 1.0, 0.0});
  }
  std::vector<Triangle> f;
  for (int t = 0; t < n; ++t) {
    const auto i = static_cast<std::uint32_t>(t / 2);
    if (t % 2 == 0) {
      f.push_back({2 * i, 2 * i + 2, 2 * i + 1});
    } else {
      f.push_back({2 * i + 1, 2 * i + 2, 2 * i + 3});
    }
  }
  return labeled(std::move(v), std::move(f));
}

BodyMesh heightfield(std::mt19937_64& rng, int nx, int ny, double jitter) {
  std::uniform_real_distribution<double> u(-jitter, jitter);
  Vertices v;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) v.push_back({i + u(rng), j + u(rng), u(rng)});
  }
  std::vector<Triangle> f;
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (nx + 1) + i); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return labeled(std::move(v), std::move(f));
}

Camera random_camera(std::mt19937_64& rng, int width, int height) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  Camera c;
  c.rotation = q.toRotationMatrix();
  c.translation = Eigen::Vector3d(u(rng), u(rng), u(rng));
  c.fx = width * (0.8 + 0.4 * (u(rng) + 1.0));
  c.fy = c.fx * (1.0 + 0.1 * u(rng));
  c.cx = width / 2.0 + 3.0 * u(rng);
  c.cy = height / 2.0 + 3.0 * u(rng);
  c.width = width;
  c.height = height;
  return c;
}

BodyMesh random_soup(std::mt19937_64& rng, const Camera& cam, int faces) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vertices v;
  std::vector<Triangle> f;
  for (int i = 0; i < faces; ++i) {
    const double z0 = 2.0 + 0.3 * i;
    for (int k = 0; k < 3; ++k) {
      const double px = -8.0 + (cam.width + 16.0) * u(rng);
      const double py = -8.0 + (cam.height + 16.0) * u(rng);
      const double z = z0 + 0.2 * u(rng);
      const Eigen::Vector3d c((px - cam.cx) * z / cam.fx, (py - cam.cy) * z / cam.fy, z);
      v.push_back(cam.rotation.transpose() * (c - cam.translation));
    }
    const auto b = static_cast<std::uint32_t>(3 * i);
    f.push_back({b, b + 1, b + 2});
  }
  return labeled(std::move(v), std::move(f));
}

namespace {

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

}  // namespace

RaycastResult raycast(std::span<const Triangle> faces, const Vertices& vertices, const Camera& cam,
                      double edge_margin) {
  RaycastResult r{FaceBuffer(cam.width, cam.height),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(cam.width) * cam.height, 0)};
  struct CamTri {
    Eigen::Vector3d a, b, c;
    Eigen::Vector2d pa, pb, pc;
    bool usable;
  };
  std::vector<CamTri> tris;
  for (const Triangle& t : faces) {
    CamTri ct;
    ct.a = cam.to_camera(vertices[t[0]]);
    ct.b = cam.to_camera(vertices[t[1]]);
    ct.c = cam.to_camera(vertices[t[2]]);
    ct.usable = ct.a.z() > 1e-9 && ct.b.z() > 1e-9 && ct.c.z() > 1e-9;
    if (ct.usable) {
      ct.pa = cam.project_camera(ct.a);
      ct.pb = cam.project_camera(ct.b);
      ct.pc = cam.project_camera(ct.c);
    }
    tris.push_back(ct);
  }
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector2d pix(x + 0.5, y + 0.5);
      const Eigen::Vector3d dir((pix.x() - cam.cx) / cam.fx, (pix.y() - cam.cy) / cam.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      FaceId best_id = kNoFace;
      for (std::size_t i = 0; i < tris.size(); ++i) {
        const CamTri& t = tris[i];
        if (!t.usable) continue;
        if (segment_distance(pix, t.pa, t.pb) < edge_margin ||
            segment_distance(pix, t.pb, t.pc) < edge_margin ||
            segment_distance(pix, t.pc, t.pa) < edge_margin) {
          r.near_edge[r.buffer.index(x, y)] = 1;
        }
        // Moller-Trumbore from the camera origin.
        const Eigen::Vector3d e1 = t.b - t.a;
        const Eigen::Vector3d e2 = t.c - t.a;
        const Eigen::Vector3d p = dir.cross(e2);
        const double det = e1.dot(p);
        if (std::abs(det) < 1e-15) continue;
        const Eigen::Vector3d s = -t.a;
        const double u = s.dot(p) / det;
        if (u < 0.0 || u > 1.0) continue;
        const Eigen::Vector3d q = s.cross(e1);
        const double v = dir.dot(q) / det;
        if (v < 0.0 || u + v > 1.0) continue;
        const double hit = e2.dot(q) / det;  // ray parameter == camera-space z
        if (hit > 0.0 && hit < best) {
          best = hit;
          best_id = static_cast<FaceId>(i);
        }
      }
      if (best_id != kNoFace) {
        r.buffer.face_id[r.buffer.index(x, y)] = best_id;
        r.buffer.depth[r.buffer.index(x, y)] = static_cast<float>(best);
      }
    }
  }
  return r;
}

namespace {

std::vector<std::vector<std::pair<FaceId, double>>> weighted_adjacency(const BodyMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<FaceId>> edges;
  for (FaceId f = 0; f < mesh.face_count(); ++f) {
    const Triangle& t = mesh.faces[f];
    for (int i = 0; i < 3; ++i) {
      const auto a = t[i], b = t[(i + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }
  std::vector<std::vector<std::pair<FaceId, double>>> adj(mesh.face_count());
  for (const auto& [edge, fs] : edges) {
    for (FaceId a : fs) {
      for (FaceId b : fs) {
        if (a == b) continue;
        const bool seen = std::any_of(adj[a].begin(), adj[a].end(),
                                      [b](const auto& e) { return e.first == b; });
        if (!seen) adj[a].push_back({b, (mesh.face_centroid(a) - mesh.face_centroid(b)).norm()});
      }
    }
  }
  return adj;
}

}  // namespace

std::vector<std::vector<double>> all_pairs_geodesic(const BodyMesh& mesh) {
  const auto adj = weighted_adjacency(mesh);
  const std::size_t n = mesh.face_count();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (std::size_t s = 0; s < n; ++s) {
    auto& d = dist[s];
    d[s] = 0.0;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (!std::isfinite(d[u])) continue;
        for (const auto& [v, w] : adj[u]) {
          const double nd = d[u] + w;
          if (nd < d[v]) {
            d[v] = nd;
            changed = true;
          }
        }
      }
    }
  }
  return dist;
}

std::vector<std::vector<double>> all_pairs_euclidean(const BodyMesh& mesh) {
  const std::size_t n = mesh.face_count();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      dist[a][b] = (mesh.face_centroid(static_cast<FaceId>(a)) - mesh.face_centroid(static_cast<FaceId>(b))).norm();
    }
  }
  return dist;
}

std::vector<FaceId> full_ranking(const std::vector<double>& row, FaceId face) {
  std::vector<FaceId> ids;
  for (FaceId f = 0; f < row.size(); ++f) {
    if (f != face && std::isfinite(row[f])) ids.push_back(f);
  }
  std::sort(ids.begin(), ids.end(), [&](FaceId a, FaceId b) {
    return row[a] != row[b] ? row[a] < row[b] : a < b;
  });
  return ids;
}

Rgb8 median_oracle(std::vector<Rgb8> samples) {
  auto pick = [&](auto member) {
    std::vector<std::uint8_t> c;
    for (const Rgb8& s : samples) c.push_back(s.*member);
    std::sort(c.begin(), c.end());
    return c[(c.size() - 1) / 2];
  };
  return {pick(&Rgb8::r), pick(&Rgb8::g), pick(&Rgb8::b)};
}

TransferResult step2_oracle(const std::vector<std::optional<Rgb8>>& reduced, const FaceBuffer& target,
                            const BodyMesh& mesh, const std::vector<std::vector<double>>& dist,
                            std::size_t n, bool record_neighbor_fills) {
  TransferResult r;
  r.texture = ImageU8(target.width, target.height, 3, 0);
  r.filled_by = Image<Provenance>(target.width, target.height, 1, Provenance::kBackground);
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      const FaceId f = target.face_at(x, y);
      if (f == kNoFace) continue;
      if (reduced[f]) {
        set_rgb(r.texture, x, y, *reduced[f]);
        r.filled_by.at(x, y) = Provenance::kDirect;
        r.label_pixels[mesh.face_labels[f]].push_back({*reduced[f], {x, y}});
        continue;
      }
      const auto ranking = full_ranking(dist[f], f);
      bool painted = false;
      for (std::size_t i = 0; i < std::min(n, ranking.size()); ++i) {
        const FaceId d = ranking[i];
        if (!reduced[d]) continue;
        set_rgb(r.texture, x, y, *reduced[d]);
        r.filled_by.at(x, y) = Provenance::kNeighbor;
        if (record_neighbor_fills) r.label_pixels[mesh.face_labels[d]].push_back({*reduced[d], {x, y}});
        painted = true;
        break;
      }
      if (!painted) {
        set_rgb(r.texture, x, y, kSentinelColor);
        r.filled_by.at(x, y) = Provenance::kSentinel;
        r.occluded.push_back({x, y});
      }
    }
  }
  return r;
}

float composite_scalar(float fg, float bg, std::uint8_t mask) { return mask != 0 ? fg : bg; }

float temporal_scalar(float initial, float warped_previous, double zeta) {
  double v = static_cast<double>(initial) + zeta * static_cast<double>(warped_previous);
  if (v < 0.0) v = 0.0;
  if (v > 255.0) v = 255.0;
  return static_cast<float>(v);
}

double huber_scalar(double pred, double gt) {
  const double e = std::fabs(pred - gt);
  if (e < 1.0) return 0.5 * e * e;
  return e - 0.5;
}

ImageF warp_oracle(const ImageF& image, const FlowField& flow) {
  const int w = image.width(), h = image.height();
  ImageF out(w, h, image.channels(), 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!flow.valid[i]) continue;
      const double sx = x - static_cast<double>(flow.dx[i]);
      const double sy = y - static_cast<double>(flow.dy[i]);
      if (sx < 0.0 || sy < 0.0 || sx > w - 1 || sy > h - 1) continue;
      const int ix = static_cast<int>(sx), iy = static_cast<int>(sy);
      const double fx = sx - ix, fy = sy - iy;
      for (int c = 0; c < image.channels(); ++c) {
        double acc = 0.0;
        for (int dy = 0; dy <= 1; ++dy) {
          for (int dx = 0; dx <= 1; ++dx) {
            const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            if (wgt == 0.0) continue;
            acc += wgt * image.at(std::min(ix + dx, w - 1), std::min(iy + dy, h - 1), c);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

double psnr_oracle(const ImageU8& a, const ImageU8& b) {
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data().size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace testing_support
