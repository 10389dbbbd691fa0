#include "meshwarp/humanoid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include <Eigen/Geometry>

#include "meshwarp/error.hpp"

namespace meshwarp {

namespace {

constexpr std::array<std::string_view, part::kCount + 1> kPartNames = {
    "background",     "pelvis",         "left_thigh",     "right_thigh",   "torso_lower",
    "left_calf",      "right_calf",     "torso",          "left_ankle",    "right_ankle",
    "torso_upper",    "left_foot",      "right_foot",     "neck",          "left_collar",
    "right_collar",   "head",           "left_upper_arm", "right_upper_arm", "left_forearm",
    "right_forearm",  "left_wrist",     "right_wrist",    "left_hand",     "right_hand",
};

constexpr std::size_t bone_index(Bone b) { return static_cast<std::size_t>(b); }

}  // namespace

std::string_view part_name(PartLabel label) {
  if (label > part::kCount) throw Error("unknown part label " + std::to_string(label));
  return kPartNames[label];
}

SymmetricPartMap default_symmetry() {
  using namespace part;
  const std::vector<std::pair<PartLabel, PartLabel>> pairs = {
      {kPelvis, kPelvis},           {kTorsoLower, kTorsoLower},     {kTorso, kTorso},
      {kTorsoUpper, kTorsoUpper},   {kNeck, kNeck},                 {kHead, kHead},
      {kLeftThigh, kRightThigh},    {kLeftCalf, kRightCalf},        {kLeftAnkle, kRightAnkle},
      {kLeftFoot, kRightFoot},      {kLeftCollar, kRightCollar},    {kLeftUpperArm, kRightUpperArm},
      {kLeftForearm, kRightForearm}, {kLeftWrist, kRightWrist},     {kLeftHand, kRightHand},
  };
  return SymmetricPartMap::from_pairs(pairs);
}

// Body dimensions in meters.
namespace {
constexpr double kTorsoWidth = 0.36;
constexpr double kTorsoDepth = 0.20;
constexpr double kHipHeight = 0.90;
constexpr double kTorsoHeight = 0.54;
}  // namespace

Humanoid::Humanoid(int subdivisions) : subdivisions_(subdivisions) {
  if (subdivisions < 1) throw Error("humanoid: subdivisions must be >= 1");
  pivot_.fill(Eigen::Vector3d::Zero());
  parent_.fill(-1);
  pivot_[bone_index(Bone::kTorso)] = {0.0, kHipHeight, 0.0};

  // Torso: a 3 x 3 x 1 lattice box; rows bottom to top are torso_lower,
  // torso, torso_upper.
  constexpr int nx = 3, ny = 3, nz = 1;
  std::map<std::tuple<int, int, int>, std::uint32_t> lattice;
  auto lv = [&](int i, int j, int k) {
    const auto key = std::make_tuple(i, j, k);
    if (auto it = lattice.find(key); it != lattice.end()) return it->second;
    const Eigen::Vector3d p(-kTorsoWidth / 2 + kTorsoWidth * i / nx,
                            kHipHeight + kTorsoHeight * j / ny,
                            -kTorsoDepth / 2 + kTorsoDepth * k / nz);
    const std::uint32_t id = add_coarse(p, Bone::kTorso);
    lattice.emplace(key, id);
    return id;
  };
  const std::array<PartLabel, ny> row_label = {part::kTorsoLower, part::kTorso, part::kTorsoUpper};
  auto torso_quad = [&](std::array<std::uint32_t, 4> v, PartLabel label) {
    quads_.push_back({v, label, Bone::kTorso});
    return quads_.size() - 1;
  };

  std::array<std::size_t, nx> bottom{}, top{};
  for (int i = 0; i < nx; ++i) {
    bottom[i] = torso_quad({lv(i, 0, 0), lv(i + 1, 0, 0), lv(i + 1, 0, 1), lv(i, 0, 1)}, part::kPelvis);
    top[i] = torso_quad({lv(i, ny, 0), lv(i, ny, 1), lv(i + 1, ny, 1), lv(i + 1, ny, 0)},
                        part::kTorsoUpper);
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      torso_quad({lv(i, j, nz), lv(i + 1, j, nz), lv(i + 1, j + 1, nz), lv(i, j + 1, nz)}, row_label[j]);
      torso_quad({lv(i, j, 0), lv(i, j + 1, 0), lv(i + 1, j + 1, 0), lv(i + 1, j, 0)}, row_label[j]);
    }
  }
  std::array<std::size_t, ny> right_side{}, left_side{};
  for (int j = 0; j < ny; ++j) {
    right_side[j] = torso_quad({lv(0, j, 0), lv(0, j, 1), lv(0, j + 1, 1), lv(0, j + 1, 0)}, row_label[j]);
    left_side[j] =
        torso_quad({lv(nx, j, 0), lv(nx, j + 1, 0), lv(nx, j + 1, 1), lv(nx, j, 1)}, row_label[j]);
  }

  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d down = -up;

  std::size_t q = extrude(top[1], 0.06 * up, 0.8, part::kNeck, Bone::kNeck, Bone::kTorso);
  extrude(q, 0.22 * up, 1.6, part::kHead, Bone::kHead, Bone::kNeck);

  struct ArmSpec {
    std::size_t side;
    double sign;
    PartLabel collar, upper, fore, hand;
    Bone b_collar, b_upper, b_fore, b_hand;
  };
  const std::array<ArmSpec, 2> arms = {{
      {left_side[2], 1.0, part::kLeftCollar, part::kLeftUpperArm, part::kLeftForearm,
       part::kLeftHand, Bone::kLeftCollar, Bone::kLeftUpperArm, Bone::kLeftForearm, Bone::kLeftHand},
      {right_side[2], -1.0, part::kRightCollar, part::kRightUpperArm, part::kRightForearm,
       part::kRightHand, Bone::kRightCollar, Bone::kRightUpperArm, Bone::kRightForearm,
       Bone::kRightHand},
  }};
  for (const ArmSpec& arm : arms) {
    const Eigen::Vector3d out(arm.sign, 0.0, 0.0);
    const std::size_t first_side = quads_.size();
    extrude(arm.side, 0.09 * out, 0.9, arm.collar, arm.b_collar, Bone::kTorso);
    // The arm hangs from the underside of the collar segment.
    q = side_quad_facing(first_side, down);
    q = extrude(q, 0.30 * down, 0.9, arm.upper, arm.b_upper, arm.b_collar);
    q = extrude(q, 0.27 * down, 0.9, arm.fore, arm.b_fore, arm.b_upper);
    extrude(q, 0.16 * down, 0.95, arm.hand, arm.b_hand, arm.b_fore);
  }

  struct LegSpec {
    std::size_t cell;
    PartLabel thigh, calf, foot;
    Bone b_thigh, b_calf, b_foot;
  };
  const std::array<LegSpec, 2> legs = {{
      {bottom[2], part::kLeftThigh, part::kLeftCalf, part::kLeftFoot, Bone::kLeftThigh,
       Bone::kLeftCalf, Bone::kLeftFoot},
      {bottom[0], part::kRightThigh, part::kRightCalf, part::kRightFoot, Bone::kRightThigh,
       Bone::kRightCalf, Bone::kRightFoot},
  }};
  for (const LegSpec& leg : legs) {
    q = extrude(leg.cell, 0.42 * down, 0.95, leg.thigh, leg.b_thigh, Bone::kTorso);
    q = extrude(q, 0.40 * down, 0.85, leg.calf, leg.b_calf, leg.b_thigh);
    extrude(q, 0.08 * down, 1.0, leg.foot, leg.b_foot, leg.b_calf);
  }

  subdivide();
  mesh_.validate();
}

std::uint32_t Humanoid::add_coarse(const Eigen::Vector3d& p, Bone owner) {
  coarse_rest_.push_back(p);
  coarse_owner_.push_back(owner);
  return static_cast<std::uint32_t>(coarse_rest_.size() - 1);
}

std::size_t Humanoid::extrude(std::size_t quad, const Eigen::Vector3d& offset, double scale,
                              PartLabel label, Bone bone, Bone parent) {
  const auto base = quads_[quad].v;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  for (std::uint32_t v : base) center += coarse_rest_[v];
  center /= 4.0;
  pivot_[bone_index(bone)] = center;
  parent_[bone_index(bone)] = static_cast<int>(bone_index(parent));

  std::array<std::uint32_t, 4> cap{};
  for (int i = 0; i < 4; ++i) {
    cap[i] = add_coarse(center + offset + scale * (coarse_rest_[base[i]] - center), bone);
  }
  for (int i = 0; i < 4; ++i) {
    const int n = (i + 1) % 4;
    quads_.push_back({{base[i], base[n], cap[n], cap[i]}, label, bone});
  }
  quads_[quad] = {cap, label, bone};
  return quad;
}

std::size_t Humanoid::side_quad_facing(std::size_t first_side,
                                       const Eigen::Vector3d& direction) const {
  std::size_t best = first_side;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t q = first_side; q < first_side + 4; ++q) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (std::uint32_t v : quads_[q].v) c += coarse_rest_[v];
    const double d = c.dot(direction);
    if (d > best_dot) {
      best_dot = d;
      best = q;
    }
  }
  return best;
}

void Humanoid::subdivide() {
  const int m = subdivisions_;
  std::map<std::uint32_t, std::uint32_t> corner_ids;
  std::map<std::tuple<std::uint32_t, std::uint32_t, int>, std::uint32_t> edge_ids;

  auto add_fine = [&](const FineVertex& fv) {
    fine_.push_back(fv);
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int i = 0; i < 4; ++i) p += fv.weight[i] * coarse_rest_[fv.coarse[i]];
    mesh_.vertices.push_back(p);
    return static_cast<std::uint32_t>(fine_.size() - 1);
  };

  std::vector<std::uint32_t> grid(static_cast<std::size_t>(m + 1) * (m + 1));
  for (const Quad& quad : quads_) {
    const auto& v = quad.v;
    for (int j = 0; j <= m; ++j) {
      for (int i = 0; i <= m; ++i) {
        const double s = static_cast<double>(i) / m;
        const double t = static_cast<double>(j) / m;
        const FineVertex fv{v, {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t}};

        // Shared corners and edge points are keyed topologically so that
        // neighboring quads reuse the same fine vertex.
        int corner = -1;
        if (i == 0 && j == 0) corner = 0;
        if (i == m && j == 0) corner = 1;
        if (i == m && j == m) corner = 2;
        if (i == 0 && j == m) corner = 3;
        std::uint32_t id;
        if (corner >= 0) {
          const std::uint32_t cv = v[corner];
          auto it = corner_ids.find(cv);
          if (it == corner_ids.end()) {
            FineVertex exact{};
            exact.coarse = {cv, cv, cv, cv};
            exact.weight = {1.0, 0.0, 0.0, 0.0};
            it = corner_ids.emplace(cv, add_fine(exact)).first;
          }
          id = it->second;
        } else if (i == 0 || j == 0 || i == m || j == m) {
          std::uint32_t a, b;
          int k;
          if (j == 0) { a = v[0]; b = v[1]; k = i; }
          else if (i == m) { a = v[1]; b = v[2]; k = j; }
          else if (j == m) { a = v[3]; b = v[2]; k = i; }
          else { a = v[0]; b = v[3]; k = j; }
          if (a > b) {
            std::swap(a, b);
            k = m - k;
          }
          const auto key = std::make_tuple(a, b, k);
          auto it = edge_ids.find(key);
          if (it == edge_ids.end()) {
            const double u = static_cast<double>(k) / m;
            FineVertex exact{};
            exact.coarse = {a, b, a, b};
            exact.weight = {1.0 - u, u, 0.0, 0.0};
            it = edge_ids.emplace(key, add_fine(exact)).first;
          }
          id = it->second;
        } else {
          id = add_fine(fv);
        }
        grid[static_cast<std::size_t>(j) * (m + 1) + i] = id;
      }
    }
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const auto at = [&](int x, int y) { return grid[static_cast<std::size_t>(y) * (m + 1) + x]; };
        mesh_.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
        mesh_.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        mesh_.face_labels.push_back(quad.label);
        mesh_.face_labels.push_back(quad.label);
      }
    }
  }
  for (PartLabel l = 1; l <= part::kCount; ++l) mesh_.label_names[l] = std::string(part_name(l));
}

Vertices Humanoid::pose(const BodyPose& pose) const {
  using Affine = Eigen::Affine3d;
  std::array<Affine, kBoneCount> world;
  const Affine root = Eigen::Translation3d(pose.root_translation) *
                      Eigen::AngleAxisd(pose.root_yaw, Eigen::Vector3d::UnitY());
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    const Eigen::Vector3d& r = pose.joint_rotation[b];
    const double angle = r.norm();
    Affine local = Affine::Identity();
    if (angle > 0.0) {
      local = Eigen::Translation3d(pivot_[b]) * Eigen::AngleAxisd(angle, r / angle) *
              Eigen::Translation3d(-pivot_[b]);
    }
    // Bones are declared parents-first.
    world[b] = (parent_[b] < 0 ? root : world[parent_[b]]) * local;
  }
  Vertices coarse(coarse_rest_.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    coarse[i] = world[bone_index(coarse_owner_[i])] * coarse_rest_[i];
  }
  Vertices out(fine_.size());
  for (std::size_t i = 0; i < fine_.size(); ++i) {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int k = 0; k < 4; ++k) {
      if (fine_[i].weight[k] != 0.0) p += fine_[i].weight[k] * coarse[fine_[i].coarse[k]];
    }
    out[i] = p;
  }
  return out;
}

std::vector<FaceId> Humanoid::faces_with_labels(std::span<const PartLabel> labels) const {
  std::vector<FaceId> out;
  for (FaceId f = 0; f < mesh_.face_count(); ++f) {
    if (std::find(labels.begin(), labels.end(), mesh_.face_labels[f]) != labels.end()) {
      out.push_back(f);
    }
  }
  return out;
}

BodyMesh smpl_scale_template() {
  // 56 segments x 123 latitude rings + 2 poles = 6890 vertices;
  // 2 * 56 pole triangles + 122 * 56 * 2 band triangles = 13776 faces.
  constexpr int kSegments = 56;
  constexpr int kRings = 123;
  using namespace part;
  // Bands from head to feet; paired bands split at x = 0 (left is +x).
  struct Band {
    PartLabel left, right;
  };
  constexpr std::array<Band, 15> kBands = {{
      {kHead, kHead},
      {kNeck, kNeck},
      {kLeftCollar, kRightCollar},
      {kTorsoUpper, kTorsoUpper},
      {kLeftUpperArm, kRightUpperArm},
      {kTorso, kTorso},
      {kLeftForearm, kRightForearm},
      {kTorsoLower, kTorsoLower},
      {kLeftWrist, kRightWrist},
      {kLeftHand, kRightHand},
      {kPelvis, kPelvis},
      {kLeftThigh, kRightThigh},
      {kLeftCalf, kRightCalf},
      {kLeftAnkle, kRightAnkle},
      {kLeftFoot, kRightFoot},
  }};

  BodyMesh mesh;
  const double pi = std::numbers::pi;
  auto point = [&](double polar, double azimuth) {
    return Eigen::Vector3d(0.2 * std::sin(polar) * std::cos(azimuth), 0.9 + 0.9 * std::cos(polar),
                           0.12 * std::sin(polar) * std::sin(azimuth));
  };
  mesh.vertices.push_back(point(0.0, 0.0));
  for (int r = 0; r < kRings; ++r) {
    const double polar = pi * (r + 1) / (kRings + 1);
    for (int s = 0; s < kSegments; ++s) mesh.vertices.push_back(point(polar, 2 * pi * s / kSegments));
  }
  mesh.vertices.push_back(point(pi, 0.0));
  const auto south = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  auto ring_vertex = [&](int r, int s) {
    return static_cast<std::uint32_t>(1 + r * kSegments + (s % kSegments));
  };
  auto label = [&](int ring, int s) {
    const Band& band = kBands[static_cast<std::size_t>(ring) * kBands.size() / kRings];
    const double azimuth = 2 * pi * (s + 0.5) / kSegments;
    return std::cos(azimuth) > 0.0 ? band.left : band.right;
  };
  auto add = [&](Triangle t, PartLabel l) {
    mesh.faces.push_back(t);
    mesh.face_labels.push_back(l);
  };
  for (int s = 0; s < kSegments; ++s) add({0, ring_vertex(0, s + 1), ring_vertex(0, s)}, label(0, s));
  for (int r = 0; r + 1 < kRings; ++r) {
    for (int s = 0; s < kSegments; ++s) {
      const PartLabel l = label(r, s);
      add({ring_vertex(r, s), ring_vertex(r, s + 1), ring_vertex(r + 1, s + 1)}, l);
      add({ring_vertex(r, s), ring_vertex(r + 1, s + 1), ring_vertex(r + 1, s)}, l);
    }
  }
  for (int s = 0; s < kSegments; ++s) {
    add({south, ring_vertex(kRings - 1, s), ring_vertex(kRings - 1, s + 1)}, label(kRings - 1, s));
  }
  for (PartLabel l = 1; l <= kCount; ++l) mesh.label_names[l] = std::string(part_name(l));
  mesh.validate();
  return mesh;
}

}  // namespace meshwarp
