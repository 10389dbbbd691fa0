#include "meshwarp/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Geometry>

#include "binary_io.hpp"
#include "csv.hpp"
#include "meshwarp/error.hpp"

namespace meshwarp {

PartLabel BodyMesh::face_to_label(FaceId face_id) const {
  if (face_id >= face_labels.size()) {
    throw Error("face id " + std::to_string(face_id) + " out of range (N_f = " +
                std::to_string(face_labels.size()) + ")");
  }
  return face_labels[face_id];
}

void BodyMesh::validate(bool require_nondegenerate) const {
  if (face_labels.size() != faces.size()) {
    throw Error("label count mismatch: " + std::to_string(face_labels.size()) + " labels for " +
                std::to_string(faces.size()) + " faces");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (std::uint32_t v : faces[f]) {
      if (v >= vertices.size()) {
        throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                    " out of range");
      }
    }
    if (face_labels[f] == kBackgroundLabel) {
      throw Error("face " + std::to_string(f) + " carries reserved background label 0");
    }
    if (require_nondegenerate) {
      const auto& t = faces[f];
      const Eigen::Vector3d n =
          (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
      if (n.norm() == 0.0) throw Error("degenerate (zero-area) face " + std::to_string(f));
    }
  }
}

Eigen::Vector3d BodyMesh::face_centroid(FaceId face, const Vertices& posed) const {
  const auto& t = faces[face];
  return (posed[t[0]] + posed[t[1]] + posed[t[2]]) / 3.0;
}

SymmetricPartMap SymmetricPartMap::from_pairs(
    std::span<const std::pair<PartLabel, PartLabel>> pairs) {
  SymmetricPartMap map;
  auto insert = [&map](PartLabel from, PartLabel to) {
    auto [it, inserted] = map.mirror_.emplace(from, to);
    if (!inserted && it->second != to) {
      throw Error("label " + std::to_string(from) + " paired with both " +
                  std::to_string(it->second) + " and " + std::to_string(to));
    }
  };
  for (const auto& [a, b] : pairs) {
    insert(a, b);
    insert(b, a);
  }
  return map;
}

PartLabel SymmetricPartMap::mirror(PartLabel label) const {
  auto it = mirror_.find(label);
  if (it == mirror_.end()) throw Error("label " + std::to_string(label) + " missing from symmetric map");
  return it->second;
}

void SymmetricPartMap::validate_covers(const BodyMesh& mesh) const {
  for (PartLabel label : mesh.face_labels) {
    if (!contains(label)) {
      throw Error("label " + std::to_string(label) + " missing from symmetric map");
    }
  }
}

void MeshSequence::validate(std::size_t expected_vertices) const {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != expected_vertices) {
      throw Error("mesh sequence frame " + std::to_string(t) + " has " +
                  std::to_string(frames[t].size()) + " vertices, expected " +
                  std::to_string(expected_vertices));
    }
  }
}

namespace {

long parse_obj_index(std::string_view token, std::size_t vertex_count, std::size_t line_no) {
  const auto slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  long index = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
  if (ec != std::errc{} || ptr != token.data() + token.size() || index == 0) {
    throw Error("malformed face index '" + std::string(token) + "' on line " +
                std::to_string(line_no));
  }
  return index > 0 ? index - 1 : static_cast<long>(vertex_count) + index;
}

}  // namespace

ObjGeometry read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open OBJ: " + path.string());
  ObjGeometry geo;
  std::string line;
  std::size_t line_no = 0;
  std::vector<long> raw;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw Error("malformed vertex on line " + std::to_string(line_no));
      }
      geo.vertices.push_back(p);
    } else if (tag == "f") {
      raw.clear();
      std::string token;
      while (ls >> token) raw.push_back(parse_obj_index(token, geo.vertices.size(), line_no));
      if (raw.size() != 3) {
        throw Error("non-triangle face with " + std::to_string(raw.size()) +
                    " vertices on line " + std::to_string(line_no) +
                    " (mesh must be pre-triangulated)");
      }
      Triangle tri{};
      for (int k = 0; k < 3; ++k) {
        if (raw[k] < 0) {
          throw Error("face on line " + std::to_string(line_no) + " has out-of-range vertex index");
        }
        tri[k] = static_cast<std::uint32_t>(raw[k]);
      }
      geo.faces.push_back(tri);
    }
  }
  for (std::size_t f = 0; f < geo.faces.size(); ++f) {
    for (std::uint32_t v : geo.faces[f]) {
      if (v >= geo.vertices.size()) {
        throw Error("face " + std::to_string(f) + " has out-of-range vertex index " +
                    std::to_string(v + 1));
      }
    }
  }
  return geo;
}

void write_obj(const std::filesystem::path& path, const Vertices& vertices,
               std::span<const Triangle> faces) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write OBJ: " + path.string());
  out << std::setprecision(9);
  for (const auto& v : vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

LabelTable read_labels_csv(const std::filesystem::path& path, std::size_t face_count) {
  const auto rows = detail::read_csv(path);
  LabelTable table;
  std::vector<bool> seen(face_count, false);
  table.face_labels.assign(face_count, kBackgroundLabel);
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row.fields.size() < 2) {
      throw Error(path.string() + ":" + std::to_string(row.line) + ": expected face_index,label_id");
    }
    const auto face = detail::parse_uint(row.fields[0], path, row.line);
    const auto label = detail::parse_uint(row.fields[1], path, row.line);
    ++count;
    if (face >= face_count) {
      if (count > face_count) continue;  // reported as a count mismatch below
      throw Error(path.string() + ":" + std::to_string(row.line) + ": face index " +
                  std::to_string(face) + " out of range");
    }
    if (label == 0 || label > 0xFFFF) {
      throw Error(path.string() + ":" + std::to_string(row.line) + ": label must be in 1..65535");
    }
    if (seen[face]) {
      throw Error(path.string() + ":" + std::to_string(row.line) + ": face " +
                  std::to_string(face) + " labeled twice");
    }
    seen[face] = true;
    table.face_labels[face] = static_cast<PartLabel>(label);
    if (row.fields.size() >= 3 && !row.fields[2].empty()) {
      table.names[static_cast<PartLabel>(label)] = row.fields[2];
    }
  }
  if (count != face_count) {
    throw Error("label count mismatch: " + std::to_string(count) + " labels for " +
                std::to_string(face_count) + " faces");
  }
  return table;
}

void write_labels_csv(const std::filesystem::path& path, const BodyMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "face_index,label_id,label_name\n";
  for (std::size_t f = 0; f < mesh.face_labels.size(); ++f) {
    const PartLabel label = mesh.face_labels[f];
    out << f << ',' << label;
    if (auto it = mesh.label_names.find(label); it != mesh.label_names.end()) out << ',' << it->second;
    out << '\n';
  }
}

SymmetricPartMap read_sym_pairs_csv(const std::filesystem::path& path) {
  std::vector<std::pair<PartLabel, PartLabel>> pairs;
  for (const auto& row : detail::read_csv(path)) {
    if (row.fields.size() < 2) {
      throw Error(path.string() + ":" + std::to_string(row.line) + ": expected label_a,label_b");
    }
    pairs.emplace_back(static_cast<PartLabel>(detail::parse_uint(row.fields[0], path, row.line)),
                       static_cast<PartLabel>(detail::parse_uint(row.fields[1], path, row.line)));
  }
  return SymmetricPartMap::from_pairs(pairs);
}

void write_sym_pairs_csv(const std::filesystem::path& path, const SymmetricPartMap& map) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "label_a,label_b\n";
  for (const auto& [a, b] : map.entries()) {
    if (a <= b) out << a << ',' << b << '\n';
  }
}

std::map<PartLabel, std::string> read_part_names_csv(const std::filesystem::path& path) {
  std::map<PartLabel, std::string> names;
  for (const auto& row : detail::read_csv(path)) {
    if (row.fields.size() < 2) continue;
    names[static_cast<PartLabel>(detail::parse_uint(row.fields[0], path, row.line))] = row.fields[1];
  }
  return names;
}

BodyMesh load_mesh(const std::filesystem::path& obj_path, const std::filesystem::path& labels_path) {
  auto geo = read_obj(obj_path);
  auto labels = read_labels_csv(labels_path, geo.faces.size());
  BodyMesh mesh{std::move(geo.vertices), std::move(geo.faces), std::move(labels.face_labels),
                std::move(labels.names)};
  mesh.validate(/*require_nondegenerate=*/true);
  return mesh;
}

namespace {
constexpr std::string_view kSeqMagic = "MSEQ1";
}

MeshSequence read_mesh_sequence(const std::filesystem::path& path, double fps) {
  detail::BinaryReader in(path);
  in.expect_magic(kSeqMagic);
  const std::uint32_t frames = in.u32();
  const std::uint32_t verts = in.u32();
  in.require(static_cast<std::uint64_t>(frames) * verts * 12);
  MeshSequence seq;
  seq.fps = fps;
  seq.frames.resize(frames);
  for (auto& frame : seq.frames) {
    frame.resize(verts);
    for (auto& v : frame) {
      const float x = in.f32();
      const float y = in.f32();
      const float z = in.f32();
      v = {x, y, z};
    }
  }
  in.expect_end();
  return seq;
}

void write_mesh_sequence(const std::filesystem::path& path, const MeshSequence& sequence) {
  sequence.validate(sequence.vertex_count());
  detail::BinaryWriter out(path);
  out.magic(kSeqMagic);
  out.u32(static_cast<std::uint32_t>(sequence.frame_count()));
  out.u32(static_cast<std::uint32_t>(sequence.vertex_count()));
  for (const auto& frame : sequence.frames) {
    for (const auto& v : frame) {
      out.f32(static_cast<float>(v.x()));
      out.f32(static_cast<float>(v.y()));
      out.f32(static_cast<float>(v.z()));
    }
  }
  out.finish();
}

MeshSequence load_mesh_sequence(const std::filesystem::path& path, double fps) {
  if (!std::filesystem::is_directory(path)) return read_mesh_sequence(path, fps);
  MeshSequence seq;
  seq.fps = fps;
  for (std::size_t t = 0;; ++t) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << t << ".obj";
    const auto file = path / name.str();
    if (!std::filesystem::exists(file)) break;
    seq.frames.push_back(read_obj(file).vertices);
  }
  if (seq.frames.empty()) throw Error("no NNNNNN.obj frames in " + path.string());
  seq.validate(seq.vertex_count());
  return seq;
}

}  // namespace meshwarp
