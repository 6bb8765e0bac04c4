#include "lt3d/simplify.hpp"

#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "lt3d/error.hpp"
#include "lt3d/json_io.hpp"

namespace lt3d {
namespace {

struct Pair {
  int a = 0;
  int b = 0;
  bool alive = true;
  int version = 0;
  Contraction target;
};

using HeapEntry = std::tuple<double, std::size_t, int>;  // cost, pair, version

Eigen::Vector3d face_normal(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return (b - a).cross(c - a);
}

}  // namespace

std::vector<Quadric> vertex_quadrics(const TriangleMesh& mesh) {
  std::vector<Quadric> q(static_cast<std::size_t>(mesh.vertex_count()), Quadric::Zero());
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.col(mesh.faces(0, f));
    const Eigen::Vector3d n = face_normal(a, mesh.vertices.col(mesh.faces(1, f)), mesh.vertices.col(mesh.faces(2, f)));
    const double len = n.norm();
    if (!(len > 0)) continue;
    Eigen::Vector4d p;
    p << n / len, -n.dot(a) / len;
    const Quadric k = p * p.transpose();
    for (int c = 0; c < 3; ++c) q[mesh.faces(c, f)] += k;
  }
  return q;
}

Contraction optimal_position(const Quadric& q1, const Quadric& q2, const Eigen::Vector3d& v1,
                             const Eigen::Vector3d& v2) {
  const Quadric q = q1 + q2;
  std::vector<Eigen::Vector3d> candidates;
  const Eigen::Matrix3d a = q.topLeftCorner<3, 3>();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) > 0 && sv(2) > 1e-9 * sv(0)) {
    candidates.push_back(svd.solve(-q.topRightCorner<3, 1>()));
  } else if (sv(0) > 0) {
    // Rank-deficient: the minimisers form a line or plane; take the one nearest the midpoint.
    const Eigen::Vector3d mid = 0.5 * (v1 + v2);
    svd.setThreshold(1e-9);
    candidates.push_back(mid + svd.solve(-q.topRightCorner<3, 1>() - a * mid));
  }
  candidates.push_back(v1);
  candidates.push_back(v2);
  candidates.push_back(0.5 * (v1 + v2));
  Contraction best{candidates[0], quadric_error(q, candidates[0])};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double cost = quadric_error(q, candidates[i]);
    if (cost < best.cost) best = {candidates[i], cost};
  }
  best.cost = std::max(best.cost, 0.0);
  return best;
}

TriangleMesh simplify(const TriangleMesh& mesh, double quality, const SimplifyOptions& options) {
  if (!(quality > 0 && quality <= 1)) throw Error(ErrorCode::kInvalidArgument, "quality must lie in (0, 1]");
  validate_mesh(mesh);
  const Eigen::Index face_total = mesh.face_count();
  const double target = quality * double(face_total);
  if (double(face_total) <= target) return mesh;

  const int nv = static_cast<int>(mesh.vertex_count());
  Eigen::Matrix3Xd pos = mesh.vertices;
  std::vector<Quadric> quadrics = vertex_quadrics(mesh);
  Eigen::Matrix3Xi faces = mesh.faces;
  std::vector<bool> face_alive(static_cast<std::size_t>(face_total), true);
  std::vector<std::set<int>> vertex_faces(static_cast<std::size_t>(nv));
  for (Eigen::Index f = 0; f < face_total; ++f) {
    for (int c = 0; c < 3; ++c) vertex_faces[faces(c, f)].insert(static_cast<int>(f));
  }

  // Candidate pairs: every edge, plus close non-edge pairs when epsilon > 0.
  std::map<std::pair<int, int>, std::size_t> pair_index;
  std::vector<Pair> pairs;
  auto add_pair = [&](int a, int b) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (pair_index.emplace(std::pair{a, b}, pairs.size()).second) pairs.push_back(Pair{a, b, true, 0, {}});
  };
  for (Eigen::Index f = 0; f < face_total; ++f) {
    for (int c = 0; c < 3; ++c) add_pair(faces(c, f), faces((c + 1) % 3, f));
  }
  if (options.epsilon > 0) {
    std::unordered_map<long long, std::vector<int>> grid;
    auto key = [&](const Eigen::Vector3i& c) { return (c.x() * 73856093LL) ^ (c.y() * 19349663LL) ^ (c.z() * 83492791LL); };
    auto cell = [&](int v) { return Eigen::Vector3i((pos.col(v) / options.epsilon).array().floor().cast<int>()); };
    for (int v = 0; v < nv; ++v) grid[key(cell(v))].push_back(v);
    for (int v = 0; v < nv; ++v) {
      const Eigen::Vector3i c = cell(v);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = grid.find(key(c + Eigen::Vector3i(dx, dy, dz)));
            if (it == grid.end()) continue;
            for (int w : it->second) {
              if (w > v && (pos.col(v) - pos.col(w)).norm() < options.epsilon) add_pair(v, w);
            }
          }
    }
  }
  std::vector<std::vector<std::size_t>> vertex_pairs(static_cast<std::size_t>(nv));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    vertex_pairs[pairs[i].a].push_back(i);
    vertex_pairs[pairs[i].b].push_back(i);
  }

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
  auto evaluate = [&](std::size_t i) {
    Pair& p = pairs[i];
    p.target = optimal_position(quadrics[p.a], quadrics[p.b], pos.col(p.a), pos.col(p.b));
    heap.emplace(p.target.cost, i, ++p.version);
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) evaluate(i);

  // Moving v1 and v2 to x must not turn any surviving face over.
  auto flips = [&](int v1, int v2, const Eigen::Vector3d& x) {
    for (int v : {v1, v2}) {
      for (int f : vertex_faces[v]) {
        Eigen::Vector3i idx = faces.col(f);
        const bool has1 = (idx.array() == v1).any(), has2 = (idx.array() == v2).any();
        if (has1 && has2) continue;  // removed by the collapse
        const Eigen::Vector3d before = face_normal(pos.col(idx(0)), pos.col(idx(1)), pos.col(idx(2)));
        Eigen::Matrix3d moved;
        for (int c = 0; c < 3; ++c) moved.col(c) = (idx(c) == v1 || idx(c) == v2) ? x : Eigen::Vector3d(pos.col(idx(c)));
        const Eigen::Vector3d after = face_normal(moved.col(0), moved.col(1), moved.col(2));
        if (before.dot(after) < 0) return true;
      }
    }
    return false;
  };

  Eigen::Index live_faces = face_total;
  std::vector<bool> vertex_alive(static_cast<std::size_t>(nv), true);
  while (double(live_faces) > target && !heap.empty()) {
    const auto [cost, i, version] = heap.top();
    heap.pop();
    Pair& p = pairs[i];
    if (!p.alive || version != p.version) continue;
    const int v1 = p.a, v2 = p.b;
    if (flips(v1, v2, p.target.position)) continue;

    pos.col(v1) = p.target.position;
    quadrics[v1] += quadrics[v2];
    vertex_alive[v2] = false;
    p.alive = false;

    for (int f : vertex_faces[v2]) {
      for (int c = 0; c < 3; ++c) {
        if (faces(c, f) == v2) faces(c, f) = v1;
      }
      const Eigen::Vector3i idx = faces.col(f);
      if (idx(0) == idx(1) || idx(1) == idx(2) || idx(0) == idx(2)) {
        if (face_alive[f]) {
          face_alive[f] = false;
          --live_faces;
        }
        for (int c = 0; c < 3; ++c) {
          if (idx(c) != v2) vertex_faces[idx(c)].erase(f);
        }
      } else {
        vertex_faces[v1].insert(f);
      }
    }
    vertex_faces[v2].clear();

    for (std::size_t j : vertex_pairs[v2]) {
      Pair& q = pairs[j];
      if (!q.alive) continue;
      int other = q.a == v2 ? q.b : q.a;
      if (other == v1) {
        q.alive = false;
        continue;
      }
      const auto key = std::pair{std::min(v1, other), std::max(v1, other)};
      auto it = pair_index.find(key);
      if (it != pair_index.end() && pairs[it->second].alive) {
        q.alive = false;  // v1 already pairs with `other`
        continue;
      }
      pair_index[key] = j;
      q.a = key.first;
      q.b = key.second;
      vertex_pairs[v1].push_back(j);
    }
    vertex_pairs[v2].clear();
    for (std::size_t j : vertex_pairs[v1]) {
      if (pairs[j].alive) evaluate(j);
    }
  }

  // Compact: keep vertices referenced by surviving faces.
  std::vector<int> remap(static_cast<std::size_t>(nv), -1);
  std::vector<int> kept;
  std::vector<int> kept_faces;
  for (Eigen::Index f = 0; f < face_total; ++f) {
    if (!face_alive[f]) continue;
    kept_faces.push_back(static_cast<int>(f));
    for (int c = 0; c < 3; ++c) {
      int& r = remap[faces(c, f)];
      if (r < 0) {
        r = static_cast<int>(kept.size());
        kept.push_back(faces(c, f));
      }
    }
  }
  TriangleMesh out;
  out.vertices.resize(3, static_cast<Eigen::Index>(kept.size()));
  if (mesh.has_colors()) out.colors.resize(4, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.vertices.col(static_cast<Eigen::Index>(i)) = pos.col(kept[i]);
    if (mesh.has_colors()) out.colors.col(static_cast<Eigen::Index>(i)) = mesh.colors.col(kept[i]);
  }
  out.faces.resize(3, static_cast<Eigen::Index>(kept_faces.size()));
  for (std::size_t i = 0; i < kept_faces.size(); ++i) {
    for (int c = 0; c < 3; ++c) out.faces(c, static_cast<Eigen::Index>(i)) = remap[faces(c, kept_faces[i])];
  }
  if (mesh.has_normals() && out.face_count() > 0) out = recompute_normals(std::move(out));
  return out;
}

TriangleMesh simplify_to_vertex_cap(const TriangleMesh& mesh, std::size_t cap, const SimplifyOptions& options) {
  if (cap < 3) throw Error(ErrorCode::kInvalidArgument, "vertex cap too small");
  if (static_cast<std::size_t>(mesh.vertex_count()) <= cap) return mesh;
  double quality = std::min(1.0, double(cap) / double(mesh.vertex_count()));
  for (;;) {
    TriangleMesh out = simplify(mesh, quality, options);
    if (static_cast<std::size_t>(out.vertex_count()) <= cap) return out;
    quality *= 0.9;
    if (quality < 1e-9) throw Error(ErrorCode::kSolverFailure, "cannot reach the vertex cap");
  }
}

std::string collider_json(const TriangleMesh& mesh) {
  Json faces = Json::array();
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) faces.push_back({mesh.faces(0, f), mesh.faces(1, f), mesh.faces(2, f)});
  return Json{{"vertices", points_to_json(mesh.vertices)}, {"faces", faces}}.dump();
}

TriangleMesh parse_collider_json(std::string_view text) {
  TriangleMesh mesh;
  try {
    const Json doc = Json::parse(text);
    mesh.vertices = points_from_json(doc.at("vertices"));
    const Json& faces = doc.at("faces");
    mesh.faces.resize(3, static_cast<Eigen::Index>(faces.size()));
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].size() != 3) throw Error(ErrorCode::kSchema, "collider faces must be triangles");
      for (int c = 0; c < 3; ++c) mesh.faces(c, static_cast<Eigen::Index>(f)) = faces[f][c].get<int>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("collider: ") + e.what());
  }
  validate_mesh(mesh);
  return mesh;
}

std::filesystem::path collider_sidecar_path(const std::filesystem::path& mesh_path) {
  return std::filesystem::path(mesh_path.string() + ".collider.json");
}

}  // namespace lt3d
