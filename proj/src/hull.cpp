#include "ocular/hull.hpp"

#include "ocular/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace ocular {
namespace {

struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};  // neighbour across edge v[i] -> v[i+1]
  Vec3 n = Vec3::Zero();
  double d = 0.0;
  std::vector<int> outside;
  bool alive = true;
};

struct HorizonEdge {
  int a, b;
  int outer_face;
};

class QuickHull {
 public:
  explicit QuickHull(std::span<const Vec3> pts) : p_(pts) {}

  TriMesh run() {
    if (p_.size() < 4) throw Error(ErrorKind::DegenerateInput, "convex hull needs >= 4 points");
    Vec3 lo = p_[0], hi = p_[0];
    for (const auto& q : p_) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const double diag = (hi - lo).norm();
    eps_ = 1e-12 * std::max(diag, 1e-300);
    if (diag == 0.0) throw Error(ErrorKind::DegenerateInput, "all points coincide");

    build_simplex();
    expand();
    return collect();
  }

 private:
  double dist(const Face& f, int pi) const { return f.n.dot(p_[pi]) - f.d; }

  int make_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    const Vec3 n = (p_[b] - p_[a]).cross(p_[c] - p_[a]);
    const double len = n.norm();
    f.n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    f.d = f.n.dot(p_[a]);
    faces_.push_back(std::move(f));
    return static_cast<int>(faces_.size()) - 1;
  }

  void build_simplex() {
    const int n = static_cast<int>(p_.size());
    std::array<int, 6> ext{0, 0, 0, 0, 0, 0};
    for (int i = 1; i < n; ++i) {
      for (int ax = 0; ax < 3; ++ax) {
        if (p_[i][ax] < p_[ext[2 * ax]][ax]) ext[2 * ax] = i;
        if (p_[i][ax] > p_[ext[2 * ax + 1]][ax]) ext[2 * ax + 1] = i;
      }
    }
    int i0 = ext[0], i1 = ext[1];
    double best = -1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        const double dd = (p_[ext[a]] - p_[ext[b]]).squaredNorm();
        if (dd > best) {
          best = dd;
          i0 = ext[a];
          i1 = ext[b];
        }
      }
    if (std::sqrt(best) <= eps_) throw Error(ErrorKind::DegenerateInput, "points coincide");

    const Vec3 dir = (p_[i1] - p_[i0]).normalized();
    int i2 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      const Vec3 w = p_[i] - p_[i0];
      const double dd = (w - w.dot(dir) * dir).norm();
      if (dd > best) {
        best = dd;
        i2 = i;
      }
    }
    if (i2 < 0) throw Error(ErrorKind::DegenerateInput, "points are collinear");

    const Vec3 pn = (p_[i1] - p_[i0]).cross(p_[i2] - p_[i0]).normalized();
    int i3 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      const double dd = std::abs(pn.dot(p_[i] - p_[i0]));
      if (dd > best) {
        best = dd;
        i3 = i;
      }
    }
    if (i3 < 0) throw Error(ErrorKind::DegenerateInput, "points are coplanar");

    // Orient every face so the opposite simplex vertex lies below it.
    const std::array<int, 4> s{i0, i1, i2, i3};
    const std::array<std::array<int, 4>, 4> tri{{{0, 1, 2, 3}, {0, 3, 1, 2}, {0, 2, 3, 1},
                                                 {1, 3, 2, 0}}};
    for (const auto& t : tri) {
      int a = s[t[0]], b = s[t[1]], c = s[t[2]];
      const Vec3 nn = (p_[b] - p_[a]).cross(p_[c] - p_[a]);
      if (nn.dot(p_[s[t[3]]] - p_[a]) > 0.0) std::swap(b, c);
      make_face(a, b, c);
    }
    link_all();

    for (int i = 0; i < n; ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      int owner = -1;
      double far = eps_;
      for (int f = 0; f < 4; ++f) {
        const double dd = dist(faces_[f], i);
        if (dd > far) {
          far = dd;
          owner = f;
        }
      }
      if (owner >= 0) faces_[owner].outside.push_back(i);
    }
  }

  void link_all() {
    std::unordered_map<std::uint64_t, std::pair<int, int>> edge_owner;
    auto key = [](int a, int b) {
      return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
             static_cast<std::uint32_t>(b);
    };
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f)
      for (int e = 0; e < 3; ++e) edge_owner[key(faces_[f].v[e], faces_[f].v[(e + 1) % 3])] = {f, e};
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f)
      for (int e = 0; e < 3; ++e) {
        auto it = edge_owner.find(key(faces_[f].v[(e + 1) % 3], faces_[f].v[e]));
        faces_[f].nb[e] = it->second.first;
      }
  }

  void expand() {
    std::deque<int> work;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f)
      if (!faces_[f].outside.empty()) work.push_back(f);

    std::vector<int> visible;
    std::vector<HorizonEdge> horizon;
    std::vector<char> mark;

    while (!work.empty()) {
      const int fi = work.front();
      work.pop_front();
      if (!faces_[fi].alive || faces_[fi].outside.empty()) continue;

      auto& out = faces_[fi].outside;
      const auto eye_it = std::max_element(out.begin(), out.end(), [&](int a, int b) {
        return dist(faces_[fi], a) < dist(faces_[fi], b);
      });
      const int eye = *eye_it;

      // Visible region by flood fill, horizon recorded in traversal order.
      mark.assign(faces_.size(), 0);
      visible.clear();
      horizon.clear();
      std::vector<int> stack{fi};
      mark[fi] = 1;
      while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        visible.push_back(f);
        for (int e = 0; e < 3; ++e) {
          const int g = faces_[f].nb[e];
          if (mark[g] == 1) continue;
          if (mark[g] == 0 && dist(faces_[g], eye) > eps_) {
            mark[g] = 1;
            stack.push_back(g);
          } else {
            mark[g] = 2;
            horizon.push_back({faces_[f].v[e], faces_[f].v[(e + 1) % 3], g});
          }
        }
      }
      // A face can be marked "not visible" from one side and then be reached
      // again; drop horizon edges whose outer face turned out visible.
      std::erase_if(horizon, [&](const HorizonEdge& h) { return mark[h.outer_face] == 1; });

      // The horizon must be a simple loop: each vertex starts exactly one edge.
      std::unordered_map<int, int> start_of, end_of;
      bool simple = true;
      for (int h = 0; h < static_cast<int>(horizon.size()); ++h) {
        simple &= start_of.emplace(horizon[h].a, h).second;
        simple &= end_of.emplace(horizon[h].b, h).second;
      }
      if (!simple || horizon.size() < 3) {
        // Numerically ambiguous apex; the point is within tolerance of the hull.
        out.erase(eye_it);
        if (!out.empty()) work.push_back(fi);
        continue;
      }

      const int first_new = static_cast<int>(faces_.size());
      for (const auto& h : horizon) {
        const int nf = make_face(h.a, h.b, eye);
        faces_[nf].nb[0] = h.outer_face;
        auto& outer = faces_[h.outer_face];
        for (int e = 0; e < 3; ++e)
          if (outer.v[e] == h.b && outer.v[(e + 1) % 3] == h.a) outer.nb[e] = nf;
      }
      for (int h = 0; h < static_cast<int>(horizon.size()); ++h) {
        auto& f = faces_[first_new + h];
        f.nb[1] = first_new + start_of.at(horizon[h].b);
        f.nb[2] = first_new + end_of.at(horizon[h].a);
      }

      std::vector<int> orphans;
      for (int f : visible) {
        faces_[f].alive = false;
        for (int q : faces_[f].outside)
          if (q != eye) orphans.push_back(q);
        faces_[f].outside.clear();
        faces_[f].outside.shrink_to_fit();
      }
      const int last_new = static_cast<int>(faces_.size());
      for (int q : orphans) {
        for (int f = first_new; f < last_new; ++f) {
          if (dist(faces_[f], q) > eps_) {
            faces_[f].outside.push_back(q);
            break;
          }
        }
      }
      for (int f = first_new; f < last_new; ++f)
        if (!faces_[f].outside.empty()) work.push_back(f);
    }
  }

  TriMesh collect() const {
    std::vector<int> used;
    for (const auto& f : faces_)
      if (f.alive) used.insert(used.end(), f.v.begin(), f.v.end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::unordered_map<int, int> remap;
    std::vector<Vec3> verts;
    verts.reserve(used.size());
    for (int u : used) {
      remap.emplace(u, static_cast<int>(verts.size()));
      verts.push_back(p_[u]);
    }
    std::vector<Triangle> tris;
    for (const auto& f : faces_)
      if (f.alive) tris.push_back({remap.at(f.v[0]), remap.at(f.v[1]), remap.at(f.v[2])});
    return TriMesh(std::move(verts), std::move(tris));
  }

  std::span<const Vec3> p_;
  double eps_ = 0.0;
  std::vector<Face> faces_;
};

}  // namespace

TriMesh convex_hull(std::span<const Vec3> points) { return QuickHull(points).run(); }

std::vector<HullFacet> hull_facets(const TriMesh& hull) {
  const auto& v = hull.vertices();
  const auto& t = hull.triangles();
  const int nt = static_cast<int>(t.size());

  std::vector<Vec3> vec_area(nt);
  std::vector<Vec3> unit(nt);
  for (int i = 0; i < nt; ++i) {
    vec_area[i] = 0.5 * (v[t[i][1]] - v[t[i][0]]).cross(v[t[i][2]] - v[t[i][0]]);
    unit[i] = vec_area[i].normalized();
  }

  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::unordered_map<std::uint64_t, int> edge_tri;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (int i = 0; i < nt; ++i)
    for (int e = 0; e < 3; ++e) edge_tri[key(t[i][e], t[i][(e + 1) % 3])] = i;
  for (int i = 0; i < nt; ++i)
    for (int e = 0; e < 3; ++e) {
      auto it = edge_tri.find(key(t[i][(e + 1) % 3], t[i][e]));
      if (it == edge_tri.end()) continue;
      const int j = it->second;
      if (unit[i].dot(unit[j]) > 1.0 - 1e-10) parent[find(i)] = find(j);
    }

  std::unordered_map<int, Vec3> sum;
  for (int i = 0; i < nt; ++i) {
    auto [it, inserted] = sum.try_emplace(find(i), Vec3::Zero());
    it->second += vec_area[i];
  }
  std::vector<HullFacet> facets;
  facets.reserve(sum.size());
  for (const auto& [root, s] : sum) {
    const double a = s.norm();
    if (a > 0.0) facets.push_back({s / a, a});
  }
  std::sort(facets.begin(), facets.end(), [](const HullFacet& a, const HullFacet& b) {
    if (a.area != b.area) return a.area > b.area;
    return std::lexicographical_compare(a.normal.data(), a.normal.data() + 3, b.normal.data(),
                                        b.normal.data() + 3);
  });
  return facets;
}

}  // namespace ocular
