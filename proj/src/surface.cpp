#include "ocular/surface.hpp"

#include "ocular/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace ocular {
namespace {

// Six tetrahedra of the Kuhn decomposition; corner bit 0 = +x, 1 = +y, 2 = +z.
constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
                             {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};

class PaddedField {
 public:
  explicit PaddedField(const VoxelGrid& g)
      : px_(g.nx() + 2), py_(g.ny() + 2), pz_(g.nz() + 2),
        occ_(static_cast<std::size_t>(px_) * py_ * pz_, 0) {
    for (int z = 0; z < g.nz(); ++z)
      for (int y = 0; y < g.ny(); ++y)
        for (int x = 0; x < g.nx(); ++x)
          if (g.at(x, y, z)) occ_[idx(x + 1, y + 1, z + 1)] = 1;
    smooth();
  }

  std::size_t idx(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * py_ + y) * px_ + x;
  }
  int px() const { return px_; }
  int py() const { return py_; }
  int pz() const { return pz_; }
  bool occ(std::size_t i) const { return occ_[i] != 0; }
  double smooth_at(std::size_t i) const { return smooth_[i]; }

 private:
  void smooth() {
    std::vector<double> a(occ_.begin(), occ_.end());
    std::vector<double> b(a.size(), 0.0);
    const std::array<int, 3> n{px_, py_, pz_};
    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(px_),
                                            static_cast<std::size_t>(px_) * py_};
    for (int axis = 0; axis < 3; ++axis) {
      for (int z = 0; z < pz_; ++z)
        for (int y = 0; y < py_; ++y)
          for (int x = 0; x < px_; ++x) {
            const std::array<int, 3> c{x, y, z};
            const std::size_t i = idx(x, y, z);
            double v = 0.5 * a[i];
            if (c[axis] > 0) v += 0.25 * a[i - stride[axis]];
            if (c[axis] + 1 < n[axis]) v += 0.25 * a[i + stride[axis]];
            b[i] = v;
          }
      std::swap(a, b);
    }
    smooth_ = std::move(a);
  }

  int px_, py_, pz_;
  std::vector<std::uint8_t> occ_;
  std::vector<double> smooth_;
};

}  // namespace

TriMesh extract_surface(const VoxelGrid& grid) {
  if (grid.occupied_count() == 0) throw Error(ErrorKind::EmptyGrid, "no occupied voxels");

  const PaddedField field(grid);
  const double pitch = grid.pitch();
  // Padded sample (i, j, k) is the centre of voxel (i-1, j-1, k-1).
  const Vec3 base = grid.origin() - 0.5 * pitch * Vec3::Ones();

  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  edge_vertex.reserve(grid.occupied_count());

  std::array<std::size_t, 8> corner_idx{};
  std::array<Vec3, 8> corner_pos{};
  std::array<bool, 8> corner_in{};

  auto sample_pos = [&](int x, int y, int z) { return Vec3(base + pitch * Vec3(x, y, z)); };

  auto edge_point = [&](int ca, int cb) -> int {
    // ca is the lower corner of the edge; cb dominates it bitwise.
    const std::uint64_t key = static_cast<std::uint64_t>(corner_idx[ca]) * 7 +
                              static_cast<std::uint64_t>((cb ^ ca) - 1);
    auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<int>(verts.size()));
    if (!inserted) return it->second;
    const int in = corner_in[ca] ? ca : cb;
    const int out = corner_in[ca] ? cb : ca;
    const double s_in = field.smooth_at(corner_idx[in]);
    const double s_out = field.smooth_at(corner_idx[out]);
    double t = 0.5;
    if (s_in > 0.5 && s_out < 0.5) t = std::clamp((s_in - 0.5) / (s_in - s_out), 0.02, 0.98);
    verts.push_back(corner_pos[in] + t * (corner_pos[out] - corner_pos[in]));
    return it->second;
  };

  auto emit = [&](std::array<int, 3> tri, const Vec3& inside_c, const Vec3& outside_c) {
    const Vec3 n = (verts[tri[1]] - verts[tri[0]]).cross(verts[tri[2]] - verts[tri[0]]);
    if (n.dot(outside_c - inside_c) < 0.0) std::swap(tri[1], tri[2]);
    tris.push_back(tri);
  };

  for (int z = 0; z + 1 < field.pz(); ++z)
    for (int y = 0; y + 1 < field.py(); ++y)
      for (int x = 0; x + 1 < field.px(); ++x) {
        int n_in = 0;
        for (int c = 0; c < 8; ++c) {
          const int cx = x + (c & 1), cy = y + ((c >> 1) & 1), cz = z + ((c >> 2) & 1);
          corner_idx[c] = field.idx(cx, cy, cz);
          corner_in[c] = field.occ(corner_idx[c]);
          n_in += corner_in[c] ? 1 : 0;
        }
        if (n_in == 0 || n_in == 8) continue;
        for (int c = 0; c < 8; ++c)
          corner_pos[c] = sample_pos(x + (c & 1), y + ((c >> 1) & 1), z + ((c >> 2) & 1));

        for (const auto& tet : kTets) {
          std::array<int, 4> ins{}, outs{};
          int ni = 0, no = 0;
          for (int k = 0; k < 4; ++k) {
            if (corner_in[tet[k]]) ins[ni++] = tet[k];
            else outs[no++] = tet[k];
          }
          if (ni == 0 || no == 0) continue;
          // Tet vertices are listed in dominance order, so min/max gives the
          // lower/upper corner of every edge.
          auto ep = [&](int a, int b) { return edge_point(std::min(a, b), std::max(a, b)); };
          Vec3 ci = Vec3::Zero(), co = Vec3::Zero();
          for (int k = 0; k < ni; ++k) ci += corner_pos[ins[k]];
          for (int k = 0; k < no; ++k) co += corner_pos[outs[k]];
          ci /= ni;
          co /= no;
          if (ni == 1) {
            emit({ep(ins[0], outs[0]), ep(ins[0], outs[1]), ep(ins[0], outs[2])}, ci, co);
          } else if (ni == 3) {
            emit({ep(outs[0], ins[0]), ep(outs[0], ins[1]), ep(outs[0], ins[2])}, ci, co);
          } else {
            const int q0 = ep(ins[0], outs[0]);
            const int q1 = ep(ins[0], outs[1]);
            const int q2 = ep(ins[1], outs[1]);
            const int q3 = ep(ins[1], outs[0]);
            emit({q0, q1, q2}, ci, co);
            emit({q0, q2, q3}, ci, co);
          }
        }
      }

  return TriMesh(std::move(verts), std::move(tris));
}

std::size_t surface_voxel_count(const VoxelGrid& grid) {
  std::size_t count = 0;
  constexpr int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < grid.nz(); ++z)
    for (int y = 0; y < grid.ny(); ++y)
      for (int x = 0; x < grid.nx(); ++x) {
        if (!grid.at(x, y, z)) continue;
        for (const auto& o : d) {
          const int qx = x + o[0], qy = y + o[1], qz = z + o[2];
          if (!grid.in_bounds(qx, qy, qz) || !grid.at(qx, qy, qz)) {
            ++count;
            break;
          }
        }
      }
  return count;
}

}  // namespace ocular
