#include "ocular/reconstruct.hpp"

#include "ocular/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ocular {

double ConsistencyReport::max_deficit() const {
  return *std::max_element(deficit.begin(), deficit.end());
}

void validate(const TriProjection& tp) {
  auto same = [&](double p) { return std::abs(p - tp.pitch) <= 1e-9 * tp.pitch; };
  if (!(tp.pitch > 0.0) || !same(tp.a.pitch()) || !same(tp.b.pitch()) || !same(tp.c.pitch())) {
    throw Error(ErrorKind::DimensionMismatch, "silhouette pitches differ");
  }
  if (tp.a.view() != View::A || tp.b.view() != View::B || tp.c.view() != View::C) {
    throw Error(ErrorKind::DimensionMismatch, "silhouettes are not tagged A, B, C");
  }
  // Y from A and C, Z from A and B, X from B and C.
  if (tp.a.width() != tp.c.height() || tp.a.height() != tp.b.height() ||
      tp.b.width() != tp.c.width()) {
    throw Error(ErrorKind::DimensionMismatch,
                "incompatible extents: A " + std::to_string(tp.a.width()) + "x" +
                    std::to_string(tp.a.height()) + ", B " + std::to_string(tp.b.width()) + "x" +
                    std::to_string(tp.b.height()) + ", C " + std::to_string(tp.c.width()) + "x" +
                    std::to_string(tp.c.height()));
  }
}

VoxelGrid intersect_extrusions(const TriProjection& tp) {
  validate(tp);
  const int nx = tp.nx(), ny = tp.ny(), nz = tp.nz();
  VoxelGrid g(nx, ny, nz, tp.pitch, tp.origin);
  auto data = g.data();
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      if (!tp.a.at(y, z)) continue;
      std::size_t i = g.index(0, y, z);
      for (int x = 0; x < nx; ++x, ++i) data[i] = (tp.b.at(x, z) && tp.c.at(x, y)) ? 1 : 0;
    }
  return g;
}

ConsistencyReport reproject_check(const VoxelGrid& grid, const TriProjection& tp) {
  validate(tp);
  if (std::abs(grid.pitch() - tp.pitch) > 1e-9 * tp.pitch) {
    throw Error(ErrorKind::DimensionMismatch, "grid pitch differs from silhouette pitch");
  }
  const Vec3 off_f = (grid.origin() - tp.origin) / tp.pitch;
  const std::array<int, 3> off{static_cast<int>(std::lround(off_f.x())),
                               static_cast<int>(std::lround(off_f.y())),
                               static_cast<int>(std::lround(off_f.z()))};
  if ((off_f - Vec3(off[0], off[1], off[2])).cwiseAbs().maxCoeff() > 1e-6 || off[0] < 0 ||
      off[1] < 0 || off[2] < 0 || off[0] + grid.nx() > tp.nx() || off[1] + grid.ny() > tp.ny() ||
      off[2] + grid.nz() > tp.nz()) {
    throw Error(ErrorKind::DimensionMismatch, "grid does not lie inside the projection lattice");
  }

  Silhouette pa(tp.a.width(), tp.a.height(), tp.pitch, View::A);
  Silhouette pb(tp.b.width(), tp.b.height(), tp.pitch, View::B);
  Silhouette pc(tp.c.width(), tp.c.height(), tp.pitch, View::C);
  for (int z = 0; z < grid.nz(); ++z)
    for (int y = 0; y < grid.ny(); ++y)
      for (int x = 0; x < grid.nx(); ++x) {
        if (!grid.at(x, y, z)) continue;
        const int wx = x + off[0], wy = y + off[1], wz = z + off[2];
        pa.set(wy, wz);
        pb.set(wx, wz);
        pc.set(wx, wy);
      }

  ConsistencyReport rep;
  const std::array<const Silhouette*, 3> in{&tp.a, &tp.b, &tp.c};
  const std::array<const Silhouette*, 3> re{&pa, &pb, &pc};
  for (int k = 0; k < 3; ++k) {
    std::size_t total = 0, missed = 0;
    const auto mi = in[k]->mask();
    const auto mr = re[k]->mask();
    for (std::size_t i = 0; i < mi.size(); ++i) {
      if (!mi[i]) continue;
      ++total;
      if (!mr[i]) ++missed;
    }
    rep.deficit[k] = total == 0 ? 0.0 : static_cast<double>(missed) / static_cast<double>(total);
  }
  rep.consistent = rep.max_deficit() == 0.0;
  return rep;
}

Reconstruction reconstruct_particle(const TriProjection& tp) {
  validate(tp);
  if (tp.a.count() == 0 || tp.b.count() == 0 || tp.c.count() == 0) {
    throw Error(ErrorKind::EmptyIntersection, "a view has no foreground pixels");
  }
  const VoxelGrid hull = intersect_extrusions(tp);
  auto comps = connected_components_3d(hull, 26);
  if (comps.empty()) {
    throw Error(ErrorKind::EmptyIntersection, "silhouette extrusions do not intersect");
  }
  const int n = static_cast<int>(comps.size());
  VoxelGrid solid = std::move(comps.front());
  ConsistencyReport report = reproject_check(solid, tp);
  return Reconstruction{std::move(solid), report, n};
}

}  // namespace ocular
