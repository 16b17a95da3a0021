#pragma once

// Visual-hull reconstruction from three orthogonal silhouettes.
//
// Axis convention:
//   view A looks along +X, image u -> Y, v -> Z  (width ny, height nz)
//   view B looks along +Y, image u -> X, v -> Z  (width nx, height nz)
//   view C looks along +Z, image u -> X, v -> Y  (width nx, height ny)

#include "ocular/geom.hpp"

#include <array>

namespace ocular {

struct TriProjection {
  Silhouette a;
  Silhouette b;
  Silhouette c;
  double pitch;
  /// World position of the corner of voxel (0, 0, 0).
  Vec3 origin = Vec3::Zero();

  int nx() const { return b.width(); }
  int ny() const { return a.width(); }
  int nz() const { return a.height(); }
};

/// Throws DimensionMismatch unless pitches agree (1e-9 relative), the views
/// carry the right tags and shared extents match.
void validate(const TriProjection& tp);

struct ConsistencyReport {
  bool consistent = true;
  /// Per view (A, B, C): input pixels not covered by the reprojection divided
  /// by input pixels. An empty input silhouette has deficit 0.
  std::array<double, 3> deficit{0.0, 0.0, 0.0};

  double max_deficit() const;
};

/// Voxel (x, y, z) is occupied iff A(y, z), B(x, z) and C(x, y) are all set.
/// An empty result is not an error.
VoxelGrid intersect_extrusions(const TriProjection& tp);

/// Reprojects `grid` along X, Y and Z and compares against the input views.
/// The grid may be any sub-box of the TriProjection lattice (for instance a
/// cropped component); it must lie on the same lattice and inside it.
ConsistencyReport reproject_check(const VoxelGrid& grid, const TriProjection& tp);

struct Reconstruction {
  VoxelGrid solid;  ///< largest 26-connected component, cropped
  ConsistencyReport report;
  int component_count = 0;
};

/// Intersection followed by largest-component selection. Throws
/// EmptyIntersection when a view is empty or the hull has no voxels.
Reconstruction reconstruct_particle(const TriProjection& tp);

}  // namespace ocular
