#pragma once

// Size and shape measurement of a single particle solid.

#include "ocular/geom.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace ocular {

enum class ZinggClass { Compact, Flat, Elongated, Bladed };

std::string_view to_string(ZinggClass c);
ZinggClass zingg_class_from_string(std::string_view s);

enum class SourceKind { Reconstructed, VoxelImport };

std::string_view to_string(SourceKind s);
SourceKind source_kind_from_string(std::string_view s);

/// Classical Zingg boundary between compact and non-compact forms.
inline constexpr double kZinggThreshold = 2.0 / 3.0;

/// Wadell values above this are flagged as discretisation artefacts.
inline constexpr double kWadellFlagLimit = 1.02;
/// Convexity values above this are flagged as discretisation artefacts.
inline constexpr double kConvexityFlagLimit = 1.001;

struct ShapeIndices {
  double elongation = 0.0;  // I / L
  double flatness = 0.0;    // S / I
  ZinggClass zingg = ZinggClass::Compact;
  double sphericity_wadell = 0.0;
  double sphericity_intercept = 0.0;
  double convexity = 0.0;
};

struct ParticleRecord {
  std::string particle_id;
  std::string run_id;
  SourceKind source = SourceKind::Reconstructed;
  double S = 0.0;
  double I = 0.0;
  double L = 0.0;
  double volume = 0.0;
  double surface_area = 0.0;
  ShapeIndices indices;
  std::optional<int> frame_ref;
  double consistency_deficit_max = 0.0;

  // Quality metrics, not serialised.
  bool wadell_flag = false;
  bool convexity_flag = false;
  double mesh_volume_discrepancy = 0.0;  ///< (mesh - voxel) / voxel volume
  Vec3 centroid = Vec3::Zero();
};

struct BoundingBoxOptions {
  /// Largest hull facets used as seed orientations.
  int max_facet_candidates = 256;
  /// Seed orientations refined by local search.
  int refine_candidates = 8;
  /// Grid step of the global orientation scan (degrees); 0 disables it.
  double coarse_step_deg = 10.0;
  /// Local search stops when the rotation step falls below this (radians).
  double angular_tolerance = 1e-4;
};

/// Minimal-volume oriented box around the convex hull of the mesh vertices.
///
/// Seeds come from hull facet normals (each completed by a rotating-calipers
/// minimum-area rectangle in the facet plane), the principal axes and the
/// world axes, and a coarse orientation grid. The best seeds are then refined by a compass search over small
/// rotations. Throws DegenerateInput for coplanar vertex sets.
OrientedBox min_bounding_box(const TriMesh& mesh, const BoundingBoxOptions& options = {});

/// Smallest box containing `points` whose axes are the columns of `frame`.
/// Dimensions are not sorted.
OrientedBox box_in_frame(std::span<const Vec3> points, const Mat3& frame);

ZinggClass zingg_classify(double elongation, double flatness,
                          double threshold = kZinggThreshold);

/// pi^(1/3) (6V)^(2/3) / A: area of the equal-volume sphere over the actual area.
double sphericity_wadell(double volume, double surface_area);

/// cbrt(I S / L^2). Requires 0 < S <= I <= L.
double sphericity_intercept(double S, double I, double L);

/// Mesh volume over the volume of its convex hull.
double convexity(const TriMesh& mesh);

/// Convexity of a voxel solid: occupied voxels over lattice voxels whose
/// centres fall inside the convex hull of the occupied centres. Exactly 1 for
/// any centre-sampled convex body, unlike the mesh ratio, whose hull picks up
/// the staircase of obliquely sampled surfaces.
double lattice_convexity(const VoxelGrid& solid);

/// Full per-particle measurement of a voxel solid. Volume comes from the voxel
/// count; surface area and bounding box from the extracted surface; convexity
/// from lattice_convexity().
/// Throws DegenerateInput when fewer than four non-coplanar surface voxels
/// exist (single voxels, flat sheets).
ParticleRecord measure(const VoxelGrid& solid, std::string particle_id, std::string run_id,
                       SourceKind source);

}  // namespace ocular
