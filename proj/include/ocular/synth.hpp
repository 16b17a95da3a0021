#pragma once

// Analytic solids, centre-sampled voxelization and orthographic rendering.
// These are the ground truth for most tests and for the `simulate` command.

#include "ocular/frame.hpp"
#include "ocular/geom.hpp"
#include "ocular/reconstruct.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ocular {

enum class SolidKind { Sphere, Ellipsoid, Box, Superellipsoid, LPrism };

std::string_view to_string(SolidKind kind);
SolidKind solid_kind_from_string(std::string_view s);

/// Body-frame parameters:
///   sphere          size = (r, r, r)
///   ellipsoid       size = semi-axes (a, b, c)
///   box             size = full edge lengths (w, d, h), centred
///   superellipsoid  size = semi-axes, exponents eps1 (north-south), eps2 (east-west)
///   lprism          size = (w, d, h); the column x > w/2 - notch, y > d/2 - notch
///                   is removed over the full height
/// World point p is inside iff rotation^T (p - translation) is inside the body.
struct AnalyticSolid {
  SolidKind kind = SolidKind::Sphere;
  Vec3 size = Vec3::Ones();
  double eps1 = 1.0;
  double eps2 = 1.0;
  double notch = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static AnalyticSolid sphere(double r);
  static AnalyticSolid ellipsoid(double a, double b, double c);
  static AnalyticSolid box(double w, double d, double h);
  static AnalyticSolid superellipsoid(double a, double b, double c, double eps1, double eps2);
  static AnalyticSolid lprism(double w, double d, double h, double notch);

  AnalyticSolid posed(const Mat3& r, const Vec3& t) const;

  /// Throws DegenerateInput on non-positive sizes or exponents outside [0.2, 2].
  void validate() const;

  bool contains(const Vec3& world) const;
  bool contains_body(const Vec3& body) const;

  /// Half-extents of the body-frame bounding box.
  Vec3 half_extents() const;
  /// World axis-aligned bounds of the posed body box.
  void world_bounds(Vec3& lo, Vec3& hi) const;

  double volume() const;
  /// Body bounding-box edges sorted ascending: (S, I, L) for kinds whose
  /// minimal box is the body box (all of them here).
  std::array<double, 3> dims() const;
};

struct SynthOptions {
  /// Largest allowed lattice extent (voxels) along any axis.
  int max_extent_voxels = 2048;
};

/// Lattice anchored at the world origin: voxel i spans [i, i+1) * pitch.
/// Returns the cropped index range [lo, hi) covering the solid's bounds.
void lattice_range(const AnalyticSolid& solid, double pitch, std::array<int, 3>& lo,
                   std::array<int, 3>& hi, const SynthOptions& opts = {});

/// Occupied iff the voxel centre is inside. The grid covers the solid's world
/// bounds on the origin-anchored lattice.
VoxelGrid voxelize(const AnalyticSolid& solid, double pitch, const SynthOptions& opts = {});

/// Orthographic silhouette over the same lattice window as voxelize(). Without
/// antialiasing it equals project(voxelize(solid), view).
Silhouette render_silhouette(const AnalyticSolid& solid, View view, double pitch,
                             bool antialias = false, const SynthOptions& opts = {});

/// All three silhouettes on a shared lattice window, ready for reconstruction.
TriProjection render_triprojection(const AnalyticSolid& solid, double pitch,
                                   const SynthOptions& opts = {});

// ---------------------------------------------------------------------------
// Transit scenes

struct ScenePart {
  AnalyticSolid solid;  ///< pose at frame 0
  Vec3 velocity = Vec3::Zero();  ///< micrometres per frame
};

struct NoiseModel {
  double sigma = 0.0;
  int salt_specks = 0;  ///< dark 1-px specks per image
};

/// Each view images a window of the world starting at the origin:
///   A: Y in [0, width*pitch), Z in [0, height*pitch)
///   B: X in [0, width*pitch), Z in [0, height*pitch)
///   C: X in [0, width*pitch), Y in [0, height*pitch)
/// and only sees solids inside the window the other two views image along its
/// depth axis (X < width, Y < min(width, height), Z < height), so the region of
/// interest is the same box for all three cameras.
struct Scene {
  std::vector<ScenePart> parts;
  int frames = 1;
  int width = 512;
  int height = 512;
  double pitch = 1.0;
  Axis flow_axis = Axis::Z;
  double frame_interval_us = 1000.0;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

inline constexpr std::uint8_t kBackgroundLevel = 230;
inline constexpr std::uint8_t kObjectLevel = 25;

/// Renders every frame of every view (index 0..frames-1). Throws
/// OverlapDetected if two parts' bounding boxes meet at any frame and
/// DegenerateInput for velocities off the flow axis.
std::array<std::vector<Frame>, 3> compose_transit_scene(const Scene& scene, int threads = 1);

/// JSON scene description; see docs/scene-format.md.
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

/// Writes `<dir>/<V>/<V>_<index:06d>.pgm` for each view.
void write_frames(const std::array<std::vector<Frame>, 3>& frames, const std::filesystem::path& dir);

/// Rotation from intrinsic X-Y-Z Euler angles in degrees.
Mat3 rotation_xyz_deg(double rx, double ry, double rz);

/// Pose for an lprism whose notch none of the three axis views sees clearly:
/// the notch diagonal lies along X, the extrusion axis in the YZ plane at 45
/// degrees. Its visual hull is (nearly) convex.
Mat3 notch_hiding_rotation();

}  // namespace ocular
