#pragma once

// Core geometric types shared by every stage of the pipeline: 2D silhouettes,
// 3D occupancy grids and triangle meshes, all in physical units (micrometres).

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ocular {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Camera views. A looks along +X, B along +Y, C along +Z.
enum class View { A = 0, B = 1, C = 2 };
enum class Axis { X = 0, Y = 1, Z = 2 };

std::string_view to_string(View view);
View view_from_string(std::string_view s);
std::string_view to_string(Axis axis);
Axis axis_from_string(std::string_view s);

/// The view whose optical axis is `axis`.
constexpr View view_along(Axis axis) { return static_cast<View>(static_cast<int>(axis)); }

/// Binary mask of one orthographic projection. Pixel (u, v) is column u, row v.
class Silhouette {
 public:
  Silhouette(int width, int height, double pitch, View view);
  Silhouette(int width, int height, double pitch, View view, std::vector<std::uint8_t> mask);

  int width() const { return width_; }
  int height() const { return height_; }
  double pitch() const { return pitch_; }
  View view() const { return view_; }

  bool at(int u, int v) const { return mask_[index(u, v)] != 0; }
  void set(int u, int v, bool on = true) { mask_[index(u, v)] = on ? 1 : 0; }
  std::size_t count() const;
  std::span<const std::uint8_t> mask() const { return mask_; }

  bool operator==(const Silhouette&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_;
  int height_;
  double pitch_;
  View view_;
  std::vector<std::uint8_t> mask_;
};

/// Binary occupancy lattice with isotropic pitch. Voxel (i, j, k) spans
/// origin + [i, i+1) * pitch along each axis; its centre is at +0.5 pitch.
class VoxelGrid {
 public:
  VoxelGrid(int nx, int ny, int nz, double pitch, Vec3 origin = Vec3::Zero());

  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  std::array<int, 3> dims() const { return dims_; }
  double pitch() const { return pitch_; }
  const Vec3& origin() const { return origin_; }

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_[1]) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(dims_[0]) +
           static_cast<std::size_t>(x);
  }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
  }
  bool at(int x, int y, int z) const { return data_[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool on = true) { data_[index(x, y, z)] = on ? 1 : 0; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::size_t occupied_count() const;
  /// Occupied count times pitch cubed.
  double volume() const;
  Vec3 voxel_center(int x, int y, int z) const {
    return origin_ + pitch_ * Vec3(x + 0.5, y + 0.5, z + 0.5);
  }

  bool operator==(const VoxelGrid& other) const;

 private:
  std::array<int, 3> dims_;
  double pitch_;
  Vec3 origin_;
  std::vector<std::uint8_t> data_;
};

using Triangle = std::array<int, 3>;

/// Triangulated surface. Triangles are counter-clockwise seen from outside.
class TriMesh {
 public:
  TriMesh() = default;
  /// Validates indices and drops zero-area triangles.
  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  bool empty() const { return triangles_.empty(); }

  /// Every undirected edge is shared by exactly two triangles with opposite
  /// orientation.
  bool is_closed() const;

  TriMesh transformed(const Mat3& rotation, const Vec3& translation = Vec3::Zero()) const;
  TriMesh scaled(double factor) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
};

/// Oriented box with sorted dimensions. Column 0 of `rotation` is the S axis,
/// column 1 the I axis and column 2 the L axis.
struct OrientedBox {
  double S = 0.0;
  double I = 0.0;
  double L = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  double volume() const { return S * I * L; }
};

/// Orthographic projection of the occupancy along `axis`.
Silhouette project(const VoxelGrid& grid, Axis axis);

/// Components sorted by descending voxel count (ties by first voxel in raster
/// order). Each component is cropped to its bounding box with the origin
/// shifted so that voxels keep their world position.
std::vector<VoxelGrid> connected_components_3d(const VoxelGrid& grid, int connectivity = 26);

/// Smallest sub-grid containing every occupied voxel. Returns a copy of the
/// input when nothing is occupied.
VoxelGrid crop_to_occupied(const VoxelGrid& grid);

double mesh_surface_area(const TriMesh& mesh);
/// Divergence-theorem volume of a closed mesh, returned positive.
double mesh_volume(const TriMesh& mesh);

}  // namespace ocular
