#include "ocular/geom.hpp"

#include "ocular/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <string>
#include <utility>

namespace ocular {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::OpenMesh: return "OpenMesh";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::OrderViolation: return "OrderViolation";
    case ErrorKind::NoObject: return "NoObject";
    case ErrorKind::MultipleObjects: return "MultipleObjects";
    case ErrorKind::ScaleDivergence: return "ScaleDivergence";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyRun: return "EmptyRun";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::MemoryCap: return "MemoryCap";
    case ErrorKind::OverlapDetected: return "OverlapDetected";
    case ErrorKind::InconsistentSliceDims: return "InconsistentSliceDims";
    case ErrorKind::InvalidManifest: return "InvalidManifest";
  }
  return "Unknown";
}

std::string_view to_string(View view) {
  switch (view) {
    case View::A: return "A";
    case View::B: return "B";
    case View::C: return "C";
  }
  return "?";
}

View view_from_string(std::string_view s) {
  if (s == "A" || s == "a") return View::A;
  if (s == "B" || s == "b") return View::B;
  if (s == "C" || s == "c") return View::C;
  throw Error(ErrorKind::OutOfRange, "unknown view '" + std::string(s) + "'");
}

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::X: return "X";
    case Axis::Y: return "Y";
    case Axis::Z: return "Z";
  }
  return "?";
}

Axis axis_from_string(std::string_view s) {
  if (s == "X" || s == "x") return Axis::X;
  if (s == "Y" || s == "y") return Axis::Y;
  if (s == "Z" || s == "z") return Axis::Z;
  throw Error(ErrorKind::OutOfRange, "unknown axis '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Silhouette

Silhouette::Silhouette(int width, int height, double pitch, View view)
    : Silhouette(width, height, pitch, view,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                           static_cast<std::size_t>(std::max(height, 0)))) {}

Silhouette::Silhouette(int width, int height, double pitch, View view,
                       std::vector<std::uint8_t> mask)
    : width_(width), height_(height), pitch_(pitch), view_(view), mask_(std::move(mask)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::OutOfRange, "silhouette dimensions must be positive");
  }
  if (!(pitch > 0.0)) throw Error(ErrorKind::OutOfRange, "silhouette pitch must be positive");
  if (mask_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::DimensionMismatch, "silhouette mask size does not match width*height");
  }
  for (auto& m : mask_) m = m ? 1 : 0;
}

std::size_t Silhouette::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------
// VoxelGrid

VoxelGrid::VoxelGrid(int nx, int ny, int nz, double pitch, Vec3 origin)
    : dims_{nx, ny, nz}, pitch_(pitch), origin_(std::move(origin)) {
  if (nx < 1 || ny < 1 || nz < 1) {
    throw Error(ErrorKind::OutOfRange, "voxel grid dimensions must be positive");
  }
  if (!(pitch > 0.0)) throw Error(ErrorKind::OutOfRange, "voxel pitch must be positive");
  data_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                   static_cast<std::size_t>(nz),
               0);
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double VoxelGrid::volume() const {
  return static_cast<double>(occupied_count()) * pitch_ * pitch_ * pitch_;
}

bool VoxelGrid::operator==(const VoxelGrid& other) const {
  return dims_ == other.dims_ && pitch_ == other.pitch_ && origin_ == other.origin_ &&
         data_ == other.data_;
}

// ---------------------------------------------------------------------------
// TriMesh

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)) {
  const int n = static_cast<int>(vertices_.size());
  triangles_.reserve(triangles.size());
  for (const auto& t : triangles) {
    for (int idx : t) {
      if (idx < 0 || idx >= n) throw Error(ErrorKind::OutOfRange, "triangle index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    const Vec3 cross =
        (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
    if (cross.squaredNorm() == 0.0) continue;
    triangles_.push_back(t);
  }
}

bool TriMesh::is_closed() const {
  if (triangles_.empty()) return false;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  std::vector<std::uint64_t> edges;
  edges.reserve(triangles_.size() * 3);
  for (const auto& t : triangles_) {
    for (int i = 0; i < 3; ++i) edges.push_back(key(t[i], t[(i + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) return false;
  for (std::uint64_t e : edges) {
    const auto a = static_cast<int>(e >> 32);
    const auto b = static_cast<int>(e & 0xffffffffu);
    if (!std::binary_search(edges.begin(), edges.end(), key(b, a))) return false;
  }
  return true;
}

TriMesh TriMesh::transformed(const Mat3& rotation, const Vec3& translation) const {
  std::vector<Vec3> v;
  v.reserve(vertices_.size());
  for (const auto& p : vertices_) v.push_back(rotation * p + translation);
  return TriMesh(std::move(v), triangles_);
}

TriMesh TriMesh::scaled(double factor) const {
  std::vector<Vec3> v;
  v.reserve(vertices_.size());
  for (const auto& p : vertices_) v.push_back(p * factor);
  return TriMesh(std::move(v), triangles_);
}

double mesh_surface_area(const TriMesh& mesh) {
  const auto& v = mesh.vertices();
  double area = 0.0;
  for (const auto& t : mesh.triangles()) {
    area += 0.5 * (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).norm();
  }
  return area;
}

double mesh_volume(const TriMesh& mesh) {
  if (!mesh.is_closed()) throw Error(ErrorKind::OpenMesh, "volume requires a closed mesh");
  const auto& v = mesh.vertices();
  // Translate to the first vertex to keep the products well conditioned.
  const Vec3 ref = v[mesh.triangles().front()[0]];
  double six_vol = 0.0;
  for (const auto& t : mesh.triangles()) {
    six_vol += (v[t[0]] - ref).dot((v[t[1]] - ref).cross(v[t[2]] - ref));
  }
  return std::abs(six_vol) / 6.0;
}

// ---------------------------------------------------------------------------
// Projection

Silhouette project(const VoxelGrid& grid, Axis axis) {
  const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  switch (axis) {
    case Axis::X: {
      Silhouette s(ny, nz, grid.pitch(), View::A);
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          for (int x = 0; x < nx; ++x)
            if (grid.at(x, y, z)) {
              s.set(y, z);
              break;
            }
      return s;
    }
    case Axis::Y: {
      Silhouette s(nx, nz, grid.pitch(), View::B);
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          for (int x = 0; x < nx; ++x)
            if (grid.at(x, y, z)) s.set(x, z);
      return s;
    }
    case Axis::Z: {
      Silhouette s(nx, ny, grid.pitch(), View::C);
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          for (int x = 0; x < nx; ++x)
            if (grid.at(x, y, z)) s.set(x, y);
      return s;
    }
  }
  throw Error(ErrorKind::OutOfRange, "bad axis");
}

// ---------------------------------------------------------------------------
// Connected components

namespace {

struct Offset {
  int dx, dy, dz;
};

std::vector<Offset> neighbourhood(int connectivity) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        if (connectivity == 18 && manhattan == 3) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

}  // namespace

std::vector<VoxelGrid> connected_components_3d(const VoxelGrid& grid, int connectivity) {
  if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
    throw Error(ErrorKind::OutOfRange, "connectivity must be 6, 18 or 26");
  }
  const auto offsets = neighbourhood(connectivity);
  const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  std::vector<int> label(grid.data().size(), -1);

  struct Comp {
    std::size_t first;
    std::vector<std::size_t> voxels;
    std::array<int, 3> lo{}, hi{};
  };
  std::vector<Comp> comps;
  std::vector<std::size_t> stack;

  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const std::size_t seed = grid.index(x, y, z);
        if (!grid.data()[seed] || label[seed] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        Comp comp;
        comp.first = seed;
        comp.lo = {x, y, z};
        comp.hi = {x, y, z};
        label[seed] = id;
        stack.assign(1, seed);
        while (!stack.empty()) {
          const std::size_t cur = stack.back();
          stack.pop_back();
          comp.voxels.push_back(cur);
          const int cx = static_cast<int>(cur % nx);
          const int cy = static_cast<int>((cur / nx) % ny);
          const int cz = static_cast<int>(cur / (static_cast<std::size_t>(nx) * ny));
          comp.lo = {std::min(comp.lo[0], cx), std::min(comp.lo[1], cy), std::min(comp.lo[2], cz)};
          comp.hi = {std::max(comp.hi[0], cx), std::max(comp.hi[1], cy), std::max(comp.hi[2], cz)};
          for (const auto& o : offsets) {
            const int qx = cx + o.dx, qy = cy + o.dy, qz = cz + o.dz;
            if (!grid.in_bounds(qx, qy, qz)) continue;
            const std::size_t q = grid.index(qx, qy, qz);
            if (grid.data()[q] && label[q] < 0) {
              label[q] = id;
              stack.push_back(q);
            }
          }
        }
        comps.push_back(std::move(comp));
      }

  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return comps[a].voxels.size() > comps[b].voxels.size();
  });

  std::vector<VoxelGrid> out;
  out.reserve(comps.size());
  for (std::size_t idx : order) {
    const auto& c = comps[idx];
    VoxelGrid g(c.hi[0] - c.lo[0] + 1, c.hi[1] - c.lo[1] + 1, c.hi[2] - c.lo[2] + 1,
                grid.pitch(),
                grid.origin() + grid.pitch() * Vec3(c.lo[0], c.lo[1], c.lo[2]));
    for (std::size_t v : c.voxels) {
      const int vx = static_cast<int>(v % nx);
      const int vy = static_cast<int>((v / nx) % ny);
      const int vz = static_cast<int>(v / (static_cast<std::size_t>(nx) * ny));
      g.set(vx - c.lo[0], vy - c.lo[1], vz - c.lo[2]);
    }
    out.push_back(std::move(g));
  }
  return out;
}

VoxelGrid crop_to_occupied(const VoxelGrid& grid) {
  std::array<int, 3> lo{grid.nx(), grid.ny(), grid.nz()}, hi{-1, -1, -1};
  for (int z = 0; z < grid.nz(); ++z)
    for (int y = 0; y < grid.ny(); ++y)
      for (int x = 0; x < grid.nx(); ++x)
        if (grid.at(x, y, z)) {
          lo = {std::min(lo[0], x), std::min(lo[1], y), std::min(lo[2], z)};
          hi = {std::max(hi[0], x), std::max(hi[1], y), std::max(hi[2], z)};
        }
  if (hi[0] < 0) return grid;
  VoxelGrid out(hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1, grid.pitch(),
                grid.origin() + grid.pitch() * Vec3(lo[0], lo[1], lo[2]));
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x)
        if (grid.at(x, y, z)) out.set(x - lo[0], y - lo[1], z - lo[2]);
  return out;
}

}  // namespace ocular
