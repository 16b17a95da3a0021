#pragma once

// Test-only builders and independent oracles. Nothing here calls the
// production code paths it is used to check.

#include "ocular/geom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace testing_support {

using ocular::Mat3;
using ocular::TriMesh;
using ocular::Vec3;

inline TriMesh box_mesh(double w, double d, double h) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? w : 0.0, (i & 2) ? d : 0.0, (i & 4) ? h : 0.0);
  }
  // Outward, counter-clockwise.
  std::vector<ocular::Triangle> t{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},
                                  {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},
                                  {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriMesh(std::move(v), std::move(t));
}

/// Subdivided icosahedron projected onto a sphere.
inline TriMesh icosphere(int subdivisions, double r) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                      {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<ocular::Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<ocular::Triangle> g;
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      g.push_back({t[0], a, c});
      g.push_back({t[1], b, a});
      g.push_back({t[2], c, b});
      g.push_back({a, b, c});
    }
    f = std::move(g);
  }
  for (auto& x : v) x *= r;
  return TriMesh(std::move(v), std::move(f));
}

/// Prism over a polygon that is star-shaped from its first vertex
/// (counter-clockwise in the xy plane), from z = 0 to z = h.
inline TriMesh extrude_polygon(const std::vector<std::array<double, 2>>& poly, double h) {
  const int n = static_cast<int>(poly.size());
  std::vector<Vec3> v;
  for (const auto& p : poly) v.emplace_back(p[0], p[1], 0.0);
  for (const auto& p : poly) v.emplace_back(p[0], p[1], h);
  std::vector<ocular::Triangle> t;
  for (int i = 1; i + 1 < n; ++i) {
    t.push_back({0, i + 1, i});          // bottom, facing -z
    t.push_back({n, n + i, n + i + 1});  // top, facing +z
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    t.push_back({i, j, n + j});
    t.push_back({i, n + j, n + i});
  }
  return TriMesh(std::move(v), std::move(t));
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Box extents of `pts` along the columns of `r`.
inline std::array<double, 3> extents_in(const std::vector<Vec3>& pts, const Mat3& r) {
  std::array<double, 3> lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& p : pts)
    for (int k = 0; k < 3; ++k) {
      const double s = r.col(k).dot(p);
      lo[k] = std::min(lo[k], s);
      hi[k] = std::max(hi[k], s);
    }
  return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
}

inline Mat3 zyz(double a, double b, double c) {
  return (Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
          Eigen::AngleAxisd(c, Vec3::UnitZ()))
      .toRotationMatrix();
}

/// Brute-force minimal-volume box: ZYZ Euler scan at 1 degree over one
/// fundamental domain of the box symmetry group, followed by nested local
/// scans at 0.1 and 0.01 degrees. Returns sorted dims.
inline std::array<double, 3> brute_force_box(const std::vector<Vec3>& pts) {
  constexpr double d2r = std::numbers::pi / 180.0;
  double best = 1e300;
  double ba = 0, bb = 0, bc = 0;
  auto eval = [&](double a, double b, double c) {
    const auto e = extents_in(pts, zyz(a * d2r, b * d2r, c * d2r));
    const double vol = e[0] * e[1] * e[2];
    if (vol < best) {
      best = vol;
      ba = a;
      bb = b;
      bc = c;
    }
  };
  for (int a = 0; a < 360; ++a)
    for (int b = 0; b <= 90; ++b)
      for (int c = 0; c < 90; ++c) eval(a, b, c);
  for (double step : {0.1, 0.01}) {
    const double ca = ba, cb = bb, cc = bc;
    for (int i = -15; i <= 15; ++i)
      for (int j = -15; j <= 15; ++j)
        for (int k = -15; k <= 15; ++k) eval(ca + i * step, cb + j * step, cc + k * step);
  }
  auto e = extents_in(pts, zyz(ba * d2r, bb * d2r, bc * d2r));
  std::sort(e.begin(), e.end());
  return e;
}

/// Signed distance of p above the plane of triangle t of mesh m (outward
/// positive, unnormalised by area).
inline double plane_distance(const TriMesh& m, const ocular::Triangle& t, const Vec3& p) {
  const Vec3& a = m.vertices()[t[0]];
  const Vec3 n =
      (m.vertices()[t[1]] - a).cross(m.vertices()[t[2]] - a).normalized();
  return n.dot(p - a);
}

/// Random blob: union of a few random balls inside an n^3 grid.
inline ocular::VoxelGrid random_blob(std::mt19937_64& rng, int n, int balls, double pitch = 1.0) {
  ocular::VoxelGrid g(n, n, n, pitch);
  std::uniform_real_distribution<double> c(0.25 * n, 0.75 * n), r(1.0, 0.25 * n);
  for (int b = 0; b < balls; ++b) {
    const Vec3 ctr(c(rng), c(rng), c(rng));
    const double rad = r(rng);
    for (int z = 0; z < n; ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          if ((Vec3(x, y, z) - ctr).norm() <= rad) g.set(x, y, z);
  }
  return g;
}

/// Random sparse occupancy.
inline ocular::VoxelGrid random_grid(std::mt19937_64& rng, int nx, int ny, int nz, double fill) {
  ocular::VoxelGrid g(nx, ny, nz, 1.0);
  std::bernoulli_distribution on(fill);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (on(rng)) g.set(x, y, z);
  return g;
}

}  // namespace testing_support
