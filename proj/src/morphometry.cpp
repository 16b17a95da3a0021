#include "ocular/morphometry.hpp"

#include "ocular/error.hpp"
#include "ocular/hull.hpp"
#include "ocular/surface.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ocular {

std::string_view to_string(ZinggClass c) {
  switch (c) {
    case ZinggClass::Compact: return "Compact";
    case ZinggClass::Flat: return "Flat";
    case ZinggClass::Elongated: return "Elongated";
    case ZinggClass::Bladed: return "Bladed";
  }
  return "?";
}

ZinggClass zingg_class_from_string(std::string_view s) {
  if (s == "Compact") return ZinggClass::Compact;
  if (s == "Flat") return ZinggClass::Flat;
  if (s == "Elongated") return ZinggClass::Elongated;
  if (s == "Bladed") return ZinggClass::Bladed;
  throw Error(ErrorKind::OutOfRange, "unknown Zingg class '" + std::string(s) + "'");
}

std::string_view to_string(SourceKind s) {
  return s == SourceKind::Reconstructed ? "reconstructed" : "voxel-import";
}

SourceKind source_kind_from_string(std::string_view s) {
  if (s == "reconstructed") return SourceKind::Reconstructed;
  if (s == "voxel-import") return SourceKind::VoxelImport;
  throw Error(ErrorKind::OutOfRange, "unknown source kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Bounding box

namespace {

using Vec2 = Eigen::Vector2d;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise, no collinear points.
std::vector<Vec2> hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

struct Rect {
  double area;
  Vec2 dir;  // unit direction of one rectangle side
};

// Minimum-area enclosing rectangle of a convex polygon by rotating calipers.
Rect min_area_rect(const std::vector<Vec2>& h) {
  const std::size_t n = h.size();
  Rect best{std::numeric_limits<double>::infinity(), Vec2(1.0, 0.0)};
  if (n < 3) return best;
  double extent = 0.0;
  for (const auto& p : h) extent = std::max(extent, (p - h[0]).norm());
  std::size_t r = 0, t = 0, l = 0;
  bool started = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = h[(i + 1) % n] - h[i];
    // Near-coincident vertices (a box seen face-on) leave edges whose
    // direction is rounding noise; they would drag the pointers off course.
    if (e.norm() <= 1e-9 * extent) continue;
    const Vec2 d = e.normalized();
    const Vec2 nrm(-d.y(), d.x());  // points into the polygon
    if (!started) {
      started = true;
      for (std::size_t j = 0; j < n; ++j) {
        if (h[j].dot(d) > h[r].dot(d)) r = j;
        if (h[j].dot(nrm) > h[t].dot(nrm)) t = j;
        if (h[j].dot(d) < h[l].dot(d)) l = j;
      }
    } else {
      // Each support function is unimodal on a convex polygon, so the
      // pointers only ever move forward.
      for (std::size_t k = 0; k < n && h[(r + 1) % n].dot(d) >= h[r].dot(d); ++k) r = (r + 1) % n;
      for (std::size_t k = 0; k < n && h[(t + 1) % n].dot(nrm) >= h[t].dot(nrm); ++k)
        t = (t + 1) % n;
      for (std::size_t k = 0; k < n && h[(l + 1) % n].dot(d) <= h[l].dot(d); ++k) l = (l + 1) % n;
    }
    const double width = (h[r] - h[l]).dot(d);
    const double height = (h[t] - h[i]).dot(nrm);
    const double area = width * height;
    if (area < best.area) best = {area, d};
  }
  return best;
}

Mat3 frame_from_normal(const Vec3& n) {
  Eigen::Index least = 0;
  n.cwiseAbs().minCoeff(&least);
  const Vec3 e1 = n.cross(Vec3::Unit(least)).normalized();
  const Vec3 e2 = n.cross(e1);
  Mat3 f;
  f.col(0) = n;
  f.col(1) = e1;
  f.col(2) = e2;
  return f;
}

double box_volume(std::span<const Vec3> pts, const Mat3& frame) {
  Eigen::Array3d lo = Eigen::Array3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Array3d hi = -lo;
  for (const auto& p : pts) {
    const Eigen::Array3d q = (frame.transpose() * p).array();
    lo = lo.min(q);
    hi = hi.max(q);
  }
  return (hi - lo).prod();
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) r.col(2) *= -1.0;
  return r;
}

Mat3 refine(std::span<const Vec3> pts, Mat3 frame, double volume, double tol) {
  // Axis and diagonal moves, plus a fixed scatter of directions so the search
  // can follow the creases where two support vertices swap.
  std::vector<Vec3> moves;
  for (int i = 0; i < 3; ++i) moves.push_back(Vec3::Unit(i));
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      moves.push_back((Vec3::Unit(i) + Vec3::Unit(j)).normalized());
      moves.push_back((Vec3::Unit(i) - Vec3::Unit(j)).normalized());
    }
  for (int k = 0; k < 24; ++k) {
    // golden-angle spiral on the half sphere
    const double z = 1.0 - (k + 0.5) / 24.0;
    const double r = std::sqrt(1.0 - z * z), phi = k * 2.399963229728653;
    moves.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  double step = 0.05;
  while (step >= tol) {
    bool improved = false;
    for (const auto& axis : moves) {
      for (double sign : {1.0, -1.0}) {
        const Mat3 cand =
            orthonormalize(frame * Eigen::AngleAxisd(sign * step, axis).toRotationMatrix());
        const double v = box_volume(pts, cand);
        if (v < volume * (1.0 - 1e-13)) {
          frame = cand;
          volume = v;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return frame;
}

OrientedBox sorted_box(std::span<const Vec3> pts, const Mat3& frame) {
  OrientedBox raw = box_in_frame(pts, frame);
  std::array<std::pair<double, int>, 3> dims{{{raw.S, 0}, {raw.I, 1}, {raw.L, 2}}};
  std::stable_sort(dims.begin(), dims.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  OrientedBox out;
  out.S = dims[0].first;
  out.I = dims[1].first;
  out.L = dims[2].first;
  for (int k = 0; k < 3; ++k) out.rotation.col(k) = frame.col(dims[k].second);
  if (out.rotation.determinant() < 0.0) out.rotation.col(2) *= -1.0;
  out.center = raw.center;
  return out;
}

OrientedBox min_box_of_hull(const TriMesh& hull, const BoundingBoxOptions& opt) {
  std::vector<Vec3> pts = hull.vertices();
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });

  struct Seed {
    Mat3 frame;
    double volume;
  };
  std::vector<Seed> seeds;

  const auto facets = hull_facets(hull);
  std::vector<Vec3> accepted;
  for (const auto& f : facets) {
    if (static_cast<int>(accepted.size()) >= opt.max_facet_candidates) break;
    bool duplicate = false;
    for (const auto& a : accepted) duplicate |= std::abs(a.dot(f.normal)) > 1.0 - 1e-12;
    if (duplicate) continue;
    accepted.push_back(f.normal);

    const Mat3 basis = frame_from_normal(f.normal);
    std::vector<Vec2> proj;
    proj.reserve(pts.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : pts) {
      proj.emplace_back(basis.col(1).dot(p), basis.col(2).dot(p));
      const double h = f.normal.dot(p);
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
    const Rect rect = min_area_rect(hull_2d(std::move(proj)));
    if (!std::isfinite(rect.area)) continue;
    Mat3 frame;
    frame.col(0) = f.normal;
    frame.col(1) = (rect.dir.x() * basis.col(1) + rect.dir.y() * basis.col(2)).normalized();
    frame.col(2) = frame.col(0).cross(frame.col(1));
    seeds.push_back({frame, rect.area * (hi - lo)});
  }

  // Principal axes and world axes as extra seeds.
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Mat3 pca = eig.eigenvectors();
  if (pca.determinant() < 0.0) pca.col(2) *= -1.0;
  seeds.push_back({pca, box_volume(pts, pca)});
  seeds.push_back({Mat3::Identity(), box_volume(pts, Mat3::Identity())});

  // Coarse scan of one fundamental domain of the box symmetry group: the
  // optimum need not have a face flush with a hull facet.
  const double step = opt.coarse_step_deg * std::numbers::pi / 180.0;
  if (step > 0.0) {
    for (double a = 0; a < 2 * std::numbers::pi; a += step)
      for (double b = 0; b <= 0.5 * std::numbers::pi + 1e-12; b += step)
        for (double c = 0; c < 0.5 * std::numbers::pi; c += step) {
          const Mat3 f = (Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
                          Eigen::AngleAxisd(c, Vec3::UnitZ()))
                             .toRotationMatrix();
          seeds.push_back({f, box_volume(pts, f)});
        }
  }

  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Seed& a, const Seed& b) { return a.volume < b.volume; });

  Mat3 best_frame = seeds.front().frame;
  double best_volume = seeds.front().volume;
  const int n_refine = std::min<int>(opt.refine_candidates, static_cast<int>(seeds.size()));
  for (int i = 0; i < n_refine; ++i) {
    const Mat3 f = refine(pts, seeds[i].frame, seeds[i].volume, opt.angular_tolerance);
    const double v = box_volume(pts, f);
    if (v < best_volume) {
      best_volume = v;
      best_frame = f;
    }
  }
  return sorted_box(pts, best_frame);
}

}  // namespace

OrientedBox box_in_frame(std::span<const Vec3> points, const Mat3& frame) {
  Eigen::Array3d lo = Eigen::Array3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Array3d hi = -lo;
  for (const auto& p : points) {
    const Eigen::Array3d q = (frame.transpose() * p).array();
    lo = lo.min(q);
    hi = hi.max(q);
  }
  OrientedBox b;
  b.S = hi[0] - lo[0];
  b.I = hi[1] - lo[1];
  b.L = hi[2] - lo[2];
  b.rotation = frame;
  b.center = frame * Vec3(0.5 * (lo + hi).matrix());
  return b;
}

OrientedBox min_bounding_box(const TriMesh& mesh, const BoundingBoxOptions& options) {
  return min_box_of_hull(convex_hull(mesh.vertices()), options);
}

// ---------------------------------------------------------------------------
// Shape indices

ZinggClass zingg_classify(double elongation, double flatness, double threshold) {
  if (!(elongation > 0.0 && elongation <= 1.0) || !(flatness > 0.0 && flatness <= 1.0)) {
    throw Error(ErrorKind::OutOfRange, "elongation and flatness must lie in (0, 1]");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::OutOfRange, "Zingg threshold must lie in (0, 1)");
  }
  const bool long_ok = elongation > threshold;
  const bool flat_ok = flatness > threshold;
  if (long_ok && flat_ok) return ZinggClass::Compact;
  if (!long_ok && flat_ok) return ZinggClass::Elongated;
  if (long_ok && !flat_ok) return ZinggClass::Flat;
  return ZinggClass::Bladed;
}

double sphericity_wadell(double volume, double surface_area) {
  if (!(volume > 0.0) || !(surface_area > 0.0)) {
    throw Error(ErrorKind::OutOfRange, "volume and surface area must be positive");
  }
  return std::cbrt(std::numbers::pi) * std::pow(6.0 * volume, 2.0 / 3.0) / surface_area;
}

double sphericity_intercept(double S, double I, double L) {
  if (!(S > 0.0) || !(S <= I) || !(I <= L)) {
    throw Error(ErrorKind::OrderViolation, "requires 0 < S <= I <= L");
  }
  const double x = I * S / (L * L);
  const double c = std::cbrt(x);
  return c - (c * c * c - x) / (3.0 * c * c);  // one Newton step: exact on perfect cubes
}

double convexity(const TriMesh& mesh) {
  const double v = mesh_volume(mesh);
  return v / mesh_volume(convex_hull(mesh.vertices()));
}

double lattice_convexity(const VoxelGrid& solid) {
  const std::size_t occupied = solid.occupied_count();
  if (occupied == 0) throw Error(ErrorKind::EmptyGrid, "no occupied voxels");

  // The hull of all occupied centres equals the hull of the boundary centres.
  std::vector<Vec3> pts;
  auto empty = [&](int x, int y, int z) { return !solid.in_bounds(x, y, z) || !solid.at(x, y, z); };
  for (int z = 0; z < solid.nz(); ++z)
    for (int y = 0; y < solid.ny(); ++y)
      for (int x = 0; x < solid.nx(); ++x) {
        if (!solid.at(x, y, z)) continue;
        if (empty(x - 1, y, z) || empty(x + 1, y, z) || empty(x, y - 1, z) ||
            empty(x, y + 1, z) || empty(x, y, z - 1) || empty(x, y, z + 1)) {
          pts.emplace_back(x, y, z);  // lattice units
        }
      }
  TriMesh hull;
  try {
    hull = convex_hull(pts);
  } catch (const Error&) {
    return 1.0;  // coplanar centres: the digital hull is the set itself
  }

  // Outward half-spaces n.p <= d, in lattice units.
  Vec3 inner = Vec3::Zero();
  for (const auto& v : hull.vertices()) inner += v;
  inner /= static_cast<double>(hull.vertices().size());
  std::vector<std::pair<Vec3, double>> planes;
  for (const auto& t : hull.triangles()) {
    const Vec3& a = hull.vertices()[t[0]];
    Vec3 n = (hull.vertices()[t[1]] - a).cross(hull.vertices()[t[2]] - a);
    const double len = n.norm();
    if (len == 0.0) continue;
    n /= len;
    double d = n.dot(a);
    if (n.dot(inner) > d) {
      n = -n;
      d = -d;
    }
    planes.emplace_back(n, d);
  }

  // Count lattice centres inside the hull, one x-interval per (y, z) row.
  constexpr double kTol = 1e-7;
  std::size_t inside = 0;
  for (int z = 0; z < solid.nz(); ++z)
    for (int y = 0; y < solid.ny(); ++y) {
      double lo = -0.5, hi = solid.nx() - 0.5;
      bool empty_row = false;
      for (const auto& [n, d] : planes) {
        const double rhs = d - n.y() * y - n.z() * z + kTol;
        if (std::abs(n.x()) < 1e-12) {
          if (rhs < 0.0) {
            empty_row = true;
            break;
          }
        } else if (n.x() > 0.0) {
          hi = std::min(hi, rhs / n.x());
        } else {
          lo = std::max(lo, rhs / n.x());
        }
        if (lo > hi) {
          empty_row = true;
          break;
        }
      }
      if (empty_row) continue;
      const long first = static_cast<long>(std::ceil(lo));
      const long last = static_cast<long>(std::floor(hi));
      if (last >= first) inside += static_cast<std::size_t>(last - first + 1);
    }
  return static_cast<double>(occupied) / static_cast<double>(std::max(inside, occupied));
}

ParticleRecord measure(const VoxelGrid& solid, std::string particle_id, std::string run_id,
                       SourceKind source) {
  if (solid.occupied_count() == 0) throw Error(ErrorKind::EmptyGrid, "no occupied voxels");
  if (surface_voxel_count(solid) < 4) {
    throw Error(ErrorKind::DegenerateInput,
                "particle " + particle_id + " has fewer than 4 surface voxels");
  }

  const TriMesh mesh = extract_surface(solid);
  const TriMesh hull = convex_hull(mesh.vertices());
  const OrientedBox box = min_box_of_hull(hull, {});

  ParticleRecord r;
  r.particle_id = std::move(particle_id);
  r.run_id = std::move(run_id);
  r.source = source;
  r.S = box.S;
  r.I = box.I;
  r.L = box.L;
  r.volume = solid.volume();
  r.surface_area = mesh_surface_area(mesh);
  // A box-shaped solid fills its box exactly; the slack absorbs rounding.
  if (r.volume > (1.0 + 1e-6) * r.S * r.I * r.L) {
    throw Error(ErrorKind::DegenerateInput,
                "particle " + r.particle_id + " volume exceeds its bounding box");
  }

  const double mesh_vol = mesh_volume(mesh);
  auto& ix = r.indices;
  ix.elongation = r.I / r.L;
  ix.flatness = r.S / r.I;
  ix.zingg = zingg_classify(ix.elongation, ix.flatness);
  ix.sphericity_wadell = sphericity_wadell(r.volume, r.surface_area);
  ix.sphericity_intercept = sphericity_intercept(r.S, r.I, r.L);
  ix.convexity = lattice_convexity(solid);
  r.wadell_flag = ix.sphericity_wadell > kWadellFlagLimit;
  r.convexity_flag = ix.convexity > kConvexityFlagLimit;
  r.mesh_volume_discrepancy = (mesh_vol - r.volume) / r.volume;

  Vec3 c = Vec3::Zero();
  std::size_t n = 0;
  for (int z = 0; z < solid.nz(); ++z)
    for (int y = 0; y < solid.ny(); ++y)
      for (int x = 0; x < solid.nx(); ++x)
        if (solid.at(x, y, z)) {
          c += solid.voxel_center(x, y, z);
          ++n;
        }
  r.centroid = c / static_cast<double>(n);
  return r;
}

}  // namespace ocular
