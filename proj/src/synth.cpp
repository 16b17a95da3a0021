#include "ocular/synth.hpp"

#include "ocular/error.hpp"
#include "ocular/parallel.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>
#include <numbers>
#include <random>
#include <string>

namespace ocular {

using nlohmann::json;

std::string_view to_string(SolidKind kind) {
  switch (kind) {
    case SolidKind::Sphere: return "sphere";
    case SolidKind::Ellipsoid: return "ellipsoid";
    case SolidKind::Box: return "box";
    case SolidKind::Superellipsoid: return "superellipsoid";
    case SolidKind::LPrism: return "lprism";
  }
  return "?";
}

SolidKind solid_kind_from_string(std::string_view s) {
  for (auto k : {SolidKind::Sphere, SolidKind::Ellipsoid, SolidKind::Box,
                 SolidKind::Superellipsoid, SolidKind::LPrism}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::DegenerateInput, "unknown solid kind: " + std::string(s));
}

AnalyticSolid AnalyticSolid::sphere(double r) {
  AnalyticSolid s;
  s.kind = SolidKind::Sphere;
  s.size = Vec3(r, r, r);
  s.validate();
  return s;
}

AnalyticSolid AnalyticSolid::ellipsoid(double a, double b, double c) {
  AnalyticSolid s;
  s.kind = SolidKind::Ellipsoid;
  s.size = Vec3(a, b, c);
  s.validate();
  return s;
}

AnalyticSolid AnalyticSolid::box(double w, double d, double h) {
  AnalyticSolid s;
  s.kind = SolidKind::Box;
  s.size = Vec3(w, d, h);
  s.validate();
  return s;
}

AnalyticSolid AnalyticSolid::superellipsoid(double a, double b, double c, double e1, double e2) {
  AnalyticSolid s;
  s.kind = SolidKind::Superellipsoid;
  s.size = Vec3(a, b, c);
  s.eps1 = e1;
  s.eps2 = e2;
  s.validate();
  return s;
}

AnalyticSolid AnalyticSolid::lprism(double w, double d, double h, double notch) {
  AnalyticSolid s;
  s.kind = SolidKind::LPrism;
  s.size = Vec3(w, d, h);
  s.notch = notch;
  s.validate();
  return s;
}

AnalyticSolid AnalyticSolid::posed(const Mat3& r, const Vec3& t) const {
  AnalyticSolid s = *this;
  s.rotation = r;
  s.translation = t;
  return s;
}

void AnalyticSolid::validate() const {
  if (!(size.minCoeff() > 0.0) || !size.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, "solid sizes must be positive");
  }
  if (kind == SolidKind::Superellipsoid &&
      !(eps1 >= 0.2 && eps1 <= 2.0 && eps2 >= 0.2 && eps2 <= 2.0)) {
    throw Error(ErrorKind::DegenerateInput, "superellipsoid exponents must lie in [0.2, 2]");
  }
  if (kind == SolidKind::LPrism &&
      !(notch > 0.0 && notch < size.x() && notch < size.y())) {
    throw Error(ErrorKind::DegenerateInput, "lprism notch must be positive and below w and d");
  }
}

bool AnalyticSolid::contains_body(const Vec3& p) const {
  switch (kind) {
    case SolidKind::Sphere:
    case SolidKind::Ellipsoid: {
      const Vec3 q = p.cwiseQuotient(size);
      return q.squaredNorm() <= 1.0;
    }
    case SolidKind::Box: {
      const Vec3 h = 0.5 * size;
      return std::abs(p.x()) <= h.x() && std::abs(p.y()) <= h.y() && std::abs(p.z()) <= h.z();
    }
    case SolidKind::Superellipsoid: {
      const Vec3 q = p.cwiseQuotient(size).cwiseAbs();
      if (q.maxCoeff() > 1.0) return false;
      const double xy = std::pow(q.x(), 2.0 / eps2) + std::pow(q.y(), 2.0 / eps2);
      return std::pow(xy, eps2 / eps1) + std::pow(q.z(), 2.0 / eps1) <= 1.0;
    }
    case SolidKind::LPrism: {
      const Vec3 h = 0.5 * size;
      if (std::abs(p.x()) > h.x() || std::abs(p.y()) > h.y() || std::abs(p.z()) > h.z()) {
        return false;
      }
      return !(p.x() > h.x() - notch && p.y() > h.y() - notch);
    }
  }
  return false;
}

bool AnalyticSolid::contains(const Vec3& world) const {
  return contains_body(rotation.transpose() * (world - translation));
}

Vec3 AnalyticSolid::half_extents() const {
  switch (kind) {
    case SolidKind::Box:
    case SolidKind::LPrism: return 0.5 * size;
    default: return size;
  }
}

void AnalyticSolid::world_bounds(Vec3& lo, Vec3& hi) const {
  const Vec3 ext = rotation.cwiseAbs() * half_extents();
  lo = translation - ext;
  hi = translation + ext;
}

double AnalyticSolid::volume() const {
  using std::numbers::pi;
  switch (kind) {
    case SolidKind::Sphere:
    case SolidKind::Ellipsoid: return 4.0 / 3.0 * pi * size.prod();
    case SolidKind::Box: return size.prod();
    case SolidKind::Superellipsoid:
      return 2.0 * size.prod() * eps1 * eps2 * std::beta(eps1 / 2.0 + 1.0, eps1) *
             std::beta(eps2 / 2.0, eps2 / 2.0);
    case SolidKind::LPrism: return (size.x() * size.y() - notch * notch) * size.z();
  }
  return 0.0;
}

std::array<double, 3> AnalyticSolid::dims() const {
  const Vec3 full = 2.0 * half_extents();
  std::array<double, 3> d{full.x(), full.y(), full.z()};
  std::sort(d.begin(), d.end());
  return d;
}

void lattice_range(const AnalyticSolid& solid, double pitch, std::array<int, 3>& lo,
                   std::array<int, 3>& hi, const SynthOptions& opts) {
  if (!(pitch > 0.0)) throw Error(ErrorKind::DegenerateInput, "pitch must be positive");
  solid.validate();
  Vec3 wlo, whi;
  solid.world_bounds(wlo, whi);
  for (int k = 0; k < 3; ++k) {
    const double a = std::floor(wlo[k] / pitch);
    const double b = std::ceil(whi[k] / pitch);
    if (!(b - a <= opts.max_extent_voxels)) {
      throw Error(ErrorKind::MemoryCap, "solid spans " + std::to_string(b - a) +
                                            " voxels, cap is " +
                                            std::to_string(opts.max_extent_voxels));
    }
    lo[k] = static_cast<int>(a);
    hi[k] = std::max(static_cast<int>(b), lo[k] + 1);
  }
}

VoxelGrid voxelize(const AnalyticSolid& solid, double pitch, const SynthOptions& opts) {
  std::array<int, 3> lo, hi;
  lattice_range(solid, pitch, lo, hi, opts);
  const Vec3 origin(lo[0] * pitch, lo[1] * pitch, lo[2] * pitch);
  VoxelGrid g(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], pitch, origin);
  auto data = g.data();
  std::size_t i = 0;
  for (int z = 0; z < g.nz(); ++z)
    for (int y = 0; y < g.ny(); ++y)
      for (int x = 0; x < g.nx(); ++x, ++i) {
        if (solid.contains(g.voxel_center(x, y, z))) data[i] = 1;
      }
  return g;
}

namespace {

// Image axes (u, v) and depth axis for each view.
struct ViewAxes {
  int u, v, depth;
};

constexpr ViewAxes axes_of(View view) {
  switch (view) {
    case View::A: return {1, 2, 0};
    case View::B: return {0, 2, 1};
    case View::C: return {0, 1, 2};
  }
  return {0, 1, 2};
}

// True if any lattice centre along the depth ray through pixel centre (pu, pv)
// (world coordinates) lies inside the solid.
bool ray_hits(const AnalyticSolid& solid, const ViewAxes& ax, double pu, double pv,
              int dlo, int dhi, double step, double pitch) {
  Vec3 p;
  p[ax.u] = pu;
  p[ax.v] = pv;
  const int n = static_cast<int>(std::lround((dhi - dlo) * pitch / step));
  for (int d = 0; d < n; ++d) {
    // Same expression as VoxelGrid::voxel_center so both paths agree bit-for-bit.
    p[ax.depth] = dlo * pitch + step * (d + 0.5);
    if (solid.contains(p)) return true;
  }
  return false;
}

}  // namespace

Silhouette render_silhouette(const AnalyticSolid& solid, View view, double pitch, bool antialias,
                             const SynthOptions& opts) {
  std::array<int, 3> lo, hi;
  lattice_range(solid, pitch, lo, hi, opts);
  const ViewAxes ax = axes_of(view);
  const int w = hi[ax.u] - lo[ax.u];
  const int h = hi[ax.v] - lo[ax.v];
  Silhouette s(w, h, pitch, view);
  constexpr int kSub = 4;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (!antialias) {
        if (ray_hits(solid, ax, lo[ax.u] * pitch + pitch * (u + 0.5),
                     lo[ax.v] * pitch + pitch * (v + 0.5),
                     lo[ax.depth], hi[ax.depth], pitch, pitch)) {
          s.set(u, v);
        }
        continue;
      }
      int covered = 0;
      for (int sv = 0; sv < kSub; ++sv)
        for (int su = 0; su < kSub; ++su) {
          const double pu = lo[ax.u] * pitch + pitch * (u + (su + 0.5) / kSub);
          const double pv = lo[ax.v] * pitch + pitch * (v + (sv + 0.5) / kSub);
          if (ray_hits(solid, ax, pu, pv, lo[ax.depth], hi[ax.depth], pitch / kSub, pitch)) {
            ++covered;
          }
        }
      if (2 * covered >= kSub * kSub) s.set(u, v);
    }
  return s;
}

TriProjection render_triprojection(const AnalyticSolid& solid, double pitch,
                                   const SynthOptions& opts) {
  std::array<int, 3> lo, hi;
  lattice_range(solid, pitch, lo, hi, opts);
  return TriProjection{render_silhouette(solid, View::A, pitch, false, opts),
                       render_silhouette(solid, View::B, pitch, false, opts),
                       render_silhouette(solid, View::C, pitch, false, opts), pitch,
                       Vec3(lo[0] * pitch, lo[1] * pitch, lo[2] * pitch)};
}

// ---------------------------------------------------------------------------

namespace {

AnalyticSolid at_frame(const ScenePart& part, int frame) {
  AnalyticSolid s = part.solid;
  s.translation += frame * part.velocity;
  return s;
}

void check_scene(const Scene& scene) {
  if (scene.frames < 0 || scene.width < 1 || scene.height < 1 || !(scene.pitch > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "scene needs frames >= 0, positive size and pitch");
  }
  const int flow = static_cast<int>(scene.flow_axis);
  for (std::size_t i = 0; i < scene.parts.size(); ++i) {
    scene.parts[i].solid.validate();
    for (int k = 0; k < 3; ++k) {
      if (k != flow && scene.parts[i].velocity[k] != 0.0) {
        throw Error(ErrorKind::DegenerateInput,
                    "part " + std::to_string(i) + " moves off the flow axis");
      }
    }
  }
  std::vector<Vec3> lo(scene.parts.size()), hi(scene.parts.size());
  for (int f = 0; f < scene.frames; ++f) {
    for (std::size_t i = 0; i < scene.parts.size(); ++i) at_frame(scene.parts[i], f).world_bounds(lo[i], hi[i]);
    for (std::size_t i = 0; i < scene.parts.size(); ++i)
      for (std::size_t j = i + 1; j < scene.parts.size(); ++j) {
        const bool apart = (hi[i].array() < lo[j].array()).any() ||
                           (hi[j].array() < lo[i].array()).any();
        if (!apart) {
          throw Error(ErrorKind::OverlapDetected, "parts " + std::to_string(i) + " and " +
                                                      std::to_string(j) + " overlap at frame " +
                                                      std::to_string(f));
        }
      }
  }
}

// Depth extent of the imaged region for each view, in lattice steps: the
// window the other two cameras see along that axis.
int depth_extent(View view, int width, int height) {
  switch (view) {
    case View::A: return width;
    case View::B: return std::min(width, height);
    case View::C: return height;
  }
  return 0;
}

// A part voxelized once per sub-voxel phase, stored per view as runs of
// occupied depth indices under each pixel. Frames then only shift it by whole
// lattice steps and clip the runs to the imaged depth window.
struct ColumnRuns {
  int w = 0, h = 0;
  std::vector<std::uint32_t> offsets;           // w*h + 1
  std::vector<std::pair<int, int>> runs;        // [begin, end) depth indices
};

struct PartRaster {
  std::array<int, 3> lo{};
  std::array<ColumnRuns, 3> views;
};

PartRaster rasterize(const AnalyticSolid& solid, double pitch) {
  SynthOptions opts;
  opts.max_extent_voxels = 1 << 20;
  const VoxelGrid g = voxelize(solid, pitch, opts);
  PartRaster r;
  for (int k = 0; k < 3; ++k) r.lo[k] = static_cast<int>(std::lround(g.origin()[k] / pitch));
  const std::array<int, 3> n = g.dims();
  for (int vi = 0; vi < 3; ++vi) {
    const ViewAxes ax = axes_of(static_cast<View>(vi));
    ColumnRuns& c = r.views[vi];
    c.w = n[ax.u];
    c.h = n[ax.v];
    c.offsets.assign(static_cast<std::size_t>(c.w) * c.h + 1, 0);
    std::array<int, 3> idx{};
    for (int v = 0; v < c.h; ++v)
      for (int u = 0; u < c.w; ++u) {
        idx[ax.u] = u;
        idx[ax.v] = v;
        int start = -1;
        for (int d = 0; d <= n[ax.depth]; ++d) {
          idx[ax.depth] = d;
          const bool on = d < n[ax.depth] && g.at(idx[0], idx[1], idx[2]);
          if (on && start < 0) start = d;
          if (!on && start >= 0) {
            c.runs.emplace_back(start, d);
            start = -1;
          }
        }
        c.offsets[static_cast<std::size_t>(v) * c.w + u + 1] =
            static_cast<std::uint32_t>(c.runs.size());
      }
  }
  return r;
}

void draw_raster(GrayImage& img, const PartRaster& r, const std::array<int, 3>& shift, View view) {
  const ViewAxes ax = axes_of(view);
  const ColumnRuns& c = r.views[static_cast<int>(view)];
  const int ou = r.lo[ax.u] + shift[ax.u], ov = r.lo[ax.v] + shift[ax.v];
  const int od = r.lo[ax.depth] + shift[ax.depth];
  const int d0 = -od, d1 = depth_extent(view, img.width, img.height) - od;
  for (int v = std::max(0, -ov); v < std::min(c.h, img.height - ov); ++v)
    for (int u = std::max(0, -ou); u < std::min(c.w, img.width - ou); ++u) {
      const std::size_t col = static_cast<std::size_t>(v) * c.w + u;
      for (auto k = c.offsets[col]; k < c.offsets[col + 1]; ++k) {
        if (c.runs[k].first < d1 && c.runs[k].second > d0) {
          img.at(u + ou, v + ov) = kObjectLevel;
          break;
        }
      }
    }
}

}  // namespace

std::array<std::vector<Frame>, 3> compose_transit_scene(const Scene& scene, int threads) {
  check_scene(scene);

  // Whole-lattice shift and raster (one per distinct sub-voxel phase) of each
  // part at each frame.
  const std::size_t np = scene.parts.size();
  std::vector<std::array<int, 3>> shift(np * static_cast<std::size_t>(scene.frames));
  std::vector<std::size_t> which(shift.size());
  std::vector<AnalyticSolid> phased;
  {
    std::map<std::tuple<std::size_t, long long, long long, long long>, std::size_t> seen;
    for (int f = 0; f < scene.frames; ++f)
      for (std::size_t i = 0; i < np; ++i) {
        AnalyticSolid s = at_frame(scene.parts[i], f);
        std::array<int, 3> k;
        std::array<long long, 3> key;
        for (int a = 0; a < 3; ++a) {
          const double cells = std::floor(s.translation[a] / scene.pitch);
          k[a] = static_cast<int>(cells);
          s.translation[a] -= cells * scene.pitch;
          key[a] = std::llround(s.translation[a] / scene.pitch * 1e9);
        }
        const auto [it, fresh] = seen.try_emplace({i, key[0], key[1], key[2]}, phased.size());
        if (fresh) phased.push_back(s);
        const std::size_t slot = static_cast<std::size_t>(f) * np + i;
        shift[slot] = k;
        which[slot] = it->second;
      }
  }
  std::vector<PartRaster> rasters(phased.size());
  parallel_for(phased.size(), threads,
               [&](std::size_t j) { rasters[j] = rasterize(phased[j], scene.pitch); });

  std::array<std::vector<Frame>, 3> out;
  for (auto& v : out) v.resize(static_cast<std::size_t>(scene.frames));
  const std::size_t jobs = 3 * static_cast<std::size_t>(scene.frames);
  parallel_for(jobs, threads, [&](std::size_t job) {
    const int f = static_cast<int>(job / 3);
    const View view = static_cast<View>(job % 3);
    Frame fr;
    fr.view = view;
    fr.index = f;
    fr.timestamp_us = f * scene.frame_interval_us;
    fr.pitch = scene.pitch;
    fr.image = GrayImage(scene.width, scene.height, kBackgroundLevel);
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t slot = static_cast<std::size_t>(f) * np + i;
      draw_raster(fr.image, rasters[which[slot]], shift[slot], view);
    }

    if (scene.noise.sigma > 0.0 || scene.noise.salt_specks > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(scene.seed),
                        static_cast<std::uint32_t>(scene.seed >> 32),
                        static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(view)};
      std::mt19937_64 rng(seq);
      if (scene.noise.sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, scene.noise.sigma);
        for (auto& p : fr.image.pixels) {
          const double val = std::round(p + noise(rng));
          p = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0));
        }
      }
      std::uniform_int_distribution<int> pu(0, scene.width - 1), pv(0, scene.height - 1);
      for (int s = 0; s < scene.noise.salt_specks; ++s) {
        const int u = pu(rng), v = pv(rng);
        fr.image.at(u, v) = kObjectLevel;
      }
    }
    out[static_cast<int>(view)][static_cast<std::size_t>(f)] = std::move(fr);
  });
  return out;
}

Mat3 rotation_xyz_deg(double rx, double ry, double rz) {
  constexpr double d2r = std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(rx * d2r, Vec3::UnitX()) * Eigen::AngleAxisd(ry * d2r, Vec3::UnitY()) *
          Eigen::AngleAxisd(rz * d2r, Vec3::UnitZ()))
      .toRotationMatrix();
}

Mat3 notch_hiding_rotation() {
  const double h = std::sqrt(0.5);
  const Vec3 x = Vec3::UnitX(), u(0.0, h, h);
  Mat3 r;
  r.col(0) = (x + u) * h;
  r.col(1) = (x - u) * h;
  r.col(2) = r.col(0).cross(r.col(1));
  return r;
}

namespace {

Vec3 vec_from(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw Error(ErrorKind::InvalidManifest, std::string("'") + key + "' must be a 3-array");
  }
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

json vec_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open scene " + path.string());
  Scene sc;
  try {
    const json j = json::parse(in);
    sc.frames = j.value("frames", sc.frames);
    if (j.contains("image_size")) {
      sc.width = j.at("image_size").at(0).get<int>();
      sc.height = j.at("image_size").at(1).get<int>();
    }
    sc.pitch = j.value("pitch_um", sc.pitch);
    sc.flow_axis = axis_from_string(j.value("flow_axis", std::string("Z")));
    sc.frame_interval_us = j.value("frame_interval_us", sc.frame_interval_us);
    sc.seed = j.value("seed", sc.seed);
    if (j.contains("noise")) {
      sc.noise.sigma = j.at("noise").value("sigma", 0.0);
      sc.noise.salt_specks = j.at("noise").value("salt_specks", 0);
    }
    for (const auto& s : j.value("solids", json::array())) {
      ScenePart part;
      AnalyticSolid& sol = part.solid;
      sol.kind = solid_kind_from_string(s.at("kind").get<std::string>());
      if (sol.kind == SolidKind::Sphere) {
        const double r = s.at("radius").get<double>();
        sol.size = Vec3(r, r, r);
      } else {
        sol.size = vec_from(s, "size", sol.size);
      }
      if (s.contains("eps")) {
        sol.eps1 = s.at("eps").at(0).get<double>();
        sol.eps2 = s.at("eps").at(1).get<double>();
      }
      sol.notch = s.value("notch", 0.0);
      const Vec3 rot = vec_from(s, "rotation_deg", Vec3::Zero());
      sol.rotation = rotation_xyz_deg(rot.x(), rot.y(), rot.z());
      sol.translation = vec_from(s, "position", Vec3::Zero());
      part.velocity = vec_from(s, "velocity", Vec3::Zero());
      sol.validate();
      sc.parts.push_back(part);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidManifest, "scene " + path.string() + ": " + e.what());
  }
  return sc;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  json j;
  j["frames"] = scene.frames;
  j["image_size"] = {scene.width, scene.height};
  j["pitch_um"] = scene.pitch;
  j["flow_axis"] = std::string(to_string(scene.flow_axis));
  j["frame_interval_us"] = scene.frame_interval_us;
  j["seed"] = scene.seed;
  j["noise"] = {{"sigma", scene.noise.sigma}, {"salt_specks", scene.noise.salt_specks}};
  json solids = json::array();
  for (const auto& part : scene.parts) {
    const auto& s = part.solid;
    json e;
    e["kind"] = std::string(to_string(s.kind));
    if (s.kind == SolidKind::Sphere) {
      e["radius"] = s.size.x();
    } else {
      e["size"] = vec_to(s.size);
    }
    if (s.kind == SolidKind::Superellipsoid) e["eps"] = {s.eps1, s.eps2};
    if (s.kind == SolidKind::LPrism) e["notch"] = s.notch;
    // Stored as X-Y-Z Euler angles.
    const Vec3 ang = s.rotation.eulerAngles(0, 1, 2) * (180.0 / std::numbers::pi);
    e["rotation_deg"] = vec_to(ang);
    e["position"] = vec_to(s.translation);
    e["velocity"] = vec_to(part.velocity);
    solids.push_back(e);
  }
  j["solids"] = solids;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write scene " + path.string());
  out << j.dump(2) << "\n";
}

void write_frames(const std::array<std::vector<Frame>, 3>& frames,
                  const std::filesystem::path& dir) {
  for (int v = 0; v < 3; ++v) {
    const std::string name(to_string(static_cast<View>(v)));
    const auto sub = dir / name;
    std::filesystem::create_directories(sub);
    for (const auto& fr : frames[v]) {
      char file[32];
      std::snprintf(file, sizeof file, "%s_%06d.pgm", name.c_str(), fr.index);
      write_pgm(sub / file, fr.image);
    }
  }
}

}  // namespace ocular
