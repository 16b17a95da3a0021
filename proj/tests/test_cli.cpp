#include "ocular/cli.hpp"
#include "ocular/error.hpp"
#include "ocular/image.hpp"
#include "ocular/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ocular;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome ocular_run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path fresh(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ocular_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

GrayImage disc(double diameter, int size = 160) {
  GrayImage img(size, size, kBackgroundLevel);
  const double c = size / 2.0 + 0.3;
  for (int v = 0; v < size; ++v)
    for (int u = 0; u < size; ++u)
      if (std::hypot(u + 0.5 - c, v + 0.5 - c) <= diameter / 2) img.at(u, v) = kObjectLevel;
  return img;
}

// Small transit scene: ellipsoids on distinct XY lanes moving along +Z,
// turned about the flow axis only so that the hull keeps the solid's box.
Scene lanes_scene(int n) {
  Scene s;
  s.frames = 40;
  s.width = s.height = 160;
  s.pitch = 1.0;
  s.noise = {6.0, 10};
  s.seed = 11;
  const double lane[4][2] = {{40.3, 42.1}, {112.6, 110.2}, {41.7, 113.4}, {114.8, 38.9}};
  for (int k = 0; k < n; ++k) {
    ScenePart p;
    p.solid = AnalyticSolid::ellipsoid(17 - k, 12, 8 + 0.5 * k)
                  .posed(rotation_xyz_deg(0, 0, 15.0 + 20 * k), Vec3(lane[k][0], lane[k][1], -30.0 - 90 * k));
    p.velocity = Vec3(0, 0, 14);
    s.parts.push_back(p);
  }
  return s;
}

fs::path simulate(const Scene& scene, const fs::path& dir) {
  save_scene(scene, dir / "scene.json");
  const auto r = ocular_run({"simulate", (dir / "scene.json").string(), "--out", (dir / "sim").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir / "sim" / "manifest.json";
}

std::string manifest_json(const std::string& frames_dir, const std::string& extra = "") {
  return R"({"run_id": "r1", "frames": {"A": ")" + frames_dir + R"(", "B": ")" + frames_dir +
         R"(", "C": ")" + frames_dir + R"("}, "calibration": "cal.txt")" + extra + "}";
}

}  // namespace

// ---------------------------------------------------------------------------
// calibrate

TEST(CliCalibrate, DiscsGiveProfile) {
  const auto d = fresh("cal");
  write_pgm(d / "s.pgm", disc(100));
  const std::string s = (d / "s.pgm").string();
  const auto r = ocular_run({"calibrate", "--a", s, "--b", s, "--c", s, "--out", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto p = read_profile(d / "out" / "calibration.txt");
  for (int v = 0; v < 3; ++v) EXPECT_NEAR(p.scale_um_per_px[v], 2.5, 0.005);
  EXPECT_EQ(p.created_from, (std::vector<std::string>{s, s, s}));
}

TEST(CliCalibrate, MissingFileAndDivergence) {
  const auto d = fresh("cal_bad");
  write_pgm(d / "s100.pgm", disc(100));
  write_pgm(d / "s90.pgm", disc(90));
  const std::string a = (d / "s100.pgm").string(), c = (d / "s90.pgm").string();
  const std::string missing = (d / "nope.pgm").string();
  const auto r1 = ocular_run({"calibrate", "--a", a, "--b", missing, "--c", a, "--out", d.string()});
  EXPECT_EQ(r1.code, 1);
  EXPECT_NE(r1.err.find(missing), std::string::npos) << r1.err;
  const auto r2 = ocular_run({"calibrate", "--a", a, "--b", a, "--c", c, "--out", d.string()});
  EXPECT_EQ(r2.code, 2) << r2.err;
  EXPECT_FALSE(fs::exists(d / "calibration.txt"));
}

TEST(CliUsage, ExitCodes) {
  EXPECT_EQ(ocular_run({}).code, 1);
  EXPECT_EQ(ocular_run({"frobnicate"}).code, 1);
  EXPECT_EQ(ocular_run({"report"}).code, 1);
  EXPECT_EQ(ocular_run({"analyze", "m.json", "--threads", "0"}).code, 1);
  const auto h = ocular_run({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("import-voxels"), std::string::npos);
}

// ---------------------------------------------------------------------------
// manifest

TEST(CliManifest, ValidationFailsBeforeProcessing) {
  const auto d = fresh("manifest");
  fs::create_directories(d / "frames");
  std::ofstream(d / "cal.txt") << "scale_a_um_per_px = 1\nscale_b_um_per_px = 1\nscale_c_um_per_px = 1\n";
  auto check = [&](const std::string& body, const std::string& needle) {
    std::ofstream(d / "m.json") << body;
    const auto r = ocular_run({"analyze", (d / "m.json").string(), "--out", (d / "out").string()});
    EXPECT_EQ(r.code, 1) << body;
    EXPECT_NE(r.err.find(needle), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(d / "out")) << body;
  };
  check(manifest_json("missing"), "frame directory does not exist");
  check(manifest_json("frames", R"(, "flow_axis": "X")"), "flow_axis");
  check(manifest_json("frames", R"(, "matching": {"flow_tolerance_um": 0})"), "tolerances");
  check(manifest_json("frames", R"(, "tracking": {"gating": 3})"), "unknown key 'tracking.gating'");
  check(manifest_json("frames", R"(, "orientation": {"A": {"rotate_deg": 45}})"), "multiple of 90");
  check(manifest_json("frames", R"(, "detection": {"min_area": "nine"})"), "InvalidManifest");
  check(manifest_json("frames", R"(, "detection": {"polarity": "sideways"})"), "InvalidManifest");
  check("{not json", "not valid JSON");
  check(R"({"run_id": "x"})", "required");

  std::ofstream(d / "m.json") << manifest_json("frames");
  const auto m = cli::load_manifest(d / "m.json");
  EXPECT_EQ(m.frame_dirs[1], d / "frames");
  EXPECT_EQ(m.detection.min_area, 9);
  EXPECT_EQ(m.flow_axis, Axis::Z);

  cli::RunManifest w = m;
  w.flow_axis = Axis::Y;
  w.detection.fill_holes = true;
  w.orientation[2] = {180, true, false};
  w.matching.sync_tolerance_us = 7;
  cli::save_manifest(w, d / "m2.json");
  const auto back = cli::load_manifest(d / "m2.json");
  EXPECT_EQ(back.frame_dirs[2], m.frame_dirs[2]);
  EXPECT_EQ(back.calibration, m.calibration);
  EXPECT_EQ(back.flow_axis, Axis::Y);
  EXPECT_TRUE(back.detection.fill_holes);
  EXPECT_EQ(back.orientation[2].rotate_deg, 180);
  EXPECT_TRUE(back.orientation[2].flip_u);
  EXPECT_EQ(back.matching.sync_tolerance_us, 7);
  fs::remove_all(d);
}

// ---------------------------------------------------------------------------
// analyze

TEST(CliAnalyze, EmptyFrameDirectories) {
  const auto d = fresh("empty");
  fs::create_directories(d / "frames");
  std::ofstream(d / "cal.txt") << "scale_a_um_per_px = 2\nscale_b_um_per_px = 2\nscale_c_um_per_px = 2\n";
  std::ofstream(d / "m.json") << manifest_json("frames", R"(, "output": "out")");
  const auto r = ocular_run({"analyze", (d / "m.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "particles=0 losses=0 mean_deficit=0\n");
  EXPECT_EQ(lines_of(d / "out" / "records.csv"), std::vector<std::string>{std::string(kRecordsHeader)});
  EXPECT_EQ(slurp(d / "out" / "manifest.json"), slurp(d / "m.json"));
  fs::remove_all(d);
}

TEST(CliAnalyze, SimulatedSceneIsCompleteAndDeterministic) {
  const auto d = fresh("sim");
  const Scene scene = lanes_scene(4);
  const auto manifest = simulate(scene, d);
  const auto r1 = ocular_run({"analyze", manifest.string(), "--out", (d / "run1").string(), "--threads", "1"});
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_EQ(r1.out.rfind("particles=4 losses=0 mean_deficit=", 0), 0u) << r1.out;
  const auto r2 = ocular_run({"analyze", manifest.string(), "--out", (d / "run2").string(), "--threads", "3"});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(r1.out, r2.out);
  for (const char* f : {"records.csv", "psd.csv", "zingg.csv", "losses.csv", "consistency.csv"}) {
    EXPECT_EQ(slurp(d / "run1" / f), slurp(d / "run2" / f)) << f;
  }

  // Sizes follow the ground truth (hull of the posed solids).
  const auto recs = read_records_csv(d / "run1" / "records.csv");
  ASSERT_EQ(recs.size(), 4u);
  const auto truth = lines_of(d / "sim" / "truth.csv");
  ASSERT_EQ(truth.size(), 5u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.run_id, "scene");
    EXPECT_LT(r.consistency_deficit_max, 0.01);
    bool found = false;
    for (std::size_t k = 0; k < scene.parts.size(); ++k) {
      const auto t = scene.parts[k].solid.dims();
      const double got[3] = {r.S, r.I, r.L};
      bool close = true;
      for (int i = 0; i < 3; ++i) close &= std::abs(got[i] - t[i]) <= 0.05 * t[i] + 1;
      found |= close;
    }
    EXPECT_TRUE(found) << r.particle_id << " S=" << r.S << " I=" << r.I << " L=" << r.L;
  }
  fs::remove_all(d);
}

TEST(CliAnalyze, ResimulationIsByteIdentical) {
  const auto d = fresh("resim");
  const Scene scene = lanes_scene(2);
  fs::create_directories(d / "one");
  fs::create_directories(d / "two");
  const auto m1 = simulate(scene, d / "one");
  const auto m2 = simulate(scene, d / "two");
  ASSERT_EQ(ocular_run({"analyze", m1.string()}).code, 0);
  ASSERT_EQ(ocular_run({"analyze", m2.string()}).code, 0);
  EXPECT_EQ(slurp(d / "one" / "sim" / "A" / "A_000007.pgm"), slurp(d / "two" / "sim" / "A" / "A_000007.pgm"));
  EXPECT_EQ(slurp(d / "one" / "sim" / "analysis" / "records.csv"),
            slurp(d / "two" / "sim" / "analysis" / "records.csv"));

  // --seed changes the noise, and is recorded in the scene copy.
  const auto r = ocular_run({"simulate", (d / "one" / "scene.json").string(), "--out", (d / "seeded").string(),
                             "--seed", "99"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("seed=99"), std::string::npos);
  EXPECT_EQ(load_scene(d / "seeded" / "scene.json").seed, 99u);
  EXPECT_NE(slurp(d / "one" / "sim" / "A" / "A_000007.pgm"), slurp(d / "seeded" / "A" / "A_000007.pgm"));
  fs::remove_all(d);
}

TEST(CliAnalyze, ParticleMissingFromOneViewIsOneLoss) {
  const auto d = fresh("twoview");
  const auto manifest = simulate(lanes_scene(3), d);
  // Erase part 0 (lane x ~ 40, y ~ 42) from every C frame.
  for (const auto& f : list_frames(d / "sim" / "C", View::C)) {
    GrayImage img = read_pgm(f.path);
    for (int v = 15; v < 70; ++v)
      for (int u = 15; u < 70; ++u) img.at(u, v) = kBackgroundLevel;
    write_pgm(f.path, img);
  }
  const auto r = ocular_run({"analyze", manifest.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("particles=2 losses=1 ", 0), 0u) << r.out;
  const auto losses = lines_of(d / "sim" / "analysis" / "losses.csv");
  ASSERT_GE(losses.size(), 3u);
  EXPECT_EQ(losses[0], cli::kLossHeader);
  for (std::size_t i = 1; i < losses.size(); ++i) {
    EXPECT_EQ(losses[i].rfind("scene,", 0), 0u);
    EXPECT_NE(losses[i].find(",missing-view"), std::string::npos) << losses[i];
    EXPECT_EQ(losses[i].find(",C,"), std::string::npos) << losses[i];
  }
  fs::remove_all(d);
}

TEST(CliAnalyze, DeclaredOrientationUndoesCameraRotation) {
  const auto d = fresh("orient");
  const auto manifest = simulate(lanes_scene(2), d);
  ASSERT_EQ(ocular_run({"analyze", manifest.string(), "--out", (d / "base").string()}).code, 0);

  // Camera B delivers mirrored images, then rotated by 90 degrees.
  fs::create_directories(d / "B_raw");
  for (const auto& f : list_frames(d / "sim" / "B", View::B)) {
    write_pgm(d / "B_raw" / f.path.filename(), orient(orient(read_pgm(f.path), 0, true, false), 90, false, false));
  }
  auto m = cli::load_manifest(manifest);
  m.frame_dirs[1] = d / "B_raw";
  m.orientation[1] = {270, true, false};  // rotate back, then mirror
  cli::save_manifest(m, d / "sim" / "rotated.json");

  ASSERT_EQ(ocular_run({"analyze", (d / "sim" / "rotated.json").string(), "--out", (d / "rot").string()}).code,
            0);
  EXPECT_EQ(slurp(d / "base" / "records.csv"), slurp(d / "rot" / "records.csv"));
  fs::remove_all(d);
}

// ---------------------------------------------------------------------------
// import-voxels

namespace {

void write_stack(const VoxelGrid& g, const fs::path& dir) {
  fs::create_directories(dir);
  for (int z = 0; z < g.nz(); ++z) {
    GrayImage img(g.nx(), g.ny(), 0);
    for (int y = 0; y < g.ny(); ++y)
      for (int x = 0; x < g.nx(); ++x)
        if (g.at(x, y, z)) img.at(x, y) = 255;
    char name[32];
    std::snprintf(name, sizeof name, "slice_%06d.pgm", z + 3);
    write_pgm(dir / name, img);
  }
}

}  // namespace

TEST(CliImport, CubeStack) {
  const auto d = fresh("cube");
  VoxelGrid g(16, 16, 14, 1.0);
  for (int z = 2; z < 12; ++z)
    for (int y = 3; y < 13; ++y)
      for (int x = 4; x < 14; ++x) g.set(x, y, z);
  write_stack(g, d / "ct");
  const auto r = ocular_run({"import-voxels", (d / "ct").string(), "--pitch", "2.5", "--out", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "records=1 skipped=0\n");
  const auto recs = read_records_csv(d / "out" / "records.csv");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].run_id, "ct");
  EXPECT_EQ(recs[0].source, SourceKind::VoxelImport);
  EXPECT_EQ(recs[0].volume, 1000 * 2.5 * 2.5 * 2.5);
  for (double x : {recs[0].S, recs[0].I, recs[0].L}) EXPECT_NEAR(x, 25.0, 0.5 * 2.5);

  const auto stack = cli::load_slice_stack(d / "ct", 2.5);
  for (int z = 0; z < g.nz(); ++z)
    for (int y = 0; y < g.ny(); ++y)
      for (int x = 0; x < g.nx(); ++x) ASSERT_EQ(stack.at(x, y, z), g.at(x, y, z));
  fs::remove_all(d);
}

TEST(CliImport, SeparatedSolidsAndBadStacks) {
  const auto d = fresh("solids");
  VoxelGrid g(60, 24, 24, 1.0);
  for (int k = 0; k < 3; ++k) {
    const AnalyticSolid s = AnalyticSolid::sphere(6 + k).posed(Mat3::Identity(), Vec3(10.3 + 19 * k, 12.2, 11.7));
    for (int z = 0; z < g.nz(); ++z)
      for (int y = 0; y < g.ny(); ++y)
        for (int x = 0; x < g.nx(); ++x)
          if (s.contains(g.voxel_center(x, y, z))) g.set(x, y, z);
  }
  g.set(58, 1, 1);  // a stray voxel is skipped, not fatal
  write_stack(g, d / "ct");
  const auto r = ocular_run({"import-voxels", (d / "ct").string(), "--pitch", "1", "--run-id", "mu",
                             "--out", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "records=3 skipped=1\n");
  EXPECT_NE(r.err.find("skipped v0004"), std::string::npos);
  const auto recs = read_records_csv(d / "out" / "records.csv");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_GT(recs[0].volume, recs[1].volume);  // largest first

  write_pgm(d / "ct" / "slice_000100.pgm", GrayImage(60, 24));
  EXPECT_EQ(ocular_run({"import-voxels", (d / "ct").string(), "--pitch", "1", "--out", d.string()}).code, 1);
  fs::remove(d / "ct" / "slice_000100.pgm");
  write_pgm(d / "ct" / "slice_000027.pgm", GrayImage(61, 24));
  const auto bad = ocular_run({"import-voxels", (d / "ct").string(), "--pitch", "1", "--out", d.string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("InconsistentSliceDims"), std::string::npos) << bad.err;
  try {
    cli::load_slice_stack(d / "ct", 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentSliceDims);
  }
  fs::create_directories(d / "none");
  EXPECT_EQ(ocular_run({"import-voxels", (d / "none").string(), "--pitch", "1", "--out", d.string()}).code, 1);
  fs::remove_all(d);
}

TEST(CliImport, HundredFiftyFourSolids) {
  // 154 small solids on an 11 x 14 grid.
  VoxelGrid g(11 * 14, 14 * 14, 14, 1.0);
  std::uint64_t state = 5;
  auto U = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) / 9007199254740992.0;
  };
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 14; ++j) {
      const AnalyticSolid s = AnalyticSolid::ellipsoid(4 + 2 * U(), 3.5 + U(), 3 + U())
                                  .posed(rotation_xyz_deg(360 * U(), 360 * U(), 360 * U()),
                                         Vec3(14 * i + 7 + 0.3 * U(), 14 * j + 7 + 0.3 * U(), 7.1));
      Vec3 lo, hi;
      s.world_bounds(lo, hi);
      for (int z = 0; z < g.nz(); ++z)
        for (int y = std::max(0, int(lo.y())); y < std::min(g.ny(), int(hi.y()) + 1); ++y)
          for (int x = std::max(0, int(lo.x())); x < std::min(g.nx(), int(hi.x()) + 1); ++x)
            if (s.contains(g.voxel_center(x, y, z))) g.set(x, y, z);
    }
  std::vector<std::string> skipped;
  const auto recs = cli::import_voxels(g, "ct154", 2, &skipped);
  EXPECT_EQ(recs.size(), 154u);
  EXPECT_TRUE(skipped.empty());
}

// ---------------------------------------------------------------------------
// report / compare

namespace {

void write_run(const fs::path& p, int n, double scale) {
  std::vector<ParticleRecord> rs;
  for (int i = 0; i < n; ++i) {
    ParticleRecord r;
    r.particle_id = "p" + std::to_string(i);
    r.run_id = p.stem().string();
    r.I = scale * (20 + (i * 37) % 70);
    r.S = 0.6 * r.I;
    r.L = 1.3 * r.I;
    r.volume = r.S * r.I * r.L / 2;
    r.surface_area = 3 * r.I * r.I;
    r.indices.elongation = r.I / r.L;
    r.indices.flatness = r.S / r.I;
    r.indices.zingg = zingg_classify(r.indices.elongation, r.indices.flatness);
    r.indices.convexity = 1;
    rs.push_back(r);
  }
  write_records_csv(rs, p);
}

}  // namespace

TEST(CliReport, EmptyInputAndFiles) {
  const auto d = fresh("report");
  write_run(d / "empty.csv", 0, 1);
  const auto r = ocular_run({"report", (d / "empty.csv").string(), "--out", (d / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("EmptyInput"), std::string::npos) << r.err;

  write_run(d / "a.csv", 30, 1);
  const auto ok = ocular_run({"report", (d / "a.csv").string(), "--out", (d / "o").string(), "--weighting",
                              "volume", "--bins", "5"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(lines_of(d / "o" / "zingg.csv").size(), 26u);
  EXPECT_EQ(lines_of(d / "o" / "psd.csv").size(), 31u);
  EXPECT_EQ(ocular_run({"report", (d / "a.csv").string(), "--out", d.string(), "--metric", "mass"}).code, 1);
  fs::remove_all(d);
}

TEST(CliCompare, IdenticalRunsAndSources) {
  const auto d = fresh("compare");
  write_run(d / "r1.csv", 40, 1);
  fs::copy_file(d / "r1.csv", d / "r2.csv");
  fs::copy_file(d / "r1.csv", d / "r3.csv");
  const auto r = ocular_run({"compare", (d / "r1.csv").string(), (d / "r2.csv").string(),
                             (d / "r3.csv").string(), "--out", (d / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "runs=3 max_ks_d=0\n");
  const auto rows = lines_of(d / "o" / "comparison.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1], "r1,r1,0,0,0,0");

  write_run(d / "big.csv", 40, 1.1);
  const auto s = ocular_run({"compare", (d / "big.csv").string(), (d / "r1.csv").string(), "--sources", "--out",
                             (d / "s").string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("median_bias="), std::string::npos);
  EXPECT_EQ(lines_of(d / "s" / "sources.csv").size(), 41u);

  write_run(d / "empty.csv", 0, 1);
  const auto e = ocular_run({"compare", (d / "r1.csv").string(), (d / "empty.csv").string(), "--out",
                             (d / "e").string()});
  EXPECT_EQ(e.code, 1);
  EXPECT_NE(e.err.find("EmptyRun"), std::string::npos);
  EXPECT_EQ(ocular_run({"compare", (d / "r1.csv").string(), "--out", d.string()}).code, 1);
  fs::remove_all(d);
}
