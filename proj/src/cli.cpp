#include "ocular/cli.hpp"

#include "ocular/error.hpp"
#include "ocular/parallel.hpp"
#include "ocular/reconstruct.hpp"
#include "ocular/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ocular::cli {
namespace {

[[noreturn]] void bad(const fs::path& file, const std::string& what) {
  throw Error(ErrorKind::InvalidManifest, file.string() + ": " + what);
}

void only_keys(const json& j, std::initializer_list<std::string_view> keys, const fs::path& file,
               const std::string& where) {
  if (!j.is_object()) bad(file, where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      bad(file, "unknown key '" + (where.empty() ? k : where + "." + k) + "'");
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  const fs::path rel = p.lexically_normal().lexically_relative(base.lexically_normal());
  if (rel.empty() || *rel.begin() == "..") return p.string();
  return rel.generic_string();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::IoFailure, "write failed: " + path.string());
}

std::string shortest(double x) {
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, x).ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// manifest

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad(path, std::string("not valid JSON: ") + e.what());
  }
  const fs::path base = path.parent_path();
  RunManifest m;
  m.source = path;
  try {
    only_keys(j,
              {"run_id", "frames", "calibration", "flow_axis", "frame_interval_us", "orientation",
               "detection", "tracking", "matching", "output"},
              path, "");
    if (!j.contains("run_id") || !j.contains("frames") || !j.contains("calibration")) {
      bad(path, "run_id, frames and calibration are required");
    }
    m.run_id = j.at("run_id").get<std::string>();
    if (m.run_id.empty()) bad(path, "run_id is empty");

    const json& frames = j.at("frames");
    only_keys(frames, {"A", "B", "C"}, path, "frames");
    for (int v = 0; v < 3; ++v) {
      const std::string name(to_string(static_cast<View>(v)));
      if (!frames.contains(name)) bad(path, "frames." + name + " is required");
      m.frame_dirs[v] = resolve(base, frames.at(name).get<std::string>());
      if (!fs::is_directory(m.frame_dirs[v])) {
        bad(path, "frame directory does not exist: " + m.frame_dirs[v].string());
      }
    }
    m.calibration = resolve(base, j.at("calibration").get<std::string>());
    if (!fs::is_regular_file(m.calibration)) {
      bad(path, "calibration profile does not exist: " + m.calibration.string());
    }

    const std::string flow = j.value("flow_axis", std::string("Z"));
    if (flow != "Y" && flow != "Z") bad(path, "flow_axis must be Y or Z");
    m.flow_axis = axis_from_string(flow);
    m.frame_interval_us = j.value("frame_interval_us", m.frame_interval_us);
    if (!(m.frame_interval_us > 0)) bad(path, "frame_interval_us must be > 0");

    if (j.contains("orientation")) {
      const json& o = j.at("orientation");
      only_keys(o, {"A", "B", "C"}, path, "orientation");
      for (int v = 0; v < 3; ++v) {
        const std::string name(to_string(static_cast<View>(v)));
        if (!o.contains(name)) continue;
        const json& e = o.at(name);
        only_keys(e, {"rotate_deg", "flip_u", "flip_v"}, path, "orientation." + name);
        auto& ov = m.orientation[v];
        ov.rotate_deg = e.value("rotate_deg", 0);
        ov.flip_u = e.value("flip_u", false);
        ov.flip_v = e.value("flip_v", false);
        if (ov.rotate_deg % 90 != 0) bad(path, "orientation." + name + ".rotate_deg must be a multiple of 90");
      }
    }

    if (j.contains("detection")) {
      const json& d = j.at("detection");
      only_keys(d,
                {"threshold", "threshold_value", "otsu_min_contrast", "polarity", "min_area",
                 "fill_holes", "opening"},
                path, "detection");
      auto& det = m.detection;
      try {
        if (d.contains("threshold")) {
          det.threshold.method = threshold_method_from_string(d.at("threshold").get<std::string>());
        }
        if (d.contains("polarity")) det.polarity = polarity_from_string(d.at("polarity").get<std::string>());
      } catch (const Error& e) {
        bad(path, e.what());
      }
      det.threshold.value = d.value("threshold_value", det.threshold.value);
      det.threshold.otsu_min_contrast = d.value("otsu_min_contrast", det.threshold.otsu_min_contrast);
      det.min_area = d.value("min_area", det.min_area);
      det.fill_holes = d.value("fill_holes", det.fill_holes);
      det.opening = d.value("opening", det.opening);
      if (det.threshold.value < 0 || det.threshold.value > 256) bad(path, "threshold_value out of range");
      if (det.min_area < 0) bad(path, "min_area must be >= 0");
      if (det.opening < 1) bad(path, "opening must be >= 1");
    }

    if (j.contains("tracking")) {
      const json& t = j.at("tracking");
      only_keys(t, {"gating_px", "max_gap"}, path, "tracking");
      m.tracking.gating_px = t.value("gating_px", m.tracking.gating_px);
      m.tracking.max_gap = t.value("max_gap", m.tracking.max_gap);
      if (!(m.tracking.gating_px > 0)) bad(path, "gating_px must be > 0");
      if (m.tracking.max_gap < 0) bad(path, "max_gap must be >= 0");
    }

    if (j.contains("matching")) {
      const json& t = j.at("matching");
      only_keys(t, {"sync_tolerance_us", "flow_tolerance_um", "transverse_tolerance_um"}, path, "matching");
      auto& mc = m.matching;
      mc.sync_tolerance_us = t.value("sync_tolerance_us", mc.sync_tolerance_us);
      mc.flow_tolerance_um = t.value("flow_tolerance_um", mc.flow_tolerance_um);
      mc.transverse_tolerance_um = t.value("transverse_tolerance_um", mc.transverse_tolerance_um);
      if (!(mc.sync_tolerance_us > 0) || !(mc.flow_tolerance_um > 0) || !(mc.transverse_tolerance_um > 0)) {
        bad(path, "matching tolerances must be > 0");
      }
    }

    if (j.contains("output")) m.output = resolve(base, j.at("output").get<std::string>());
  } catch (const json::exception& e) {
    bad(path, e.what());
  }
  return m;
}

void save_manifest(const RunManifest& m, const fs::path& path) {
  const fs::path base = path.parent_path();
  json j;
  j["run_id"] = m.run_id;
  for (int v = 0; v < 3; ++v) {
    j["frames"][std::string(to_string(static_cast<View>(v)))] = relative_to(m.frame_dirs[v], base);
  }
  j["calibration"] = relative_to(m.calibration, base);
  j["flow_axis"] = std::string(to_string(m.flow_axis));
  j["frame_interval_us"] = m.frame_interval_us;
  for (int v = 0; v < 3; ++v) {
    const auto& o = m.orientation[v];
    j["orientation"][std::string(to_string(static_cast<View>(v)))] = {
        {"rotate_deg", o.rotate_deg}, {"flip_u", o.flip_u}, {"flip_v", o.flip_v}};
  }
  const auto& d = m.detection;
  j["detection"] = {{"threshold", std::string(to_string(d.threshold.method))},
                    {"threshold_value", d.threshold.value},
                    {"otsu_min_contrast", d.threshold.otsu_min_contrast},
                    {"polarity", std::string(to_string(d.polarity))},
                    {"min_area", d.min_area},
                    {"fill_holes", d.fill_holes},
                    {"opening", d.opening}};
  j["tracking"] = {{"gating_px", m.tracking.gating_px}, {"max_gap", m.tracking.max_gap}};
  j["matching"] = {{"sync_tolerance_us", m.matching.sync_tolerance_us},
                   {"flow_tolerance_um", m.matching.flow_tolerance_um},
                   {"transverse_tolerance_um", m.matching.transverse_tolerance_um}};
  if (!m.output.empty()) j["output"] = relative_to(m.output, base);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  close_out(out, path);
}

// ---------------------------------------------------------------------------
// analyze

AnalyzeSummary analyze(const RunManifest& m, const fs::path& out_dir, int threads) {
  const CalibrationProfile profile = read_profile(m.calibration);
  std::array<std::vector<FrameFile>, 3> files;
  for (int v = 0; v < 3; ++v) files[v] = list_frames(m.frame_dirs[v], static_cast<View>(v));

  StreamConfig cfg;
  cfg.detection = m.detection;
  cfg.tracking = m.tracking;
  cfg.matching = m.matching;
  cfg.flow_axis = m.flow_axis;
  const auto loader = [&](View view, std::size_t i) {
    const int v = static_cast<int>(view);
    const FrameFile& f = files[v][i];
    const ViewOrientation& o = m.orientation[v];
    Frame fr;
    fr.view = view;
    fr.index = f.index;
    fr.timestamp_us = f.index * m.frame_interval_us;
    fr.image = orient(read_image(f.path), o.rotate_deg, o.flip_u, o.flip_v);
    fr.pitch = profile.scale(view);
    return fr;
  };
  const StreamResult stream =
      process_stream({files[0].size(), files[1].size(), files[2].size()}, loader, cfg, threads);

  // Reconstruct and measure each matched particle into its own slot.
  const auto& parts = stream.match.particles;
  struct Slot {
    std::optional<ParticleRecord> record;
    ConsistencyReport report;
    std::string failure;
  };
  std::vector<Slot> slots(parts.size());
  parallel_for(parts.size(), threads, [&](std::size_t k) {
    try {
      const Reconstruction rc = reconstruct_particle(parts[k].projection);
      ParticleRecord r = measure(rc.solid, "", m.run_id, SourceKind::Reconstructed);
      r.frame_ref = parts[k].frame_index;
      r.consistency_deficit_max = rc.report.max_deficit();
      slots[k].record = std::move(r);
      slots[k].report = rc.report;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput && e.kind() != ErrorKind::EmptyIntersection) throw;
      slots[k].failure = e.what();
    }
  });

  fs::create_directories(out_dir);
  std::vector<ParticleRecord> records;
  std::vector<std::string> warnings = stream.warnings;
  const fs::path loss_path = out_dir / "losses.csv";
  const fs::path cons_path = out_dir / "consistency.csv";
  auto losses = open_out(loss_path);
  auto cons = open_out(cons_path);
  losses << kLossHeader << '\n';
  cons << kConsistencyHeader << '\n';
  const std::string run = csv_field(m.run_id);
  for (const auto& l : stream.match.losses) {
    losses << run << ',' << to_string(l.view) << ',' << l.track_id << ',' << to_string(l.reason) << '\n';
  }
  std::size_t too_small = 0;
  double deficit_sum = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    Slot& s = slots[k];
    if (!s.record) {
      ++too_small;
      for (int v = 0; v < 3; ++v)
        for (int id : parts[k].track_ids[v])
          losses << run << ',' << to_string(static_cast<View>(v)) << ',' << id << ','
                 << to_string(LossReason::TooSmall) << '\n';
      warnings.push_back("frame " + std::to_string(parts[k].frame_index) + ": " + s.failure);
      continue;
    }
    char id[32];
    std::snprintf(id, sizeof id, "p%04zu", records.size() + 1);
    s.record->particle_id = id;
    deficit_sum += s.record->consistency_deficit_max;
    cons << id << ',' << parts[k].frame_index << ',' << format_number(s.report.deficit[0]) << ','
         << format_number(s.report.deficit[1]) << ',' << format_number(s.report.deficit[2]) << ','
         << (s.report.consistent ? "true" : "false") << '\n';
    records.push_back(std::move(*s.record));
  }
  close_out(losses, loss_path);
  close_out(cons, cons_path);
  if (!warnings.empty()) {
    const fs::path wp = out_dir / "warnings.txt";
    auto w = open_out(wp);
    for (const auto& line : warnings) w << line << '\n';
    close_out(w, wp);
  }

  AnalyzeSummary summary;
  summary.particles = records.size();
  summary.losses = static_cast<std::size_t>(stream.match.lost_particles) + too_small;
  summary.mean_deficit = records.empty() ? 0.0 : deficit_sum / static_cast<double>(records.size());
  summary.warnings = warnings.size();

  emit_reports(make_report(std::move(records)), out_dir);
  if (!m.source.empty()) {
    const fs::path copy = out_dir / "manifest.json";
    if (!fs::exists(copy) || !fs::equivalent(copy, m.source)) {
      fs::copy_file(m.source, copy, fs::copy_options::overwrite_existing);
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// voxel import

VoxelGrid load_slice_stack(const fs::path& dir, double pitch) {
  if (!(pitch > 0)) throw Error(ErrorKind::OutOfRange, "pitch must be > 0");
  if (!fs::is_directory(dir)) throw Error(ErrorKind::IoFailure, "not a directory: " + dir.string());
  std::vector<std::pair<int, fs::path>> slices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() != 16 || name.rfind("slice_", 0) != 0 ||
        name.substr(12) != ".pgm")
      continue;
    const std::string digits = name.substr(6, 6);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    slices.emplace_back(std::stoi(digits), entry.path());
  }
  if (slices.empty()) throw Error(ErrorKind::EmptyInput, "no slice_<index>.pgm files in " + dir.string());
  std::sort(slices.begin(), slices.end());
  for (std::size_t k = 1; k < slices.size(); ++k) {
    if (slices[k].first != slices[k - 1].first + 1) {
      throw Error(ErrorKind::DegenerateInput,
                  "slice numbering has a gap after " + slices[k - 1].second.filename().string());
    }
  }
  const GrayImage first = read_pgm(slices[0].second);
  VoxelGrid grid(first.width, first.height, static_cast<int>(slices.size()), pitch);
  for (std::size_t k = 0; k < slices.size(); ++k) {
    const GrayImage img = k == 0 ? first : read_pgm(slices[k].second);
    if (img.width != first.width || img.height != first.height) {
      throw Error(ErrorKind::InconsistentSliceDims,
                  slices[k].second.filename().string() + " is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + ", expected " + std::to_string(first.width) + "x" +
                      std::to_string(first.height));
    }
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u)
        if (img.at(u, v) >= 128) grid.set(u, v, static_cast<int>(k));
  }
  return grid;
}

std::vector<ParticleRecord> import_voxels(const VoxelGrid& stack, const std::string& run_id, int threads,
                                          std::vector<std::string>* skipped) {
  const std::vector<VoxelGrid> comps = connected_components_3d(stack, 26);
  std::vector<std::optional<ParticleRecord>> slots(comps.size());
  std::vector<std::string> why(comps.size());
  auto name = [](std::size_t k) {
    char id[32];
    std::snprintf(id, sizeof id, "v%04zu", k + 1);
    return std::string(id);
  };
  parallel_for(comps.size(), threads, [&](std::size_t k) {
    try {
      slots[k] = measure(comps[k], name(k), run_id, SourceKind::VoxelImport);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput) throw;
      why[k] = e.what();
    }
  });
  std::vector<ParticleRecord> out;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (slots[k]) {
      out.push_back(std::move(*slots[k]));
    } else if (skipped) {
      skipped->push_back(name(k) + ": " + why[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// command line

namespace {

struct Common {
  std::string out;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  auto* o = cmd->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  c.seed_opt = cmd->add_option("--seed", c.seed, "seed for every stochastic element (default 0)");
}

std::vector<std::vector<ParticleRecord>> read_all(const std::vector<std::string>& files) {
  std::vector<std::vector<ParticleRecord>> runs;
  for (const auto& f : files) runs.push_back(read_records_csv(f));
  return runs;
}

int cmd_calibrate(const std::array<std::vector<std::string>, 3>& files, double nominal, double tol,
                  const Common& c, std::ostream& out) {
  std::array<std::vector<GrayImage>, 3> images;
  std::vector<std::string> ids;
  for (int v = 0; v < 3; ++v)
    for (const auto& f : files[v]) {
      images[v].push_back(read_image(f));
      ids.push_back(f);
    }
  CalibrationConfig cfg;
  cfg.nominal_diameter_um = nominal;
  cfg.nominal_tolerance_um = tol;
  const CalibrationProfile p = calibrate_from_sphere(images, cfg, ids);
  fs::create_directories(c.out);
  write_profile(p, fs::path(c.out) / "calibration.txt");
  out << "scale_a=" << shortest(p.scale_um_per_px[0]) << " scale_b=" << shortest(p.scale_um_per_px[1])
      << " scale_c=" << shortest(p.scale_um_per_px[2]) << '\n';
  return 0;
}

int cmd_simulate(const std::string& scene_file, const Common& c, std::ostream& out) {
  Scene scene = load_scene(scene_file);
  if (c.seed_opt->count()) scene.seed = c.seed;
  const auto frames = compose_transit_scene(scene, c.threads);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_frames(frames, dir);
  save_scene(scene, dir / "scene.json");

  CalibrationProfile p;
  p.scale_um_per_px = {scene.pitch, scene.pitch, scene.pitch};
  p.created_from = {"simulate"};
  write_profile(p, dir / "calibration.txt");

  RunManifest m;
  m.run_id = fs::path(scene_file).stem().string();
  for (int v = 0; v < 3; ++v) m.frame_dirs[v] = dir / std::string(to_string(static_cast<View>(v)));
  m.calibration = dir / "calibration.txt";
  m.flow_axis = scene.flow_axis;
  m.frame_interval_us = scene.frame_interval_us;
  m.output = dir / "analysis";
  save_manifest(m, dir / "manifest.json");

  const fs::path tp = dir / "truth.csv";
  auto truth = open_out(tp);
  truth << "part,kind,S_um,I_um,L_um,volume_um3\n";
  for (std::size_t k = 0; k < scene.parts.size(); ++k) {
    const auto& s = scene.parts[k].solid;
    const auto d = s.dims();
    truth << k << ',' << to_string(s.kind) << ',' << format_number(d[0]) << ',' << format_number(d[1])
          << ',' << format_number(d[2]) << ',' << format_number(s.volume()) << '\n';
  }
  close_out(truth, tp);
  out << "frames=" << scene.frames << " parts=" << scene.parts.size() << " seed=" << scene.seed << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Particle morphometry from three orthogonal silhouettes", "ocular"};
  app.require_subcommand(1);

  Common cal_c, an_c, imp_c, sim_c, rep_c, cmp_c;

  auto* cal = app.add_subcommand("calibrate", "scale per view from images of a reference sphere");
  std::array<std::vector<std::string>, 3> cal_files;
  double nominal = 250.0, tolerance = 2.5;
  cal->add_option("--a", cal_files[0], "sphere images seen by camera A")->required();
  cal->add_option("--b", cal_files[1], "sphere images seen by camera B")->required();
  cal->add_option("--c", cal_files[2], "sphere images seen by camera C")->required();
  cal->add_option("--nominal", nominal, "sphere diameter (um)")->check(CLI::PositiveNumber);
  cal->add_option("--tolerance", tolerance, "sphere diameter tolerance (um)")->check(CLI::PositiveNumber);
  add_common(cal, cal_c, true);

  auto* an = app.add_subcommand("analyze", "frames -> particle records");
  std::string manifest_file;
  an->add_option("manifest", manifest_file, "run manifest (JSON)")->required();
  add_common(an, an_c, false);

  auto* imp = app.add_subcommand("import-voxels", "slice stack -> particle records");
  std::string slice_dir, imp_run;
  double pitch = 0.0;
  imp->add_option("slices", slice_dir, "directory of slice_<index>.pgm files")->required();
  imp->add_option("--pitch", pitch, "voxel pitch (um)")->required()->check(CLI::PositiveNumber);
  imp->add_option("--run-id", imp_run, "run id (default: directory name)");
  add_common(imp, imp_c, true);

  auto* sim = app.add_subcommand("simulate", "render a synthetic transit scene");
  std::string scene_file;
  sim->add_option("scene", scene_file, "scene description (JSON)")->required();
  add_common(sim, sim_c, true);

  auto* rep = app.add_subcommand("report", "PSD and Zingg reports from records");
  std::vector<std::string> rep_files;
  std::string metric = "intermediate", weighting = "number";
  int bins = 10;
  rep->add_option("records", rep_files, "records CSV files")->required();
  rep->add_option("--metric", metric, "intermediate | volume-equivalent-diameter");
  rep->add_option("--weighting", weighting, "number | volume");
  rep->add_option("--bins", bins, "Zingg bins per axis")->check(CLI::PositiveNumber);
  add_common(rep, rep_c, true);

  auto* cmp = app.add_subcommand("compare", "compare runs (or the two measurement sources)");
  std::vector<std::string> cmp_files;
  bool sources = false;
  cmp->add_option("records", cmp_files, "records CSV files, one per run")->required()->expected(2, -1);
  cmp->add_flag("--sources", sources, "first file reconstructed, second voxel import");
  add_common(cmp, cmp_c, true);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (cal->parsed()) return cmd_calibrate(cal_files, nominal, tolerance, cal_c, out);

    if (an->parsed()) {
      const RunManifest m = load_manifest(manifest_file);
      const fs::path dir = !an_c.out.empty() ? fs::path(an_c.out) : m.output;
      if (dir.empty()) throw Error(ErrorKind::InvalidManifest, "no output directory (manifest or --out)");
      const AnalyzeSummary s = analyze(m, dir, an_c.threads);
      if (s.warnings) err << s.warnings << " warning(s), see " << (dir / "warnings.txt").string() << '\n';
      out << "particles=" << s.particles << " losses=" << s.losses
          << " mean_deficit=" << format_number(s.mean_deficit) << '\n';
      return 0;
    }

    if (imp->parsed()) {
      const VoxelGrid stack = load_slice_stack(slice_dir, pitch);
      if (imp_run.empty()) imp_run = fs::path(slice_dir).lexically_normal().filename().string();
      if (imp_run.empty()) imp_run = fs::path(slice_dir).lexically_normal().parent_path().filename().string();
      std::vector<std::string> skipped;
      const auto records = import_voxels(stack, imp_run, imp_c.threads, &skipped);
      for (const auto& s : skipped) err << "skipped " << s << '\n';
      fs::create_directories(imp_c.out);
      write_records_csv(records, fs::path(imp_c.out) / "records.csv");
      out << "records=" << records.size() << " skipped=" << skipped.size() << '\n';
      return 0;
    }

    if (sim->parsed()) return cmd_simulate(scene_file, sim_c, out);

    if (rep->parsed()) {
      std::vector<ParticleRecord> all;
      for (auto& run : read_all(rep_files)) all.insert(all.end(), run.begin(), run.end());
      if (all.empty()) throw Error(ErrorKind::EmptyInput, "no particle records to report");
      emit_reports(make_report(std::move(all), size_metric_from_string(metric),
                               weighting_from_string(weighting), bins),
                   rep_c.out);
      return 0;
    }

    if (cmp->parsed()) {
      auto runs = read_all(cmp_files);
      RunComparison c;
      if (sources) {
        if (runs.size() != 2) throw Error(ErrorKind::DimensionMismatch, "--sources takes exactly two files");
        c = compare_sources(runs[0], runs[1]);
      } else {
        c = compare_runs(runs);
      }
      std::vector<ParticleRecord> all;
      for (auto& run : runs) all.insert(all.end(), run.begin(), run.end());
      Report r = make_report(std::move(all));
      r.comparison = c;
      emit_reports(r, cmp_c.out);
      double worst = 0.0;
      for (const auto& p : c.pairs) worst = std::max(worst, p.ks_d);
      out << "runs=" << c.runs.size() << " max_ks_d=" << format_number(worst);
      if (c.median_bias) out << " median_bias=" << format_number(*c.median_bias);
      out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::ScaleDivergence ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace ocular::cli
