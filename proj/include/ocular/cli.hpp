#pragma once

// Batch commands: calibrate, analyze, import-voxels, simulate, report, compare.
// Each is callable in-process; run() is the command-line front end.

#include "ocular/calibrate.hpp"
#include "ocular/morphometry.hpp"
#include "ocular/stats.hpp"
#include "ocular/stream.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ocular::cli {

struct ViewOrientation {
  int rotate_deg = 0;  ///< counter-clockwise, multiple of 90
  bool flip_u = false;
  bool flip_v = false;
};

/// One acquisition run. Relative paths in the file resolve against the
/// manifest's own directory; see docs/manifest.md.
struct RunManifest {
  std::string run_id;
  std::array<std::filesystem::path, 3> frame_dirs;
  std::filesystem::path calibration;
  Axis flow_axis = Axis::Z;
  std::array<ViewOrientation, 3> orientation;
  double frame_interval_us = 1000.0;
  DetectionConfig detection;
  TrackingConfig tracking;
  MatchingConfig matching;
  std::filesystem::path output;  ///< may be empty; --out wins
  std::filesystem::path source;  ///< the file it came from
};

/// Throws InvalidManifest for unknown keys, wrong types, missing paths and
/// non-positive tolerances, IoFailure when the file cannot be read.
RunManifest load_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest's directory when they lie below it.
void save_manifest(const RunManifest& manifest, const std::filesystem::path& path);

struct AnalyzeSummary {
  std::size_t particles = 0;
  std::size_t losses = 0;  ///< lost particles, not loss-log lines
  double mean_deficit = 0.0;
  std::size_t warnings = 0;
};

/// Frames -> records. Writes records/psd/zingg reports, losses.csv,
/// consistency.csv, warnings.txt (when there are any) and a copy of the
/// manifest into `out`.
AnalyzeSummary analyze(const RunManifest& manifest, const std::filesystem::path& out, int threads);

inline constexpr std::string_view kLossHeader = "run_id,view,track_id,reason";
inline constexpr std::string_view kConsistencyHeader =
    "particle_id,frame,deficit_a,deficit_b,deficit_c,consistent";

/// `slice_<index:06d>.pgm` files, stacked along Z in index order. A pixel at
/// or above mid-grey is solid. Throws EmptyInput for no slices,
/// InconsistentSliceDims when sizes differ and DegenerateInput for gaps in the
/// numbering.
VoxelGrid load_slice_stack(const std::filesystem::path& dir, double pitch);

/// One record per 26-connected component, largest first. Components too small
/// to measure are skipped and named in `skipped`.
std::vector<ParticleRecord> import_voxels(const VoxelGrid& stack, const std::string& run_id,
                                          int threads, std::vector<std::string>* skipped = nullptr);

/// `args` excludes the program name. Exit codes: 0 success, 1 usage or data
/// error, 2 calibration divergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ocular::cli
