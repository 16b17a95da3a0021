#pragma once

// From three synchronised frame sequences to per-particle TriProjections:
// binarize -> denoise -> detect -> track (per view) -> match (across views).

#include "ocular/frame.hpp"
#include "ocular/geom.hpp"
#include "ocular/image.hpp"
#include "ocular/reconstruct.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ocular {

enum class ThresholdMethod { Fixed, Otsu };
enum class Polarity { DarkObject, BrightObject };

std::string_view to_string(ThresholdMethod m);
ThresholdMethod threshold_method_from_string(std::string_view s);
std::string_view to_string(Polarity p);
Polarity polarity_from_string(std::string_view s);

struct ThresholdConfig {
  ThresholdMethod method = ThresholdMethod::Otsu;
  int value = 128;  ///< used by Fixed
  /// Otsu is declared degenerate when its two class means are closer than
  /// this (grey levels): a frame of pure background noise has no object.
  double otsu_min_contrast = 40.0;
};

struct Binarization {
  BinaryMask mask;
  int threshold = 0;
  std::optional<std::string> warning;  ///< set for a degenerate histogram
};

/// Dark-object polarity marks value < threshold, bright-object value >= threshold.
Binarization binarize(const GrayImage& image, const ThresholdConfig& config,
                      Polarity polarity = Polarity::DarkObject);

/// Threshold in [1, 255] maximising the between-class variance of {< t} and
/// {>= t}; the lowest of tied thresholds. nullopt for a single-valued histogram.
std::optional<int> otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

/// Opening with a size x size square: removes every pixel not covered by a
/// full window inside the mask. Idempotent. Any size >= 1; 1 is a no-op.
BinaryMask morphological_open(const BinaryMask& mask, int size);

/// Opening (strips specks and spurs fused to an object's edge), then drops
/// 8-connected components smaller than min_area, then optionally fills
/// background regions (4-connected) that do not reach the image border.
BinaryMask denoise(const BinaryMask& mask, int min_area, bool fill_holes, int opening = 1);

/// 8-connected labels in raster order of each component's first pixel;
/// 0 is background. Returns the number of components.
int label_components(const BinaryMask& mask, std::vector<int>& labels);

struct DetectedObject {
  View view = View::A;
  int frame_index = 0;
  double timestamp_us = 0.0;
  int id = 0;  ///< order within the frame
  Silhouette mask{1, 1, 1.0, View::A};  ///< tight crop
  /// Half-open pixel box [u0, u1) x [v0, v1).
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  double centroid_u = 0.0, centroid_v = 0.0;  ///< pixel centres at +0.5
  std::size_t area = 0;
  bool touches_border = false;  ///< within opening/2 pixels of the frame edge
};

struct DetectionConfig {
  ThresholdConfig threshold;
  Polarity polarity = Polarity::DarkObject;
  int min_area = 9;
  bool fill_holes = false;
  int opening = 2;  ///< square side; 1 disables
};

std::vector<DetectedObject> detect(const Frame& frame, const DetectionConfig& config,
                                   std::vector<std::string>* warnings = nullptr);

struct TrackingConfig {
  double gating_px = 40.0;
  int max_gap = 2;
  /// Flow-axis velocity assumed before a track has two detections.
  double initial_velocity_px = 0.0;
};

struct Track {
  int id = 0;
  View view = View::A;
  std::vector<DetectedObject> objects;  ///< strictly increasing frame index
  double velocity_px = 0.0;             ///< along the flow axis, per frame
};

/// Image axis (0 = u, 1 = v) along which `flow` appears in `view`, if any.
std::optional<int> flow_pixel_axis(View view, Axis flow);

/// Greedy nearest-centroid association with constant-velocity prediction
/// along the flow axis. `frames` holds one detection list per frame, in
/// increasing frame order; throws OrderViolation otherwise.
std::vector<Track> track_objects(const std::vector<std::vector<DetectedObject>>& frames,
                                 View view, Axis flow, const TrackingConfig& config);

struct MatchingConfig {
  double sync_tolerance_us = 100.0;
  double flow_tolerance_um = 10.0;
  double transverse_tolerance_um = 10.0;
};

enum class LossReason { MissingView, Ambiguous, BorderOnly, TooSmall };
std::string_view to_string(LossReason r);

struct LossEntry {
  View view = View::A;
  int track_id = 0;
  LossReason reason = LossReason::MissingView;
  int group = 0;  ///< tracks of one lost particle share a group number
};

struct MatchedParticle {
  TriProjection projection;
  int frame_index = 0;
  /// Tracks per view that make up this particle (several when a track broke).
  std::array<std::vector<int>, 3> track_ids;
};

struct MatchResult {
  std::vector<MatchedParticle> particles;  ///< ordered by measurement frame, then position
  std::vector<LossEntry> losses;           ///< one line per unmatched track
  int lost_particles = 0;                  ///< distinct loss groups
};

/// Cross-view association. Detections at equal frame index (and timestamps
/// within the sync tolerance) form a triple when every view pair agrees on
/// the world axis it shares (both ends of the extents): the flow axis within
/// flow_tolerance_um, the other two within transverse_tolerance_um. Tracks linked by triples form a
/// particle; a particle whose triples are not one-to-one at some frame, or
/// that holds two simultaneous tracks of one view, is rejected as ambiguous.
/// The measurement frame is the one where no silhouette touches the border
/// and the summed area is largest (earliest on ties).
MatchResult match_views(const std::array<std::vector<Track>, 3>& tracks, Axis flow,
                        const MatchingConfig& config);

/// Re-registers three cropped detections on one lattice (mean pitch),
/// positioned by their pixel boxes in world coordinates.
TriProjection assemble_triprojection(const DetectedObject& a, const DetectedObject& b,
                                     const DetectedObject& c);

struct StreamConfig {
  DetectionConfig detection;
  TrackingConfig tracking;
  MatchingConfig matching;
  Axis flow_axis = Axis::Z;
};

struct StreamResult {
  MatchResult match;
  std::array<std::vector<Track>, 3> tracks;
  std::vector<std::string> warnings;
};

/// Loads frame `i` of view `v`. Called from worker threads.
using FrameLoader = std::function<Frame(View v, std::size_t i)>;

/// Detection in parallel over frames and views, then tracking and matching.
StreamResult process_stream(const std::array<std::size_t, 3>& frame_counts,
                            const FrameLoader& loader, const StreamConfig& config,
                            int threads = 1);
StreamResult process_stream(const std::array<std::vector<Frame>, 3>& frames,
                            const StreamConfig& config, int threads = 1);

struct FrameFile {
  int index = 0;
  std::filesystem::path path;
};

/// Files named `<V>_<index:06d>.pgm` or `.png` in `dir`, sorted by index.
/// Other files are ignored.
std::vector<FrameFile> list_frames(const std::filesystem::path& dir, View view);

}  // namespace ocular
