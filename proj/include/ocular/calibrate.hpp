#pragma once

// Per-camera scale (micrometres per pixel) from images of precision spheres.

#include "ocular/image.hpp"
#include "ocular/stream.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace ocular {

struct CalibrationProfile {
  std::array<double, 3> scale_um_per_px{1.0, 1.0, 1.0};  ///< A, B, C
  /// Largest relative deviation of a measured diameter from the nominal one,
  /// using the view's final scale. Zero for a single image per view.
  std::array<double, 3> residual{0.0, 0.0, 0.0};
  double nominal_diameter_um = 250.0;
  double nominal_tolerance_um = 2.5;
  std::vector<std::string> created_from;

  double scale(View v) const { return scale_um_per_px[static_cast<int>(v)]; }
};

struct CalibrationConfig {
  double nominal_diameter_um = 250.0;
  double nominal_tolerance_um = 2.5;
  /// Two views diverge when their scales differ by more than this multiple
  /// of the relative tolerance (nominal_tolerance / nominal_diameter).
  double divergence_factor = 3.0;
  DetectionConfig detection;
};

/// Diameter of the circle with the given pixel area.
double equivalent_diameter_px(double area_px);

/// Scale and residual per view from measured sphere diameters (pixels), one
/// or more per view; applies the divergence check.
CalibrationProfile calibrate_from_diameters(const std::array<std::vector<double>, 3>& diameters_px,
                                            const CalibrationConfig& config = {});

/// One or more sphere images per view (A, B, C). Each image must hold exactly
/// one object (NoObject / MultipleObjects otherwise) that does not touch the
/// border (DegenerateInput). The view scale is the mean over its images.
/// Throws ScaleDivergence when two views disagree beyond the allowed spread;
/// `ids` names the images in the profile and in error messages.
CalibrationProfile calibrate_from_sphere(const std::array<std::vector<GrayImage>, 3>& images,
                                         const CalibrationConfig& config = {},
                                         const std::vector<std::string>& ids = {});

/// Relative spread |s_i - s_j| / min(s_i, s_j), maximised over view pairs.
double scale_divergence(const std::array<double, 3>& scales);

/// `key = value` lines; floats in shortest round-trip form.
void write_profile(const CalibrationProfile& profile, const std::filesystem::path& path);
/// Throws IoFailure for an unreadable file and InvalidManifest for missing
/// keys, malformed numbers or non-positive scales.
CalibrationProfile read_profile(const std::filesystem::path& path);

}  // namespace ocular
