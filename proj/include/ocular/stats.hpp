#pragma once

// Aggregates over particle records: size distributions, Zingg densities, run
// comparisons and the CSV / plot-data files that carry them.

#include "ocular/morphometry.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ocular {

enum class SizeMetric { Intermediate, VolumeEquivalentDiameter };
enum class Weighting { Number, Volume };

std::string_view to_string(SizeMetric m);
SizeMetric size_metric_from_string(std::string_view s);
std::string_view to_string(Weighting w);
Weighting weighting_from_string(std::string_view s);

double size_of(const ParticleRecord& r, SizeMetric metric);

struct PsdCurve {
  SizeMetric metric = SizeMetric::Intermediate;
  Weighting weighting = Weighting::Number;
  std::vector<double> sizes;       ///< ascending
  std::vector<double> cumulative;  ///< weight up to and including each point; ends at 1
  std::vector<double> midpoint;    ///< weight below plus half the point's own: (i - 0.5)/n
  double d10 = 0.0, d50 = 0.0, d90 = 0.0;
};

/// Throws EmptyInput for no records. Ties are ordered by weight so the curve
/// does not depend on the input order.
PsdCurve build_psd(const std::vector<ParticleRecord>& records,
                   SizeMetric metric = SizeMetric::Intermediate,
                   Weighting weighting = Weighting::Number);

/// Linear interpolation of the midpoint CDF, clamped to [min, max].
double psd_quantile(const PsdCurve& psd, double q);

struct ZinggDensity {
  int n_elongation = 10;
  int n_flatness = 10;
  /// counts[i * n_flatness + j]: elongation in (i/nE, (i+1)/nE], flatness in
  /// (j/nF, (j+1)/nF]. Values at or below zero land in bin 0.
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t nonpositive = 0;  ///< records that needed the zero rule

  std::size_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * n_flatness + j]; }
};

/// Bin of `x` among n bins over (0, 1] with upper edges inclusive.
int unit_bin(double x, int n);

ZinggDensity build_zingg_density(const std::vector<ParticleRecord>& records, int n_elongation = 10,
                                 int n_flatness = 10);

/// Two-sample Kolmogorov-Smirnov statistic: largest gap between the
/// empirical CDFs. Throws EmptyInput when either sample is empty.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct RunSummary {
  std::string run_id;
  std::size_t count = 0;
  double d10 = 0.0, d50 = 0.0, d90 = 0.0;
  std::array<double, 4> zingg_fraction{};  ///< Compact, Flat, Elongated, Bladed
};

struct RunPair {
  std::size_t a = 0, b = 0;
  double ks_d = 0.0;
  double d10_delta = 0.0, d50_delta = 0.0, d90_delta = 0.0;  ///< b - a
};

/// Per-particle pairing of the two measurement paths (matched by particle id).
struct SourcePair {
  std::string particle_id;
  double S_bias = 0.0, I_bias = 0.0, L_bias = 0.0, volume_bias = 0.0;  ///< reconstructed - voxel
  double convexity_reconstructed = 0.0, convexity_voxel = 0.0;
  /// The hull hides a concavity the voxel path sees.
  bool concavity_hidden = false;
};

struct RunComparison {
  std::vector<RunSummary> runs;
  std::vector<RunPair> pairs;  ///< every unordered pair, a < b
  // Source comparisons only.
  std::optional<double> median_bias;  ///< median I, reconstructed minus voxel
  std::vector<SourcePair> particles;
};

/// Convexity gap above which a hidden concavity is flagged.
inline constexpr double kConcavityFlagGap = 0.05;

/// Needs at least two runs; an empty run throws EmptyRun. Sizes are the
/// intermediate dimension.
RunComparison compare_runs(const std::vector<std::vector<ParticleRecord>>& runs);

/// compare_runs over the two sources plus the signed bias; particles present
/// in both sets (same id) are paired.
RunComparison compare_sources(const std::vector<ParticleRecord>& reconstructed,
                              const std::vector<ParticleRecord>& voxel_import);

// ---------------------------------------------------------------------------
// Files

/// Six significant digits, '.' separator, independent of the locale.
std::string format_number(double x);

inline constexpr std::string_view kRecordsHeader =
    "particle_id,run_id,source,S_um,I_um,L_um,volume_um3,area_um2,elongation,flatness,"
    "zingg_class,sphericity_wadell,sphericity_intercept,convexity,consistency_deficit_max";
inline constexpr std::string_view kPsdHeader = "size_um,cumulative_fraction";
inline constexpr std::string_view kZinggHeader = "elongation_bin_low,flatness_bin_low,count";
inline constexpr std::string_view kComparisonHeader =
    "run_a,run_b,ks_d,d10_delta_um,d50_delta_um,d90_delta_um";
inline constexpr std::string_view kRunsHeader =
    "run_id,count,d10_um,d50_um,d90_um,compact,flat,elongated,bladed";
inline constexpr std::string_view kSourcesHeader =
    "particle_id,S_bias_um,I_bias_um,L_bias_um,volume_bias_um3,convexity_reconstructed,"
    "convexity_voxel,concavity_hidden";

void write_records_csv(const std::vector<ParticleRecord>& records, const std::filesystem::path& path);
/// Throws IoFailure for unreadable files and InvalidManifest for a wrong
/// header or malformed rows.
std::vector<ParticleRecord> read_records_csv(const std::filesystem::path& path);

struct Report {
  std::vector<ParticleRecord> records;
  std::optional<PsdCurve> psd;        ///< absent when there are no records
  std::optional<ZinggDensity> zingg;  ///< likewise
  std::optional<RunComparison> comparison;
};

/// Builds the PSD and Zingg density when there are records.
Report make_report(std::vector<ParticleRecord> records, SizeMetric metric = SizeMetric::Intermediate,
                   Weighting weighting = Weighting::Number, int n_bins = 10);

/// records.csv, psd.csv, zingg.csv, psd.dat, zingg.dat, and with a comparison
/// runs.csv, comparison.csv (and sources.csv, source_bias.csv for a source
/// comparison). Files with nothing to report still carry their header.
void emit_reports(const Report& report, const std::filesystem::path& dir);

}  // namespace ocular
