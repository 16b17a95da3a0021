#include "ocular/stats.hpp"

#include "ocular/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ocular {

std::string_view to_string(SizeMetric m) {
  return m == SizeMetric::Intermediate ? "intermediate" : "volume-equivalent-diameter";
}

SizeMetric size_metric_from_string(std::string_view s) {
  if (s == "intermediate") return SizeMetric::Intermediate;
  if (s == "volume-equivalent-diameter") return SizeMetric::VolumeEquivalentDiameter;
  throw Error(ErrorKind::InvalidManifest, "unknown size metric '" + std::string(s) + "'");
}

std::string_view to_string(Weighting w) { return w == Weighting::Number ? "number" : "volume"; }

Weighting weighting_from_string(std::string_view s) {
  if (s == "number") return Weighting::Number;
  if (s == "volume") return Weighting::Volume;
  throw Error(ErrorKind::InvalidManifest, "unknown weighting '" + std::string(s) + "'");
}

double size_of(const ParticleRecord& r, SizeMetric metric) {
  if (metric == SizeMetric::Intermediate) return r.I;
  return std::cbrt(6.0 * r.volume / std::numbers::pi);
}

// ---------------------------------------------------------------------------
// PSD

PsdCurve build_psd(const std::vector<ParticleRecord>& records, SizeMetric metric,
                   Weighting weighting) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records for a size distribution");
  std::vector<std::pair<double, double>> pts;  // size, weight
  pts.reserve(records.size());
  for (const auto& r : records)
    pts.emplace_back(size_of(r, metric), weighting == Weighting::Number ? 1.0 : r.volume);
  std::sort(pts.begin(), pts.end());

  double total = 0.0;
  for (const auto& p : pts) total += p.second;
  if (!(total > 0.0)) throw Error(ErrorKind::EmptyInput, "size distribution has zero total weight");

  PsdCurve c;
  c.metric = metric;
  c.weighting = weighting;
  double below = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c.sizes.push_back(pts[i].first);
    c.midpoint.push_back((below + 0.5 * pts[i].second) / total);
    below += pts[i].second;
    c.cumulative.push_back(i + 1 == pts.size() ? 1.0 : below / total);
  }
  c.d10 = psd_quantile(c, 0.10);
  c.d50 = psd_quantile(c, 0.50);
  c.d90 = psd_quantile(c, 0.90);
  return c;
}

double psd_quantile(const PsdCurve& c, double q) {
  if (c.sizes.empty()) throw Error(ErrorKind::EmptyInput, "empty size distribution");
  if (q <= c.midpoint.front()) return c.sizes.front();
  if (q >= c.midpoint.back()) return c.sizes.back();
  const auto it = std::upper_bound(c.midpoint.begin(), c.midpoint.end(), q);
  const std::size_t k = static_cast<std::size_t>(it - c.midpoint.begin());  // midpoint[k-1] <= q < midpoint[k]
  const double f0 = c.midpoint[k - 1], f1 = c.midpoint[k];
  const double x0 = c.sizes[k - 1], x1 = c.sizes[k];
  if (f1 == f0) return x0;
  return x0 + (q - f0) / (f1 - f0) * (x1 - x0);
}

// ---------------------------------------------------------------------------
// Zingg density

int unit_bin(double x, int n) {
  if (!(x > 0.0)) return 0;
  int i = std::clamp(static_cast<int>(std::ceil(x * n)) - 1, 0, n - 1);
  // Guard the edges against rounding in x * n: bin i is (i/n, (i+1)/n].
  while (i > 0 && x <= static_cast<double>(i) / n) --i;
  while (i < n - 1 && x > static_cast<double>(i + 1) / n) ++i;
  return i;
}

ZinggDensity build_zingg_density(const std::vector<ParticleRecord>& records, int ne, int nf) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records for a Zingg density");
  if (ne < 1 || nf < 1) throw Error(ErrorKind::OutOfRange, "Zingg bin counts must be positive");
  ZinggDensity z;
  z.n_elongation = ne;
  z.n_flatness = nf;
  z.counts.assign(static_cast<std::size_t>(ne) * nf, 0);
  for (const auto& r : records) {
    const double e = r.indices.elongation, f = r.indices.flatness;
    if (!(e > 0.0) || !(f > 0.0)) ++z.nonpositive;
    ++z.counts[static_cast<std::size_t>(unit_bin(e, ne)) * nf + unit_bin(f, nf)];
    ++z.total;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Comparisons

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyInput, "KS statistic needs two samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j]))
      x = a[i];
    else
      x = b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

namespace {

RunSummary summarize(const std::vector<ParticleRecord>& run, std::size_t k) {
  RunSummary s;
  s.run_id = run.front().run_id.empty() ? "run" + std::to_string(k + 1) : run.front().run_id;
  s.count = run.size();
  const PsdCurve psd = build_psd(run);
  s.d10 = psd.d10;
  s.d50 = psd.d50;
  s.d90 = psd.d90;
  for (const auto& r : run) s.zingg_fraction[static_cast<int>(r.indices.zingg)] += 1.0;
  for (auto& f : s.zingg_fraction) f /= static_cast<double>(run.size());
  return s;
}

std::vector<double> intermediates(const std::vector<ParticleRecord>& run) {
  std::vector<double> v;
  v.reserve(run.size());
  for (const auto& r : run) v.push_back(r.I);
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunComparison compare_runs(const std::vector<std::vector<ParticleRecord>>& runs) {
  if (runs.size() < 2) throw Error(ErrorKind::EmptyInput, "a comparison needs at least two runs");
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (runs[k].empty()) throw Error(ErrorKind::EmptyRun, "run " + std::to_string(k + 1) + " is empty");
  }
  RunComparison c;
  for (std::size_t k = 0; k < runs.size(); ++k) c.runs.push_back(summarize(runs[k], k));
  for (std::size_t a = 0; a < runs.size(); ++a)
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      RunPair p;
      p.a = a;
      p.b = b;
      p.ks_d = ks_statistic(intermediates(runs[a]), intermediates(runs[b]));
      p.d10_delta = c.runs[b].d10 - c.runs[a].d10;
      p.d50_delta = c.runs[b].d50 - c.runs[a].d50;
      p.d90_delta = c.runs[b].d90 - c.runs[a].d90;
      c.pairs.push_back(p);
    }
  return c;
}

RunComparison compare_sources(const std::vector<ParticleRecord>& rec,
                              const std::vector<ParticleRecord>& vox) {
  RunComparison c = compare_runs({rec, vox});
  c.median_bias = median(intermediates(rec)) - median(intermediates(vox));
  std::map<std::string, const ParticleRecord*> by_id;
  for (const auto& r : vox) by_id.emplace(r.particle_id, &r);
  for (const auto& r : rec) {
    const auto it = by_id.find(r.particle_id);
    if (it == by_id.end()) continue;
    const ParticleRecord& v = *it->second;
    SourcePair p;
    p.particle_id = r.particle_id;
    p.S_bias = r.S - v.S;
    p.I_bias = r.I - v.I;
    p.L_bias = r.L - v.L;
    p.volume_bias = r.volume - v.volume;
    p.convexity_reconstructed = r.indices.convexity;
    p.convexity_voxel = v.indices.convexity;
    p.concavity_hidden = p.convexity_reconstructed - p.convexity_voxel > kConcavityFlagGap;
    c.particles.push_back(std::move(p));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Files

std::string format_number(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::IoFailure, "write failed: " + path.string());
}

double parse_number(const std::string& s, const std::string& where) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::InvalidManifest, where + ": bad number '" + s + "'");
  }
  return x;
}

}  // namespace

void write_records_csv(const std::vector<ParticleRecord>& records, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    const auto& ix = r.indices;
    out << csv_field(r.particle_id) << ',' << csv_field(r.run_id) << ',' << to_string(r.source) << ','
        << format_number(r.S) << ',' << format_number(r.I) << ',' << format_number(r.L) << ','
        << format_number(r.volume) << ',' << format_number(r.surface_area) << ','
        << format_number(ix.elongation) << ',' << format_number(ix.flatness) << ','
        << to_string(ix.zingg) << ',' << format_number(ix.sphericity_wadell) << ','
        << format_number(ix.sphericity_intercept) << ',' << format_number(ix.convexity) << ','
        << format_number(r.consistency_deficit_max) << '\n';
  }
  finish(out, path);
}

std::vector<ParticleRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidManifest, path.string() + ": no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) {
    throw Error(ErrorKind::InvalidManifest, path.string() + ": unexpected header");
  }
  std::vector<ParticleRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 15) {
      throw Error(ErrorKind::InvalidManifest, where + ": expected 15 fields, got " +
                                                  std::to_string(f.size()));
    }
    ParticleRecord r;
    r.particle_id = f[0];
    r.run_id = f[1];
    try {
      r.source = source_kind_from_string(f[2]);
      r.indices.zingg = zingg_class_from_string(f[10]);
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidManifest, where + ": " + e.what());
    }
    r.S = parse_number(f[3], where);
    r.I = parse_number(f[4], where);
    r.L = parse_number(f[5], where);
    r.volume = parse_number(f[6], where);
    r.surface_area = parse_number(f[7], where);
    r.indices.elongation = parse_number(f[8], where);
    r.indices.flatness = parse_number(f[9], where);
    r.indices.sphericity_wadell = parse_number(f[11], where);
    r.indices.sphericity_intercept = parse_number(f[12], where);
    r.indices.convexity = parse_number(f[13], where);
    r.consistency_deficit_max = parse_number(f[14], where);
    out.push_back(std::move(r));
  }
  return out;
}

Report make_report(std::vector<ParticleRecord> records, SizeMetric metric, Weighting weighting,
                   int n_bins) {
  Report r;
  r.records = std::move(records);
  if (!r.records.empty()) {
    r.psd = build_psd(r.records, metric, weighting);
    r.zingg = build_zingg_density(r.records, n_bins, n_bins);
  }
  return r;
}

void emit_reports(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  write_records_csv(report.records, dir / "records.csv");

  {
    const auto path = dir / "psd.csv";
    auto out = open_out(path);
    out << kPsdHeader << '\n';
    if (report.psd)
      for (std::size_t i = 0; i < report.psd->sizes.size(); ++i)
        out << format_number(report.psd->sizes[i]) << ',' << format_number(report.psd->cumulative[i])
            << '\n';
    finish(out, path);
  }
  {
    const auto path = dir / "psd.dat";
    auto out = open_out(path);
    out << "# size_um cumulative_fraction\n";
    if (report.psd) {
      const auto& p = *report.psd;
      out << "# metric " << to_string(p.metric) << ", weighting " << to_string(p.weighting)
          << ", D10 " << format_number(p.d10) << ", D50 " << format_number(p.d50) << ", D90 "
          << format_number(p.d90) << '\n';
      for (std::size_t i = 0; i < p.sizes.size(); ++i)
        out << format_number(p.sizes[i]) << ' ' << format_number(p.cumulative[i]) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "zingg.csv";
    const auto dat_path = dir / "zingg.dat";
    auto out = open_out(path);
    auto dat = open_out(dat_path);
    out << kZinggHeader << '\n';
    dat << "# elongation_bin_low flatness_bin_low count (blocks per elongation bin, for pm3d)\n";
    if (report.zingg) {
      const auto& z = *report.zingg;
      for (int i = 0; i < z.n_elongation; ++i) {
        for (int j = 0; j < z.n_flatness; ++j) {
          const std::string e = format_number(static_cast<double>(i) / z.n_elongation);
          const std::string f = format_number(static_cast<double>(j) / z.n_flatness);
          out << e << ',' << f << ',' << z.at(i, j) << '\n';
          dat << e << ' ' << f << ' ' << z.at(i, j) << '\n';
        }
        dat << '\n';
      }
    }
    finish(out, path);
    finish(dat, dat_path);
  }

  if (!report.comparison) return;
  const RunComparison& c = *report.comparison;
  {
    const auto path = dir / "runs.csv";
    auto out = open_out(path);
    out << kRunsHeader << '\n';
    for (const auto& r : c.runs) {
      out << csv_field(r.run_id) << ',' << r.count << ',' << format_number(r.d10) << ','
          << format_number(r.d50) << ',' << format_number(r.d90);
      for (double f : r.zingg_fraction) out << ',' << format_number(f);
      out << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "comparison.csv";
    auto out = open_out(path);
    out << kComparisonHeader << '\n';
    for (const auto& p : c.pairs)
      out << csv_field(c.runs[p.a].run_id) << ',' << csv_field(c.runs[p.b].run_id) << ','
          << format_number(p.ks_d) << ',' << format_number(p.d10_delta) << ','
          << format_number(p.d50_delta) << ',' << format_number(p.d90_delta) << '\n';
    finish(out, path);
  }
  if (c.median_bias) {
    const auto path = dir / "sources.csv";
    auto out = open_out(path);
    out << kSourcesHeader << '\n';
    for (const auto& p : c.particles)
      out << csv_field(p.particle_id) << ',' << format_number(p.S_bias) << ','
          << format_number(p.I_bias) << ',' << format_number(p.L_bias) << ','
          << format_number(p.volume_bias) << ',' << format_number(p.convexity_reconstructed) << ','
          << format_number(p.convexity_voxel) << ',' << (p.concavity_hidden ? 1 : 0) << '\n';
    finish(out, path);
    const auto bias_path = dir / "source_bias.csv";
    auto bias = open_out(bias_path);
    bias << "median_I_bias_um,paired_particles,concavities_hidden\n";
    std::size_t hidden = 0;
    for (const auto& p : c.particles) hidden += p.concavity_hidden;
    bias << format_number(*c.median_bias) << ',' << c.particles.size() << ',' << hidden << '\n';
    finish(bias, bias_path);
  }
}

}  // namespace ocular
