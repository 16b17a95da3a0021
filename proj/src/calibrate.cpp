#include "ocular/calibrate.hpp"

#include "ocular/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ocular {

double equivalent_diameter_px(double area_px) {
  return 2.0 * std::sqrt(area_px / std::numbers::pi);
}

double scale_divergence(const std::array<double, 3>& s) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      worst = std::max(worst, std::abs(s[i] - s[j]) / std::min(s[i], s[j]));
  return worst;
}

CalibrationProfile calibrate_from_diameters(const std::array<std::vector<double>, 3>& diameters_px,
                                            const CalibrationConfig& config) {
  if (!(config.nominal_diameter_um > 0.0) || !(config.nominal_tolerance_um > 0.0)) {
    throw Error(ErrorKind::OutOfRange, "nominal diameter and tolerance must be positive");
  }
  CalibrationProfile p;
  p.nominal_diameter_um = config.nominal_diameter_um;
  p.nominal_tolerance_um = config.nominal_tolerance_um;
  for (int v = 0; v < 3; ++v) {
    const auto& diam = diameters_px[v];
    if (diam.empty()) {
      throw Error(ErrorKind::NoObject,
                  "no sphere measured for view " + std::string(to_string(static_cast<View>(v))));
    }
    double mean = 0.0;
    for (double d : diam) {
      if (!(d > 0.0)) throw Error(ErrorKind::OutOfRange, "sphere diameter must be positive");
      mean += config.nominal_diameter_um / d;
    }
    mean /= static_cast<double>(diam.size());
    p.scale_um_per_px[v] = mean;
    double res = 0.0;
    for (double d : diam)
      res = std::max(res, std::abs(d * mean - config.nominal_diameter_um) / config.nominal_diameter_um);
    p.residual[v] = res;
  }

  const double limit =
      config.divergence_factor * config.nominal_tolerance_um / config.nominal_diameter_um;
  const double spread = scale_divergence(p.scale_um_per_px);
  if (spread > limit) {
    std::ostringstream msg;
    msg << "view scales " << p.scale_um_per_px[0] << ", " << p.scale_um_per_px[1] << ", "
        << p.scale_um_per_px[2] << " um/px differ by " << spread * 100 << "% (limit "
        << limit * 100 << "%)";
    throw Error(ErrorKind::ScaleDivergence, msg.str());
  }
  return p;
}

CalibrationProfile calibrate_from_sphere(const std::array<std::vector<GrayImage>, 3>& images,
                                         const CalibrationConfig& config,
                                         const std::vector<std::string>& ids) {
  const std::size_t total = images[0].size() + images[1].size() + images[2].size();
  if (!ids.empty() && ids.size() != total) {
    throw Error(ErrorKind::DimensionMismatch, "one id per calibration image expected");
  }
  std::array<std::vector<double>, 3> diam;
  std::size_t k = 0;
  for (int v = 0; v < 3; ++v) {
    const View view = static_cast<View>(v);
    for (const auto& img : images[v]) {
      const std::string name =
          ids.empty() ? std::string(to_string(view)) + " image " + std::to_string(diam[v].size())
                      : ids[k];
      ++k;
      Frame f;
      f.view = view;
      f.image = img;
      const auto objs = detect(f, config.detection);
      if (objs.empty()) throw Error(ErrorKind::NoObject, name + ": no sphere found");
      if (objs.size() > 1) {
        throw Error(ErrorKind::MultipleObjects,
                    name + ": " + std::to_string(objs.size()) + " objects found");
      }
      if (objs[0].touches_border) {
        throw Error(ErrorKind::DegenerateInput, name + ": sphere touches the image border");
      }
      diam[v].push_back(equivalent_diameter_px(static_cast<double>(objs[0].area)));
    }
  }
  CalibrationProfile p = calibrate_from_diameters(diam, config);
  p.created_from = ids;
  return p;
}

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

constexpr const char* kScaleKeys[3] = {"scale_a_um_per_px", "scale_b_um_per_px",
                                       "scale_c_um_per_px"};
constexpr const char* kResidualKeys[3] = {"residual_a", "residual_b", "residual_c"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_profile(const CalibrationProfile& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  for (int v = 0; v < 3; ++v) out << kScaleKeys[v] << " = " << shortest(p.scale_um_per_px[v]) << '\n';
  out << "nominal_diameter_um = " << shortest(p.nominal_diameter_um) << '\n';
  out << "nominal_tolerance_um = " << shortest(p.nominal_tolerance_um) << '\n';
  for (int v = 0; v < 3; ++v) out << kResidualKeys[v] << " = " << shortest(p.residual[v]) << '\n';
  if (!p.created_from.empty()) {
    out << "created_from = ";
    for (std::size_t i = 0; i < p.created_from.size(); ++i)
      out << (i ? ";" : "") << p.created_from[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed: " + path.string());
}

CalibrationProfile read_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidManifest,
                  path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  auto number = [&](const char* key, bool required, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw Error(ErrorKind::InvalidManifest, path.string() + ": missing " + key);
      return fallback;
    }
    double x = 0.0;
    const auto& s = it->second;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x)) {
      throw Error(ErrorKind::InvalidManifest, path.string() + ": bad number for " + key);
    }
    return x;
  };
  CalibrationProfile p;
  for (int v = 0; v < 3; ++v) {
    p.scale_um_per_px[v] = number(kScaleKeys[v], true, 0.0);
    if (!(p.scale_um_per_px[v] > 0.0)) {
      throw Error(ErrorKind::InvalidManifest, path.string() + ": " + kScaleKeys[v] + " must be > 0");
    }
    p.residual[v] = number(kResidualKeys[v], false, 0.0);
  }
  p.nominal_diameter_um = number("nominal_diameter_um", false, 250.0);
  p.nominal_tolerance_um = number("nominal_tolerance_um", false, 2.5);
  if (const auto it = kv.find("created_from"); it != kv.end()) {
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ';'))
      if (!item.empty()) p.created_from.push_back(item);
  }
  return p;
}

}  // namespace ocular
