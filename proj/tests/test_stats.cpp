#include "ocular/error.hpp"
#include "ocular/morphometry.hpp"
#include "ocular/reconstruct.hpp"
#include "ocular/stats.hpp"
#include "ocular/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace ocular;

namespace {

ParticleRecord rec(double I, double volume = 1.0, std::string id = "p", std::string run = "r") {
  ParticleRecord r;
  r.particle_id = std::move(id);
  r.run_id = std::move(run);
  r.S = 0.5 * I;
  r.I = I;
  r.L = 2 * I;
  r.volume = volume;
  r.surface_area = 3 * I;
  r.indices.elongation = 0.5;
  r.indices.flatness = 0.5;
  r.indices.zingg = ZinggClass::Bladed;
  return r;
}

ParticleRecord shaped(double e, double f) {
  ParticleRecord r = rec(10);
  r.indices.elongation = e;
  r.indices.flatness = f;
  r.indices.zingg = zingg_classify(e, f);
  return r;
}

// Midpoint-CDF quantile written from the position formula h = q n + 1/2.
double quantile_oracle(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double h = q * n + 0.5;
  if (h <= 1) return x.front();
  if (h >= n) return x.back();
  const auto k = static_cast<std::size_t>(std::floor(h));
  return x[k - 1] + (h - std::floor(h)) * (x[k] - x[k - 1]);
}

double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto cdf = [](const std::vector<double>& s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
           static_cast<double>(s.size());
  };
  double d = 0;
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// PSD

TEST(Psd, OneParticleClamps) {
  const auto p = build_psd({rec(50)});
  EXPECT_EQ(p.d10, 50);
  EXPECT_EQ(p.d50, 50);
  EXPECT_EQ(p.d90, 50);
  EXPECT_EQ(p.cumulative.back(), 1.0);
}

TEST(Psd, TwoParticlesInterpolate) {
  const auto p = build_psd({rec(30), rec(10)});
  EXPECT_EQ(p.sizes, (std::vector<double>{10, 30}));
  EXPECT_EQ(p.midpoint, (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(p.cumulative, (std::vector<double>{0.5, 1.0}));
  EXPECT_DOUBLE_EQ(p.d50, 20);
  EXPECT_DOUBLE_EQ(p.d10, 10);  // below F(10) = 0.25: clamped
  EXPECT_DOUBLE_EQ(p.d90, 30);
}

TEST(Psd, UniformThousand) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(20, 120);
  std::vector<ParticleRecord> rs;
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(U(rng));
    rs.push_back(rec(xs.back()));
  }
  const auto p = build_psd(rs);
  EXPECT_NEAR(p.d50, 70, 3);
  EXPECT_NEAR(p.d10, quantile_oracle(xs, 0.1), 1e-9);
  EXPECT_NEAR(p.d50, quantile_oracle(xs, 0.5), 1e-9);
  EXPECT_NEAR(p.d90, quantile_oracle(xs, 0.9), 1e-9);
}

TEST(Psd, VolumeWeighting) {
  const auto p = build_psd({rec(10, 1.0), rec(30, 3.0)}, SizeMetric::Intermediate, Weighting::Volume);
  EXPECT_EQ(p.midpoint, (std::vector<double>{0.125, 0.625}));
  EXPECT_EQ(p.cumulative, (std::vector<double>{0.25, 1.0}));
  EXPECT_DOUBLE_EQ(p.d50, 10 + (0.5 - 0.125) / 0.5 * 20);
}

TEST(Psd, VolumeEquivalentDiameter) {
  const double d = 40;
  const auto p = build_psd({rec(1, std::numbers::pi / 6 * d * d * d)}, SizeMetric::VolumeEquivalentDiameter);
  EXPECT_NEAR(p.d50, d, 1e-9);
  EXPECT_EQ(size_metric_from_string(to_string(SizeMetric::VolumeEquivalentDiameter)),
            SizeMetric::VolumeEquivalentDiameter);
  EXPECT_EQ(weighting_from_string("volume"), Weighting::Volume);
  EXPECT_THROW(weighting_from_string("mass"), Error);
}

TEST(Psd, EmptyInput) {
  try {
    build_psd({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(Psd, PropertiesUnderShuffle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::vector<ParticleRecord> rs;
    std::lognormal_distribution<double> size(3.5, 0.6);
    for (int i = 0; i < n; ++i) {
      // coarse sizes so ties occur
      rs.push_back(rec(std::round(size(rng)), 1 + static_cast<double>(rng() % 5)));
    }
    for (auto w : {Weighting::Number, Weighting::Volume}) {
      const auto p = build_psd(rs, SizeMetric::Intermediate, w);
      EXPECT_EQ(p.cumulative.back(), 1.0);
      for (std::size_t i = 1; i < p.sizes.size(); ++i) {
        EXPECT_LE(p.sizes[i - 1], p.sizes[i]);
        EXPECT_LE(p.cumulative[i - 1], p.cumulative[i]);
        EXPECT_LE(p.midpoint[i - 1], p.midpoint[i]);
      }
      EXPECT_LE(p.d10, p.d50);
      EXPECT_LE(p.d50, p.d90);
      auto shuffled = rs;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto q = build_psd(shuffled, SizeMetric::Intermediate, w);
      EXPECT_EQ(q.sizes, p.sizes);
      EXPECT_EQ(q.cumulative, p.cumulative);
      EXPECT_EQ(q.d10, p.d10);
      EXPECT_EQ(q.d50, p.d50);
      EXPECT_EQ(q.d90, p.d90);
    }
  }
}

// ---------------------------------------------------------------------------
// Zingg density

TEST(Zingg, FourInOneBin) {
  const auto z = build_zingg_density({shaped(0.55, 0.55), shaped(0.55, 0.55), shaped(0.55, 0.55),
                                      shaped(0.55, 0.55)});
  EXPECT_EQ(z.at(5, 5), 4u);
  EXPECT_EQ(z.total, 4u);
}

TEST(Zingg, EdgesAreUpperInclusive) {
  EXPECT_EQ(unit_bin(1.0, 10), 9);
  EXPECT_EQ(unit_bin(0.3, 10), 2);
  EXPECT_EQ(unit_bin(0.7, 10), 6);
  EXPECT_EQ(unit_bin(0.30000000000000004, 10), 3);
  EXPECT_EQ(unit_bin(0.1, 10), 0);
  EXPECT_EQ(unit_bin(1e-12, 10), 0);
  EXPECT_EQ(unit_bin(0.0, 10), 0);
  EXPECT_EQ(unit_bin(2.0 / 3, 3), 1);
  ParticleRecord flat_zero = shaped(0.5, 0.4);
  flat_zero.indices.elongation = 0.0;
  const auto z = build_zingg_density({shaped(1.0, 1.0), flat_zero});
  EXPECT_EQ(z.at(9, 9), 1u);
  EXPECT_EQ(z.at(0, 3), 1u);
  EXPECT_EQ(z.nonpositive, 1u);
}

TEST(Zingg, MarginalMatchesElongationHistogram) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int ne = 1 + static_cast<int>(rng() % 12), nf = 1 + static_cast<int>(rng() % 12);
    std::vector<ParticleRecord> rs;
    for (int i = 0; i < 200; ++i) {
      // mix in exact bin edges
      const double e = rng() % 4 ? U(rng) : static_cast<double>(1 + rng() % ne) / ne;
      rs.push_back(shaped(e, U(rng)));
    }
    const auto z = build_zingg_density(rs, ne, nf);
    std::size_t sum = 0;
    for (int i = 0; i < ne; ++i) {
      std::size_t marginal = 0;
      for (int j = 0; j < nf; ++j) marginal += z.at(i, j);
      std::size_t hist = 0;
      for (const auto& r : rs) {
        const double e = r.indices.elongation;
        hist += (e > static_cast<double>(i) / ne || i == 0) && e <= static_cast<double>(i + 1) / ne;
      }
      EXPECT_EQ(marginal, hist) << "bin " << i;
      sum += marginal;
    }
    EXPECT_EQ(sum, z.total);
    EXPECT_EQ(z.total, rs.size());
  }
}

TEST(Zingg, ProlateFamilyIsElongated) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<ParticleRecord> rs;
  for (int k = 0; k < 6; ++k) {
    const double c = 7 + 2 * U(rng), b = c * (1.0 + 0.2 * U(rng)), a = b * (1.8 + 0.3 * U(rng));
    const AnalyticSolid s = AnalyticSolid::ellipsoid(a, b, c).posed(
        rotation_xyz_deg(360 * U(rng), 360 * U(rng), 360 * U(rng)), Vec3(40.3, 41.1, 39.7));
    rs.push_back(measure(voxelize(s, 1.0), "e" + std::to_string(k), "prolate", SourceKind::VoxelImport));
  }
  const auto z = build_zingg_density(rs);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (z.at(i, j)) {
        EXPECT_LE(i, 6);  // elongation <= 0.7
        EXPECT_GE(j, 6);  // flatness > 0.6
      }
  for (const auto& r : rs) EXPECT_EQ(r.indices.zingg, ZinggClass::Elongated) << r.particle_id;
}

// ---------------------------------------------------------------------------
// comparisons

TEST(Ks, Basics) {
  EXPECT_EQ(ks_statistic({1, 2, 3}, {3, 2, 1}), 0.0);
  EXPECT_EQ(ks_statistic({10, 15, 20}, {100, 150, 200}), 1.0);
  EXPECT_THROW(ks_statistic({}, {1}), Error);
}

TEST(Ks, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + rng() % 30), b(1 + rng() % 30);
    for (auto& x : a) x = static_cast<double>(rng() % 20);
    for (auto& x : b) x = static_cast<double>(rng() % 25);
    const double d = ks_statistic(a, b);
    EXPECT_NEAR(d, ks_oracle(a, b), 1e-12);
    EXPECT_EQ(d, ks_statistic(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

TEST(CompareRuns, IdenticalRunsAndLayout) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(20, 90);
  std::vector<std::vector<ParticleRecord>> runs;
  for (int n : {182, 127, 71}) {
    std::vector<ParticleRecord> run;
    for (int i = 0; i < n; ++i) run.push_back(rec(U(rng), 1, "p" + std::to_string(i), "run" + std::to_string(n)));
    runs.push_back(run);
  }
  const auto c = compare_runs(runs);
  ASSERT_EQ(c.runs.size(), 3u);
  EXPECT_EQ(c.runs[0].count, 182u);
  EXPECT_EQ(c.runs[1].count, 127u);
  EXPECT_EQ(c.runs[2].count, 71u);
  EXPECT_EQ(c.runs[2].run_id, "run71");
  EXPECT_EQ(c.runs[0].zingg_fraction[3], 1.0);
  ASSERT_EQ(c.pairs.size(), 3u);
  EXPECT_EQ(c.pairs[2].a, 1u);
  EXPECT_EQ(c.pairs[2].b, 2u);

  const auto same = compare_runs({runs[0], runs[0], runs[0]});
  for (const auto& p : same.pairs) {
    EXPECT_EQ(p.ks_d, 0.0);
    EXPECT_EQ(p.d10_delta, 0.0);
    EXPECT_EQ(p.d50_delta, 0.0);
    EXPECT_EQ(p.d90_delta, 0.0);
  }
}

TEST(CompareRuns, Errors) {
  try {
    compare_runs({{rec(1)}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyRun);
  }
  EXPECT_THROW(compare_runs({{rec(1)}}), Error);
}

TEST(CompareSources, HullBiasIsNonNegativeAndConcavityFlagged) {
  std::vector<ParticleRecord> hull, direct;
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 5; ++k) {
    AnalyticSolid s = k < 3 ? AnalyticSolid::ellipsoid(12 + 4 * U(rng), 9 + 2 * U(rng), 6 + 2 * U(rng))
                            : AnalyticSolid::lprism(28, 28, 14, 14);
    s = s.posed(k < 3 ? rotation_xyz_deg(90 * U(rng), 90 * U(rng), 90 * U(rng))
                      : rotation_xyz_deg(3 * U(rng), 3 * U(rng), 3 * U(rng)) * notch_hiding_rotation(),
                Vec3(30.2, 31.6, 29.9));
    const std::string id = "s" + std::to_string(k);
    direct.push_back(measure(voxelize(s, 1.0), id, "ct", SourceKind::VoxelImport));
    const auto r = reconstruct_particle(render_triprojection(s, 1.0));
    hull.push_back(measure(r.solid, id, "ocular", SourceKind::Reconstructed));
  }
  const auto c = compare_sources(hull, direct);
  ASSERT_EQ(c.particles.size(), 5u);
  ASSERT_TRUE(c.median_bias);
  EXPECT_GE(*c.median_bias, 0.0);
  for (const auto& p : c.particles) {
    EXPECT_GE(p.volume_bias, 0.0) << p.particle_id;
    EXPECT_GE(p.I_bias, -1e-9) << p.particle_id;
  }
  for (int k = 3; k < 5; ++k) {
    EXPECT_TRUE(c.particles[k].concavity_hidden);
    EXPECT_NEAR(c.particles[k].convexity_voxel, 6.0 / 7, 0.02);
    EXPECT_GT(c.particles[k].convexity_reconstructed, 0.95);
  }
  for (int k = 0; k < 3; ++k) EXPECT_FALSE(c.particles[k].concavity_hidden);
}

// ---------------------------------------------------------------------------
// files

TEST(Format, SixSignificantDigits) {
  EXPECT_EQ(format_number(250), "250");
  EXPECT_EQ(format_number(2.5), "2.5");
  EXPECT_EQ(format_number(1.0 / 3), "0.333333");
  EXPECT_EQ(format_number(1234567), "1.23457e+06");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(-12.3456789), "-12.3457");
}

TEST(RecordsCsv, HeaderRowAndRoundTrip) {
  const auto dir = fresh_dir("ocular_records_csv");
  ParticleRecord r = rec(12.3456789, 987.654321, "id,with \"quote\"", "run-1");
  r.indices.convexity = 0.999;
  r.consistency_deficit_max = 0.0125;
  write_records_csv({r}, dir / "r.csv");
  const auto lines = lines_of(dir / "r.csv");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kRecordsHeader);
  EXPECT_EQ(lines[1],
            "\"id,with \"\"quote\"\"\",run-1,reconstructed,6.17284,12.3457,24.6914,987.654,37.037,0.5,0.5,"
            "Bladed,0,0,0.999,0.0125");
  const auto back = read_records_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].particle_id, r.particle_id);
  EXPECT_EQ(back[0].I, 12.3457);
  EXPECT_EQ(back[0].indices.zingg, ZinggClass::Bladed);
  EXPECT_EQ(back[0].consistency_deficit_max, 0.0125);

  std::ofstream(dir / "bad.csv") << "particle_id,run_id\n";
  EXPECT_THROW(read_records_csv(dir / "bad.csv"), Error);
  std::ofstream(dir / "short.csv") << kRecordsHeader << "\na,b,reconstructed,1\n";
  EXPECT_THROW(read_records_csv(dir / "short.csv"), Error);
  EXPECT_THROW(read_records_csv(dir / "none.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Reports, FilesAndDeterminism) {
  const auto dir = fresh_dir("ocular_reports");
  std::vector<ParticleRecord> rs = {shaped(0.55, 0.55), shaped(0.9, 0.2)};
  rs[1].I = 33;
  Report rep = make_report(rs);
  rep.comparison = compare_runs({{rs[0]}, {rs[1]}});
  emit_reports(rep, dir / "one");
  emit_reports(rep, dir / "two");
  for (const char* f : {"records.csv", "psd.csv", "zingg.csv", "psd.dat", "zingg.dat", "runs.csv",
                        "comparison.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(dir / "one" / f)) << f;
    EXPECT_EQ(slurp(dir / "one" / f), slurp(dir / "two" / f)) << f;
  }
  const auto z = lines_of(dir / "one" / "zingg.csv");
  ASSERT_EQ(z.size(), 101u);
  EXPECT_EQ(z[0], kZinggHeader);
  EXPECT_EQ(z[1], "0,0,0");
  EXPECT_EQ(z[5 * 10 + 5 + 1], "0.5,0.5,1");
  const auto psd = lines_of(dir / "one" / "psd.csv");
  ASSERT_EQ(psd.size(), 3u);
  EXPECT_EQ(psd[0], kPsdHeader);
  EXPECT_EQ(psd[2], "33,1");
  EXPECT_FALSE(std::filesystem::exists(dir / "one" / "sources.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Reports, EmptyRecordsStillCarryHeaders) {
  const auto dir = fresh_dir("ocular_reports_empty");
  emit_reports(make_report({}), dir);
  EXPECT_EQ(lines_of(dir / "records.csv"), std::vector<std::string>{std::string(kRecordsHeader)});
  EXPECT_EQ(lines_of(dir / "psd.csv"), std::vector<std::string>{std::string(kPsdHeader)});
  EXPECT_EQ(lines_of(dir / "zingg.csv"), std::vector<std::string>{std::string(kZinggHeader)});
  std::filesystem::remove_all(dir);
}
