#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "blurlab/catalog_io.hpp"
#include "blurlab/dataset.hpp"
#include "support.hpp"

namespace blurlab {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::TempDir;

std::vector<std::string> fake_sources(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("img" + std::to_string(i) + ".jpg");
  return ids;
}

const Manifest& full_plan(TrigMode trig = TrigMode::kExactDegrees) {
  static std::map<TrigMode, Manifest> cache;
  auto it = cache.find(trig);
  if (it == cache.end()) {
    GeneratorConfig cfg;
    cfg.seed = 3;
    it = cache.emplace(trig, plan_dataset(build_catalog(2, 100, {trig, false}),
                                          fake_sources(30000), cfg))
             .first;
  }
  return it->second;
}

TEST(Labels, Normalization) {
  const auto lo = normalize_labels(1, -89);
  EXPECT_EQ(lo.r_norm, 0.0);
  EXPECT_EQ(lo.phi_norm, 0.0);
  const auto hi = normalize_labels(100, 90);
  EXPECT_EQ(hi.r_norm, 1.0);
  EXPECT_EQ(hi.phi_norm, 1.0);
  const auto mid = normalize_labels(2, 45);
  EXPECT_DOUBLE_EQ(mid.r_norm, 1.0 / 99.0);
  EXPECT_DOUBLE_EQ(mid.phi_norm, 134.0 / 179.0);
}

TEST(Labels, RoundTripEveryLabel) {
  for (int r = 1; r <= 100; ++r) {
    for (int a = -89; a <= 90; ++a) {
      const auto n = normalize_labels(r, a);
      ASSERT_EQ(denormalize_labels(n.r_norm, n.phi_norm), (KernelLabel{r, a}));
    }
  }
}

TEST(Labels, RejectsOutOfRange) {
  EXPECT_THROW(normalize_labels(0, 0), std::invalid_argument);
  EXPECT_THROW(normalize_labels(101, 0), std::invalid_argument);
  EXPECT_THROW(normalize_labels(5, -90), std::invalid_argument);
  EXPECT_THROW(denormalize_labels(1.2, 0.5), std::invalid_argument);
  const auto [r, phi] = denormalize_prediction(0.5, 0.5);
  EXPECT_DOUBLE_EQ(r, 50.5);
  EXPECT_DOUBLE_EQ(phi, 0.5);
}

TEST(Plan, LengthTwoCycles) {
  GeneratorConfig cfg;
  cfg.no_blur_count = 0;
  const Manifest m = plan_dataset(build_catalog(2, 2), fake_sources(500), cfg);
  ASSERT_EQ(m.records.size(), 176u);
  const std::vector<int> cycle{-45, 0, 45, 90};
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    ASSERT_EQ(m.records[i].r, 2);
    ASSERT_EQ(m.records[i].phi, cycle[i % 4]);
  }
}

TEST(Plan, ZeroMinimumGivesOnePerEntry) {
  const KernelCatalog c = build_catalog(2, 12);
  GeneratorConfig cfg;
  cfg.min_per_length = 0;
  cfg.no_blur_count = 0;
  const Manifest m = plan_dataset(c, fake_sources(500), cfg);
  ASSERT_EQ(m.records.size(), c.size());
  std::set<KernelLabel> seen;
  for (const auto& r : m.records) EXPECT_TRUE(seen.insert({r.r, r.phi}).second);
  cfg.no_blur_count = -1;
  EXPECT_EQ(plan_dataset(c, fake_sources(500), cfg).records.size(), c.size() + 1);
}

TEST(Plan, FullScaleCount) {
  const std::size_t exact = full_plan().records.size();
  EXPECT_EQ(exact, 21607u);
  EXPECT_NEAR(static_cast<double>(exact), 21789.0, 0.05 * 21789.0);
  EXPECT_EQ(full_plan(TrigMode::kFloatingPoint).records.size(), 21789u);
}

TEST(Plan, FullScaleBalanceAndPeaks) {
  const DistributionReport rep = distribution_report(full_plan());
  EXPECT_EQ(rep.per_length.size(), 100u);
  for (const auto& [r, n] : rep.per_length) EXPECT_GE(n, 175u) << r;
  EXPECT_EQ(dominant_angle_peaks(rep), (std::vector<int>{-45, 0, 45, 90}));
  // Short lengths need more cycles, hence more distinct sources per record.
  EXPECT_GT(rep.unique_sources_per_length.at(2), 170u);
}

TEST(Plan, NoReplacementWithinLength) {
  std::map<int, std::set<std::string>> seen;
  for (const auto& r : full_plan().records) {
    ASSERT_TRUE(seen[r.r].insert(r.source_id).second) << r.r << " " << r.source_id;
  }
}

TEST(Plan, OutputPathsUnique) {
  std::set<std::string> paths;
  for (const auto& r : full_plan().records) ASSERT_TRUE(paths.insert(r.output_path).second);
  EXPECT_EQ(sample_path({5, -45}, 12), "images/r005/r005_a-45_00012.png");
  EXPECT_EQ(sample_path({5, 0}, 3), "images/r005/r005_a+00_00003.png");
}

TEST(Plan, Deterministic) {
  GeneratorConfig cfg;
  cfg.seed = 11;
  const KernelCatalog c = build_catalog(2, 20);
  EXPECT_EQ(manifest_csv(plan_dataset(c, fake_sources(300), cfg)),
            manifest_csv(plan_dataset(c, fake_sources(300), cfg)));
  GeneratorConfig other = cfg;
  other.seed = 12;
  EXPECT_NE(manifest_csv(plan_dataset(c, fake_sources(300), cfg)),
            manifest_csv(plan_dataset(c, fake_sources(300), other)));
}

TEST(Plan, ExhaustionReportsShortfall) {
  GeneratorConfig cfg;
  cfg.min_per_length = 20;
  try {
    plan_dataset(build_catalog(2, 5), fake_sources(10), cfg);
    FAIL() << "expected SourceExhausted";
  } catch (const SourceExhausted& e) {
    EXPECT_EQ(e.length(), 1);
    EXPECT_EQ(e.shortfall(), 10u);
    EXPECT_NE(std::string(e.what()).find("shortfall 10"), std::string::npos);
  }
  cfg.allow_source_reuse = true;
  const Manifest m = plan_dataset(build_catalog(2, 5), fake_sources(10), cfg);
  EXPECT_GE(m.records.size(), 100u);
}

TEST(Plan, ConfigValidation) {
  GeneratorConfig cfg;
  cfg.sigma2 = -1;
  EXPECT_THROW(plan_dataset(build_catalog(2, 3), fake_sources(5), cfg), std::invalid_argument);
  EXPECT_THROW(plan_dataset(build_catalog(2, 3), {}, GeneratorConfig{}), std::invalid_argument);
}

class GenerateTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sources_ = new TempDir("sources");
    testing::write_sources(sources_->path(), 100, 32, 36, 1000);
  }
  static void TearDownTestSuite() {
    delete sources_;
    sources_ = nullptr;
  }
  static GeneratorConfig desk_config() {
    GeneratorConfig cfg;
    cfg.min_per_length = 20;
    cfg.seed = 77;
    return cfg;
  }
  static TempDir* sources_;
};

TempDir* GenerateTest::sources_ = nullptr;

TEST_F(GenerateTest, DeskScaleBalancedAndReproducible) {
  const KernelCatalog c = build_catalog(2, 20);
  TempDir a("gen-a"), b("gen-b");
  GeneratorConfig cfg = desk_config();
  const Manifest ma = generate_dataset(c, sources_->path(), a.path(), cfg);
  cfg.workers = 3;
  const Manifest mb = generate_dataset(c, sources_->path(), b.path(), cfg);

  const DistributionReport rep = distribution_report(ma);
  EXPECT_EQ(rep.per_length.size(), 20u);
  for (const auto& [r, n] : rep.per_length) EXPECT_GE(n, 20u) << r;

  EXPECT_EQ(read_file(a.path() / "manifest.csv"), read_file(b.path() / "manifest.csv"));
  for (std::size_t i = 0; i < ma.records.size(); i += 37) {
    const auto& p = ma.records[i].output_path;
    ASSERT_EQ(read_file(a.path() / p), read_file(b.path() / p)) << p;
  }
  EXPECT_EQ(ma.records.size(), plan_dataset(c, list_sources(sources_->path()), desk_config())
                                   .records.size());
}

TEST_F(GenerateTest, LabelIntegrity) {
  const KernelCatalog c = build_catalog(2, 9);
  TempDir out("gen-int");
  GeneratorConfig cfg = desk_config();
  cfg.min_per_length = 4;
  cfg.sigma2 = 0.001;
  const Manifest m = generate_dataset(c, sources_->path(), out.path(), cfg);
  ASSERT_FALSE(m.records.empty());
  for (const auto& rec : m.records) {
    const Image source = load_image(sources_->path() / rec.source_id);
    const Image stored = load_image(out.path() / rec.output_path);
    ASSERT_EQ(stored, quantize_8bit(render_sample(source, rec, c, cfg.boundary)))
        << rec.output_path;
    ASSERT_EQ(rec.width, 36);
    ASSERT_EQ(rec.height, 32);
  }
}

TEST_F(GenerateTest, ManifestRoundTrip) {
  const KernelCatalog c = build_catalog(2, 6);
  TempDir out("gen-rt");
  const Manifest m = generate_dataset(c, sources_->path(), out.path(), desk_config());
  const Manifest back = read_manifest(out.path() / "manifest.csv");
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.catalog_hash, catalog_hash(c));
  const auto& cfg = back.generator_config;
  EXPECT_EQ(cfg["min_per_length"], 20);
  EXPECT_EQ(cfg["seed"], 77);
  EXPECT_EQ(cfg["workers"], 1);
  EXPECT_EQ(cfg["sigma2"], 0.0);
  EXPECT_EQ(cfg["source_count"], 100);
  EXPECT_TRUE(cfg.contains("source_digest"));
  const std::string csv = read_file(out.path() / "manifest.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "output_path,source_id,r,phi,r_norm,phi_norm,sigma2,seed,width,height");
}

TEST_F(GenerateTest, SkipsSourcesSmallerThanKernel) {
  TempDir src("small-src"), out("gen-small");
  testing::write_sources(src.path(), 30, 32, 32, 5);
  save_image(src.path() / "tiny.png", testing::random_image(3, 4, 4, 1));
  GeneratorConfig cfg = desk_config();
  cfg.min_per_length = 10;
  const Manifest m = generate_dataset(build_catalog(2, 8), src.path(), out.path(), cfg);
  for (const auto& r : m.records) {
    if (r.source_id == "tiny.png") {
      EXPECT_LE(r.r, 5);
    }
  }
  EXPECT_TRUE(m.generator_config.contains("skipped_small_sources"));
}

TEST(SampleLength, RejectedSourcesAreConsumed) {
  const KernelCatalog c = build_catalog(2, 4);
  GeneratorConfig cfg;
  cfg.min_per_length = 8;
  const LengthPlan plan = plan_lengths(c, cfg).back();
  ASSERT_EQ(plan.length, 4);
  int rejected = 0;
  const auto samples = sample_length(plan, c, 40, cfg, [&](const PlannedSample& s, const PixelKernel&) {
    if (s.source_index % 2 == 0) {
      ++rejected;
      return false;
    }
    return true;
  });
  EXPECT_EQ(samples.size(), plan.target);
  EXPECT_GT(rejected, 0);
  std::set<std::size_t> used;
  for (const auto& s : samples) {
    EXPECT_EQ(s.source_index % 2, 1u);
    EXPECT_TRUE(used.insert(s.source_index).second);
  }
  EXPECT_THROW(sample_length(plan, c, 40, cfg,
                             [](const PlannedSample&, const PixelKernel&) { return false; }),
               SourceExhausted);
  cfg.allow_source_reuse = true;
  EXPECT_THROW(sample_length(plan, c, 40, cfg,
                             [](const PlannedSample&, const PixelKernel&) { return false; }),
               SourceExhausted);
}

TEST_F(GenerateTest, Errors) {
  TempDir empty("empty"), out("gen-err");
  EXPECT_THROW(generate_dataset(build_catalog(2, 3), empty.path(), out.path(), desk_config()),
               std::runtime_error);
  EXPECT_THROW(generate_dataset(build_catalog(2, 3), out.path() / "missing", out.path(),
                                desk_config()),
               std::runtime_error);
  TempDir file_parent("not-dir");
  std::ofstream(file_parent.path() / "f") << "x";
  EXPECT_THROW(generate_dataset(build_catalog(2, 3), sources_->path(),
                                file_parent.path() / "f" / "out", desk_config()),
               std::exception);
}

TEST(Manifest, RejectsMalformed) {
  TempDir dir("bad-manifest");
  std::ofstream(dir.path() / "a.csv") << "wrong,header\n";
  EXPECT_THROW(read_manifest(dir.path() / "a.csv"), std::runtime_error);
  std::ofstream(dir.path() / "b.csv")
      << kManifestHeader << "\nimages/x.png,s.png,2,45,0.01,0.7,0,1,10\n";
  EXPECT_THROW(read_manifest(dir.path() / "b.csv"), std::runtime_error);
  std::ofstream(dir.path() / "c.csv")
      << kManifestHeader << "\nimages/x.png,s.png,2,-90,0.01,0.7,0,1,10,10\n";
  EXPECT_THROW(read_manifest(dir.path() / "c.csv"), std::runtime_error);
  EXPECT_THROW(read_manifest(dir.path() / "none.csv"), std::runtime_error);
}

TEST(Manifest, QuotedFields) {
  TempDir dir("quoted");
  Manifest m;
  BlurSampleRecord r;
  r.output_path = "images/a,b.png";
  r.source_id = "dir/\"q\".png";
  r.r = 3;
  r.phi = 90;
  m.records.push_back(r);
  write_manifest(dir.path() / "m.csv", m);
  EXPECT_EQ(read_manifest(dir.path() / "m.csv").records, m.records);
}

TEST(Distribution, SingleRecord) {
  Manifest m;
  BlurSampleRecord r;
  r.output_path = "a.png";
  r.source_id = "s.png";
  r.r = 7;
  r.phi = -12;
  m.records.push_back(r);
  const DistributionReport rep = distribution_report(m);
  EXPECT_EQ(rep.per_length, (std::map<int, std::size_t>{{7, 1}}));
  EXPECT_EQ(rep.per_angle, (std::map<int, std::size_t>{{-12, 1}}));
  EXPECT_EQ(rep.unique_sources_per_length.at(7), 1u);
  EXPECT_EQ(rep.unique_sources_per_angle.at(-12), 1u);
  EXPECT_THROW(distribution_report(Manifest{}), std::invalid_argument);
}

TEST(Subset, FullScaleSizes) {
  const Manifest& m = full_plan();
  EXPECT_EQ(subset(m, SubsetAxis::kLength, 5, 1).manifest.records.size(), 500u);
  EXPECT_EQ(subset(m, SubsetAxis::kAngle, 3, 1).manifest.records.size(), 540u);
  EXPECT_TRUE(subset(m, SubsetAxis::kLength, 0, 1).manifest.records.empty());
}

TEST(Subset, PerValueCountsOrderAndDeterminism) {
  const Manifest& m = full_plan();
  const SubsetResult a = subset(m, SubsetAxis::kLength, 5, 9);
  std::map<int, int> per;
  for (const auto& r : a.manifest.records) ++per[r.r];
  for (const auto& [r, n] : per) EXPECT_EQ(n, 5);
  // Original manifest order is kept.
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m.records.size(); ++i) index[m.records[i].output_path] = i;
  for (std::size_t i = 1; i < a.manifest.records.size(); ++i) {
    EXPECT_LT(index[a.manifest.records[i - 1].output_path],
              index[a.manifest.records[i].output_path]);
  }
  EXPECT_EQ(subset(m, SubsetAxis::kLength, 5, 9).manifest.records, a.manifest.records);
  EXPECT_NE(subset(m, SubsetAxis::kLength, 5, 10).manifest.records, a.manifest.records);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Subset, ShortGroupsWarn) {
  const Manifest& m = full_plan();
  const SubsetResult s = subset(m, SubsetAxis::kLength, 200, 1);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_THROW(subset(m, SubsetAxis::kAngle, -1, 1), std::invalid_argument);
  EXPECT_EQ(parse_subset_axis("angle"), SubsetAxis::kAngle);
  EXPECT_THROW(parse_subset_axis("width"), std::invalid_argument);
}

}  // namespace
}  // namespace blurlab
