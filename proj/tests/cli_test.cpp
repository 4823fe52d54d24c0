#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "blurlab/catalog_io.hpp"
#include "blurlab/cli.hpp"
#include "blurlab/evaluation.hpp"
#include "json.hpp"
#include "support.hpp"

namespace blurlab {
namespace {

using nlohmann::json;
using testing::TempDir;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

json run_json(std::vector<std::string> args) {
  args.insert(args.begin(), "--json");
  const Result r = run(args);
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  return json::parse(r.out);
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

TEST(Cli, CatalogCounts) {
  const json j = run_json({"catalog"});
  EXPECT_EQ(j["total_entries"], 13032);
  EXPECT_EQ(j["lines_explored"], 17820);
  EXPECT_EQ(run_json({"--trig", "ieee", "catalog"})["total_entries"], 13034);
}

TEST(Cli, CatalogOutLoads) {
  TempDir dir("cli-cat");
  const std::string path = (dir.path() / "c.txt").string();
  ASSERT_EQ(run({"catalog", "--r-max", "12", "--identity", "--out", path}).code, cli::kOk);
  const KernelCatalog c = load_catalog(path);
  EXPECT_EQ(catalog_hash(c), catalog_hash(build_catalog(2, 12, {TrigMode::kExactDegrees, true})));
}

TEST(Cli, ConfigLoggedToStderr) {
  const Result r = run({"--seed", "5", "catalog", "--r-max", "4"});
  EXPECT_NE(r.err.find("blurlab catalog config"), std::string::npos);
  EXPECT_NE(r.err.find("\"seed\":5"), std::string::npos);
}

TEST(Cli, KernelText) {
  TempDir dir("cli-ker");
  const auto path = dir.path() / "k.txt";
  ASSERT_EQ(run({"kernel", "--r", "3", "--phi", "90", "--out", path.string()}).code, cli::kOk);
  EXPECT_EQ(testing::read_file(path),
            "0.3333333333333333\n0.3333333333333333\n0.3333333333333333\n");
  const json j = run_json({"kernel", "--r", "2", "--phi", "27"});
  EXPECT_EQ(j["phi"], 0);
  EXPECT_EQ(j["height"], 1);
  EXPECT_EQ(j["width"], 2);
}

TEST(Cli, Canonicalize) {
  const json j = run_json({"canonicalize", "--r", "2", "--phi", "27"});
  EXPECT_EQ(j["r"], 2);
  EXPECT_EQ(j["phi"], 0);
  const json c = run_json({"canonicalize", "--r", "250", "--phi", "-90"});
  EXPECT_EQ(c["r"], 100);
  EXPECT_EQ(c["phi"], 90);
  EXPECT_EQ(c["clamped"], true);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"catalog", "--bogus"}).code, cli::kUsage);
  EXPECT_EQ(run({"kernel", "--r", "3"}).code, cli::kUsage);
  EXPECT_EQ(run({"kernel", "--r", "3", "--phi", "-90"}).code, cli::kUsage);
  EXPECT_EQ(run({"report-dist", "--manifest", "/nonexistent/m.csv"}).code, cli::kUsage);
  EXPECT_EQ(run({"--trig", "degrees", "catalog"}).code, cli::kUsage);
  EXPECT_EQ(run({"catalog", "--r-min", "9", "--r-max", "3"}).code, cli::kUsage);
  EXPECT_EQ(run({"canonicalize"}).code, cli::kUsage);
}

TEST(Cli, HelpOnEverySubcommand) {
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
  for (const char* sub : {"catalog", "kernel", "blur", "gen-dataset", "subset", "report-dist",
                          "deblur", "eval-error-ratio", "eval-r2", "canonicalize"}) {
    const Result r = run({sub, "--help"});
    EXPECT_EQ(r.code, cli::kOk) << sub;
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, MalformedManifestIsUsageError) {
  TempDir dir("cli-bad");
  const auto path = dir.path() / "manifest.csv";
  std::ofstream(path) << "a,b\n1,2\n";
  EXPECT_EQ(run({"report-dist", "--manifest", path.string()}).code, cli::kUsage);
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sources_ = new TempDir("cli-src");
    testing::write_sources(sources_->path(), 40, 32, 32, 12);
  }
  static void TearDownTestSuite() { delete sources_; }
  static TempDir* sources_;

  static std::vector<std::string> gen_args(const std::filesystem::path& out) {
    return {"--seed", "9", "gen-dataset", "--sources", sources_->path().string(), "--out",
            out.string(), "--r-max", "5", "--min-per-length", "6", "--no-blur", "3"};
  }
};

TempDir* CliPipeline::sources_ = nullptr;

TEST_F(CliPipeline, GenerateEvaluateRoundTrip) {
  TempDir work("cli-work");
  const auto ds = work.path() / "ds";
  auto args = gen_args(ds);
  args.insert(args.begin(), "--json");
  const Result g = run(args);
  ASSERT_EQ(g.code, cli::kOk) << g.err;
  const json gj = json::parse(g.out);
  EXPECT_EQ(gj["lengths"], 5);
  EXPECT_GE(gj["min_blurred_length_count"], 6);
  const std::string manifest = (ds / "manifest.csv").string();

  const json dist = run_json({"report-dist", "--manifest", manifest});
  EXPECT_EQ(dist["records"], gj["records"]);

  const Manifest m = read_manifest(manifest);
  const auto pred = work.path() / "pred.csv";
  write_predictions(pred, predictions_from_truth(m));

  const json r2 = run_json({"eval-r2", "--manifest", manifest, "--pred", pred.string()});
  EXPECT_DOUBLE_EQ(r2["r2_length"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(r2["r2_angle"].get<double>(), 1.0);

  const auto csv = work.path() / "ratios.csv";
  const json er = run_json({"--workers", "2", "eval-error-ratio", "--manifest", manifest,
                            "--pred", pred.string(), "--csv", csv.string()});
  ASSERT_EQ(er["ratios"].size(), m.records.size());
  for (const auto& row : er["ratios"]) EXPECT_EQ(row["ratio"], 1.0);
  EXPECT_EQ(er["histogram"]["counts"].back(), m.records.size());
  EXPECT_TRUE(std::filesystem::exists(csv));

  const auto sub = work.path() / "sub.csv";
  const json sj =
      run_json({"subset", "--manifest", manifest, "--axis", "length", "--k", "2", "--out",
                sub.string()});
  EXPECT_EQ(sj["records"], 10);
}

TEST_F(CliPipeline, SeedDeterminism) {
  TempDir a("cli-a"), b("cli-b"), c("cli-c");
  ASSERT_EQ(run(gen_args(a.path())).code, cli::kOk);
  ASSERT_EQ(run(gen_args(b.path())).code, cli::kOk);
  auto other = gen_args(c.path());
  other[1] = "10";
  ASSERT_EQ(run(other).code, cli::kOk);
  const std::string ma = testing::read_file(a.path() / "manifest.csv");
  EXPECT_EQ(ma, testing::read_file(b.path() / "manifest.csv"));
  EXPECT_NE(ma, testing::read_file(c.path() / "manifest.csv"));
}

TEST_F(CliPipeline, DryRunWritesManifestOnly) {
  TempDir out("cli-dry");
  auto args = gen_args(out.path());
  args.push_back("--dry-run");
  ASSERT_EQ(run(args).code, cli::kOk);
  EXPECT_TRUE(std::filesystem::exists(out.path() / "manifest.csv"));
  EXPECT_FALSE(std::filesystem::exists(out.path() / "images"));
}

TEST_F(CliPipeline, ExhaustedPoolIsRuntimeFailure) {
  TempDir out("cli-exh");
  auto args = gen_args(out.path());
  args[args.size() - 3] = "60";  // --min-per-length
  const Result r = run(args);
  EXPECT_EQ(r.code, cli::kRuntimeFailure);
  EXPECT_NE(r.err.find("shortfall"), std::string::npos);
}

TEST_F(CliPipeline, CanonicalizePredictionsFile) {
  TempDir dir("cli-canon");
  write_predictions(dir.path() / "p.csv", {{"a.png", 2.2, 27.0}, {"b.png", 130.0, 181.0}});
  const json j = run_json({"canonicalize", "--pred", (dir.path() / "p.csv").string(), "--out",
                           (dir.path() / "q.csv").string()});
  EXPECT_EQ(j["rows"], 2);
  EXPECT_EQ(j["clamped"], 1);
  const auto q = read_predictions(dir.path() / "q.csv");
  EXPECT_EQ(q[0].r_pred, 2);
  EXPECT_EQ(q[0].phi_pred, 0);
  EXPECT_EQ(q[1].r_pred, 100);
  EXPECT_EQ(q[1].phi_pred, 1);
}

TEST_F(CliPipeline, BlurThenDeblur) {
  TempDir dir("cli-blur");
  const std::string src = (sources_->path() / "src_0000.png").string();
  const auto blurred = dir.path() / "b.png";
  const auto restored = dir.path() / "d.png";
  ASSERT_EQ(run({"blur", "--in", src, "--out", blurred.string(), "--r", "5", "--phi", "45"}).code,
            cli::kOk);
  const json j = run_json({"deblur", "--in", blurred.string(), "--out", restored.string(),
                           "--r", "4", "--phi", "0"});
  EXPECT_EQ(j["deconvolutions"], 4);
  EXPECT_EQ(load_image(restored).height(), 32);
  EXPECT_EQ(run({"deblur", "--in", blurred.string(), "--out", restored.string(), "--r", "5",
                 "--phi", "45", "--method", "rl", "--iterations", "3"})
                .code,
            cli::kOk);
  EXPECT_EQ(run({"blur", "--in", src, "--out", blurred.string(), "--r", "60", "--phi", "90"})
                .code,
            cli::kUsage);
}

TEST_F(CliPipeline, OutputRootPrefixesRelativePaths) {
  TempDir root("cli-root");
  ScopedEnv env("BLURLAB_OUTPUT_ROOT", root.path().string());
  const std::string src = (sources_->path() / "src_0001.png").string();
  ASSERT_EQ(run({"blur", "--in", src, "--out", "nested/b.png", "--r", "3", "--phi", "0"}).code,
            cli::kOk);
  EXPECT_TRUE(std::filesystem::exists(root.path() / "nested" / "b.png"));
  const auto abs = root.path() / "abs.png";
  ASSERT_EQ(run({"blur", "--in", src, "--out", abs.string(), "--r", "3", "--phi", "0"}).code,
            cli::kOk);
  EXPECT_TRUE(std::filesystem::exists(abs));
}

}  // namespace
}  // namespace blurlab
