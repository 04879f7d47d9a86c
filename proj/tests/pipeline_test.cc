#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/pipeline.h"
#include "bundle_check.h"
#include "minicity.h"
#include "oracles.h"
#include "test_util.h"

using namespace mobgap;
namespace mt = mobgap::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::string const& args) {
  auto const cmd = std::string{MOBGAP_CLI} + " " + args + " >/dev/null 2>&1";
  auto const rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool has(std::vector<std::string> const& v, std::string_view needle) {
  return std::any_of(v.begin(), v.end(), [&](std::string const& s) {
    return s.find(needle) != std::string::npos;
  });
}

// Shared two-period fixture, generated once per test binary.
class Bundle : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new mt::TempDir{"mobgap-bundle"};
    cities_ = new std::vector<mt::MiniCity>{mt::minicity_periods(2)};
    cfg_ = new AnalysisConfig{mt::write_minicity_fixture(dir_->path() / "in", *cities_)};
  }
  static void TearDownTestSuite() {
    delete cfg_;
    delete cities_;
    delete dir_;
  }

  static fs::path input(std::string_view p) { return dir_->path() / "in" / p; }
  static fs::path out(std::string_view p) { return dir_->path() / p; }

  static RunOptions fixed() {
    RunOptions o;
    o.generated_at = "2020-01-01T00:00:00Z";
    return o;
  }

  static mt::TempDir* dir_;
  static std::vector<mt::MiniCity>* cities_;
  static AnalysisConfig* cfg_;
};

mt::TempDir* Bundle::dir_ = nullptr;
std::vector<mt::MiniCity>* Bundle::cities_ = nullptr;
AnalysisConfig* Bundle::cfg_ = nullptr;

}  // namespace

TEST(Config, EmptyPeriods) {
  auto const r = parse_config("periods: []\n", ".", false);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has(r.errors, "periods: must be nonempty"));
}

TEST(Config, ThresholdsNormalized) {
  auto const yaml = mt::minicity_config_yaml(mt::minicity_periods(1)) +
                    "connect_thresholds_ft: [100, 30]\n";
  auto const r = parse_config(yaml, ".", false);
  ASSERT_TRUE(r.ok()) << r.errors.front();
  EXPECT_TRUE(has(r.warnings, "connect_thresholds_ft"));
  EXPECT_DOUBLE_EQ(r.config->connect_thresholds.lower_ft, 30);
  EXPECT_DOUBLE_EQ(r.config->connect_thresholds.upper_ft, 100);
}

TEST(Config, Diagnostics) {
  auto const yaml = mt::minicity_config_yaml(mt::minicity_periods(1)) +
                    "grid:\n  cell_mi: 0.25\n  fine_cell_mi: 0.07\n"
                    "router:\n  max_transfers: -1\n";
  auto const r = parse_config(yaml, ".", false);
  EXPECT_TRUE(has(r.errors, "grid.fine_cell_mi"));
  EXPECT_TRUE(has(r.errors, "router.max_transfers"));
  EXPECT_FALSE(r.config);
}

TEST(Config, MissingFiles) {
  mt::TempDir dir;
  mt::write_file(dir / "config.yaml", mt::minicity_config_yaml(mt::minicity_periods(1)));
  auto const r = validate_config((dir / "config.yaml").string());
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has(r.errors, "boundary.geojson"));
}

TEST(Config, YamlRoundTrip) {
  auto const r = parse_config(default_config_yaml(), ".", false);
  ASSERT_TRUE(r.config);
  auto const again = parse_config(config_to_yaml(*r.config), ".", false);
  ASSERT_TRUE(again.config);
  EXPECT_EQ(config_to_yaml(*again.config), config_to_yaml(*r.config));
}

TEST(Config, Unparseable) {
  EXPECT_THROW(parse_config("periods: [\n", ".", false), error);
}

TEST_F(Bundle, Shape) {
  run_pipeline(*cfg_, out("shape"), fixed());
  for (auto const* f : {"summary.csv", "comparison.csv", "report.md", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out("shape") / f)) << f;
  }
  for (auto const& label : {"pre", "during"}) {
    auto const dir = out("shape") / label;
    for (auto const* f : {"trips.csv", "rejected.csv", "assessments.csv",
                          "classification_by_hour.csv", "connecting_by_hour.csv",
                          "correlations.csv"}) {
      EXPECT_TRUE(fs::exists(dir / f)) << label << "/" << f;
    }
    auto grids = 0;
    for (auto const& e : fs::directory_iterator(dir / "grids")) {
      grids += e.path().extension() == ".csv" ? 1 : 0;
    }
    EXPECT_EQ(grids, 3 * static_cast<int>(cfg_->instants.size()));
    auto const corr = parse_csv(slurp(dir / "correlations.csv"));
    EXPECT_EQ(corr.rows.size(), 3 * cfg_->instants.size());
  }
  EXPECT_FALSE(fs::exists(out("shape.staging")));
}

TEST_F(Bundle, MatchesGolden) {
  run_pipeline(*cfg_, out("golden"), fixed());
  auto const golden = mt::golden_report(*cities_, *cfg_);
  for (auto const& p : mt::compare_bundle(out("golden"), golden)) {
    ADD_FAILURE() << p;
  }
}

TEST_F(Bundle, Deterministic) {
  run_pipeline(*cfg_, out("a"), fixed());
  auto opts = fixed();
  opts.jobs = 3;
  run_pipeline(*cfg_, out("b"), opts);
  std::vector<fs::path> files;
  for (auto const& e : fs::recursive_directory_iterator(out("a"))) {
    if (e.is_regular_file()) {
      files.push_back(fs::relative(e.path(), out("a")));
    }
  }
  EXPECT_GT(files.size(), 20U);
  for (auto const& f : files) {
    EXPECT_EQ(slurp(out("a") / f), slurp(out("b") / f)) << f;
  }
}

TEST_F(Bundle, MetadataHeader) {
  run_pipeline(*cfg_, out("meta"), fixed());
  auto const text = slurp(out("meta") / "pre" / "assessments.csv");
  EXPECT_EQ(text.rfind("# ", 0), 0U);
  EXPECT_NE(text.find("# period: pre"), std::string::npos);
}

TEST_F(Bundle, ReplacesPreviousBundleOnly) {
  run_pipeline(*cfg_, out("again"), fixed());
  EXPECT_NO_THROW(run_pipeline(*cfg_, out("again"), fixed()));
  mt::write_file(out("busy") / "notes.txt", "keep me");
  try {
    run_pipeline(*cfg_, out("busy"), fixed());
    ADD_FAILURE() << "expected a config error";
  } catch (error const& e) {
    EXPECT_EQ(e.code(), errc::config_error);
  }
  EXPECT_EQ(slurp(out("busy") / "notes.txt"), "keep me");
}

TEST_F(Bundle, CliExitCodes) {
  auto const cfg = input("config.yaml").string();
  EXPECT_EQ(run_cli("config --validate " + cfg), 0);
  EXPECT_EQ(run_cli("config --defaults"), 0);
  EXPECT_EQ(run_cli("run --config " + cfg + " --out " + out("cli").string() +
                    " --generated-at 2020-01-01T00:00:00Z"),
            0);
  EXPECT_TRUE(fs::exists(out("cli") / "manifest.json"));
  EXPECT_EQ(run_cli("frobnicate"), 2);

  auto bad = slurp(input("config.yaml"));
  bad += "staleness_horizon_s: -5\n";
  mt::write_file(input("bad.yaml"), bad);
  EXPECT_EQ(run_cli("config --validate " + input("bad.yaml").string()), 2);
  EXPECT_EQ(run_cli("run --config " + input("bad.yaml").string() + " --out " +
                    out("cli-bad").string()),
            2);

  // A corrupt feed is a data error.
  mt::TempDir broken;
  fs::copy(input(""), broken.path(), fs::copy_options::recursive);
  mt::write_file(broken / "gtfs.zip", "not a zip");
  EXPECT_EQ(run_cli("run --config " + (broken / "config.yaml").string() +
                    " --out " + (broken / "out").string()),
            3);
}

TEST_F(Bundle, StageCommands) {
  auto const cfg = input("config.yaml").string();
  auto const trips = out("stage_trips.csv").string();
  ASSERT_EQ(run_cli("infer --archive " + input("archive").string() +
                    " --vendor spin --start 2019-07-10T00:00:00Z --end "
                    "2019-07-11T00:00:00Z --config " + cfg + " --out " + trips),
            0);
  auto const kept = parse_csv(slurp(trips));
  EXPECT_GT(kept.rows.size(), 20U);
  ASSERT_EQ(run_cli("classify --config " + cfg + " --period pre --trips " + trips +
                    " --out " + out("stage_assess.csv").string()),
            0);
  ASSERT_EQ(run_cli("report --in " + out("stage_assess.csv").string() + " --out " +
                    out("stage_report").string()),
            0);
  EXPECT_TRUE(fs::exists(out("stage_report") / "summary.csv"));
  EXPECT_EQ(run_cli("supply --config " + cfg + " --period nope --out " +
                    out("stage_supply").string()),
            2);
}
