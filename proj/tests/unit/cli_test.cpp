#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "test_oracles.hpp"

using namespace wobble;
using nlohmann::json;
using wobble::testing::TempDir;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run wobble_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wobble");
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

/// Planted-trigger setup on disk: a labelled dataset, the model, a functional
/// and an identity trigger, one clean model, and a battery manifest.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto p = wobble::testing::planted_trigger_oracle(8, 3, 2, 8.0, 3);
    const auto q = wobble::testing::planted_trigger_oracle(8, 3, 2, 0.0, 4);
    Dataset ds;
    ds.inputs = wobble::testing::planted_clean_points(300, 8, 2, 5);
    ds.classes = 3;
    MlpClassifier clf(p.model);
    ds.labels = clf.classify(ds.inputs).labels;
    save_dataset(ds, dir / "data.json");
    save_mlp(p.model, dir / "poisoned.json");
    save_mlp(q.model, dir / "clean.json");
    save_trigger(p.functional, dir / "functional.json");
    save_trigger(p.identity, dir / "identity.json");
    write_text_file(dir / "battery.json", R"({
      "networks": [
        {"id": "p", "spec": "poisoned.json", "poisoned": true, "implanted": ["functional.json"]},
        {"id": "c", "spec": "clean.json", "poisoned": false}
      ],
      "triggers": ["functional.json", "identity.json"]
    })");
    labels = *ds.labels;
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  TempDir dir;
  std::vector<std::uint32_t> labels;
};

}  // namespace

TEST_F(CliTest, MeasureZeroSigmaToStdout) {
  const auto r = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                             path("poisoned.json"), "--sigma", "0", "--samples", "20",
                             "--points", "7"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j["values"].size(), 7u);
  for (const auto& v : j["values"]) EXPECT_NEAR(v.get<double>(), -std::log1p(1e-5), 1e-15);
  EXPECT_EQ(j["meta"]["point_count"], 7);
}

TEST_F(CliTest, MeasureWritesDistributionBoxplotAndManifest) {
  const auto out = path("m.json");
  const auto r = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                             path("poisoned.json"), "--points", "250", "--sigma", "0.025",
                             "--samples", "500", "--out", out});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto d = distribution_from_json(json::parse(read_text_file(out)));
  EXPECT_EQ(d.values.size(), 250u);
  EXPECT_EQ(d.meta.sigma, 0.025);
  EXPECT_EQ(d.meta.n_samples, 500u);

  const auto box = boxplot_summary(d.values);
  EXPECT_EQ(read_text_file(out + ".boxplot.csv"),
            boxplot_csv_header() + boxplot_csv_row(box, d.values.size()));

  const auto m = json::parse(read_text_file(out + ".manifest.json"));
  EXPECT_EQ(m["command"], "measure");
  EXPECT_EQ(m["tool_version"], cli::kToolVersion);
  EXPECT_EQ(m["seed"], kDefaultSeed);
  EXPECT_EQ(m["config"]["sigma"], 0.025);
  EXPECT_TRUE(m.contains("started_at"));
  EXPECT_TRUE(m.contains("finished_at"));
  ASSERT_EQ(m["inputs"].size(), 2u);
  EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(CliTest, RerunReproducesBytes) {
  const auto out = path("first.json");
  ASSERT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("poisoned.json"), "--points", "40", "--sigma", "0.2", "--samples",
                        "100", "--seed", "99", "--kind", "variance", "--out", out})
                .status,
            0);
  const auto again = path("second.json");
  const auto r = wobble_cli({"rerun", out + ".manifest.json", "--out", again});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(read_text_file(again), read_text_file(out));
  EXPECT_EQ(read_text_file(again + ".boxplot.csv"), read_text_file(out + ".boxplot.csv"));
}

TEST_F(CliTest, JobsDoNotChangeOutput) {
  std::vector<std::string> base{"measure", "--dataset", path("data.json"), "--oracle",
                                path("poisoned.json"), "--points", "30", "--samples", "80"};
  auto one = base, three = base;
  three.insert(three.end(), {"--jobs", "3", "--max-batch", "7"});
  const auto a = wobble_cli(one), b = wobble_cli(three);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, ClassFilterKeepsMatchingPoints) {
  const auto r = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                             path("poisoned.json"), "--class-filter", "1", "--samples", "10"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["meta"]["class_filter"], 1);
  EXPECT_EQ(j["values"].size(),
            static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1u)));
}

TEST_F(CliTest, SweepCoversGrid) {
  const auto out = path("sweep.json");
  const auto r = wobble_cli({"sweep", "--dataset", path("data.json"), "--oracle",
                             path("poisoned.json"), "--points", "10", "--sigma-list",
                             "0.01,0.1,0.5", "--samples-list", "50,100", "--out", out});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(read_text_file(out));
  ASSERT_EQ(j["cells"].size(), 6u);
  EXPECT_EQ(j["cells"][5]["sigma"], 0.5);
  EXPECT_EQ(j["cells"][5]["n_samples"], 100);
  std::istringstream csv(read_text_file(out + ".boxplot.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 7);
}

TEST_F(CliTest, CompareTwoDistributions) {
  for (const char* name : {"a.json", "b.json"}) {
    ASSERT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                          path(std::string(name) == "a.json" ? "poisoned.json" : "clean.json"),
                          "--points", "30", "--samples", "60", "--out", path(name)})
                  .status,
              0);
  }
  const auto r = wobble_cli({"compare", path("a.json"), path("b.json"), "--test", "levene"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["tests"].size(), 1u);
  EXPECT_EQ(j["tests"][0]["test"], "levene");

  ASSERT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("clean.json"), "--points", "30", "--samples", "60", "--sigma", "0.3",
                        "--out", path("c.json")})
                .status,
            0);
  const auto bad = wobble_cli({"compare", path("a.json"), path("c.json")});
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.err.find("incompatible"), std::string::npos);
}

TEST_F(CliTest, DetectFlagsPlantedTrigger) {
  const auto out = path("detect.json");
  const auto r = wobble_cli({"detect", "--dataset", path("data.json"), "--oracle",
                             path("poisoned.json"), "--trigger", path("functional.json"),
                             "--trigger", path("identity.json"), "--out", out});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(read_text_file(out));
  ASSERT_EQ(j["reports"].size(), 2u);
  const auto& functional = j["reports"][0];
  EXPECT_EQ(functional["trigger"], "functional");
  EXPECT_EQ(functional["sigma"], 0.15);
  EXPECT_EQ(functional["clean"]["values"].size(), 25u);
  EXPECT_LT(functional["tests"][0]["p_value"].get<double>(), 0.01);
  for (const auto& t : j["reports"][1]["tests"]) EXPECT_EQ(t["p_value"], 1.0);
}

TEST_F(CliTest, BatteryWritesRocCsv) {
  const auto out = path("battery-out.json");
  const auto r = wobble_cli({"battery", "--manifest", path("battery.json"), "--dataset",
                             path("data.json"), "--samples", "100", "--out", out});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = json::parse(read_text_file(out));
  EXPECT_EQ(j["cells"].size(), 4u);
  EXPECT_EQ(j["roc"]["levene"]["auc"], 1.0);
  const auto csv = read_text_file(out + ".roc.csv");
  EXPECT_EQ(csv.rfind("test,threshold,fpr,tpr\n", 0), 0u);
  EXPECT_NE(csv.find("\nlevene,-inf,0,0\n"), std::string::npos);
}

TEST_F(CliTest, SubprocessOracle) {
  const auto spec = std::string("cmd:") + STUB_ORACLE_PATH + " --model " + path("poisoned.json");
  const auto remote = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle", spec,
                                  "--points", "5", "--samples", "30"});
  const auto local = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                                 path("poisoned.json"), "--points", "5", "--samples", "30"});
  ASSERT_EQ(remote.status, 0) << remote.err;
  EXPECT_EQ(json::parse(remote.out)["values"], json::parse(local.out)["values"]);
}

TEST_F(CliTest, OracleFailureIsRuntimeError) {
  const auto spec = std::string("cmd:") + STUB_ORACLE_PATH + " --mode crash --model " +
                    path("poisoned.json");
  const auto r = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle", spec,
                             "--points", "3", "--samples", "5"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("point 0"), std::string::npos);
}

TEST_F(CliTest, TimeoutFromEnvironment) {
  ::setenv("WOBBLE_TIMEOUT_SECS", "0.3", 1);
  const auto spec = std::string("cmd:") + STUB_ORACLE_PATH + " --mode silent --model " +
                    path("poisoned.json");
  const auto r = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle", spec,
                             "--points", "1", "--samples", "5"});
  ::setenv("WOBBLE_TIMEOUT_SECS", "soon", 1);
  const auto bad = wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                               path("poisoned.json"), "--points", "1", "--samples", "5"});
  ::unsetenv("WOBBLE_TIMEOUT_SECS");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("timeout"), std::string::npos);
  EXPECT_EQ(bad.status, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(wobble_cli({}).status, 1);
  EXPECT_EQ(wobble_cli({"frobnicate"}).status, 1);
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("data.json")}).status, 1);
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("poisoned.json"), "--no-such-flag"})
                .status,
            1);
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("poisoned.json"), "--sigma", "abc"})
                .status,
            1);
}

TEST_F(CliTest, RuntimeErrors) {
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("missing.json"), "--oracle",
                        path("poisoned.json")})
                .status,
            2);
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("poisoned.json"), "--kind", "gini"})
                .status,
            2);
  EXPECT_EQ(wobble_cli({"measure", "--dataset", path("data.json"), "--oracle",
                        path("poisoned.json"), "--points", "301"})
                .status,
            2);
}

TEST(Cli, HelpAndVersion) {
  const auto help = wobble_cli({"--help"});
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("measure"), std::string::npos);
  const auto version = wobble_cli({"--version"});
  EXPECT_EQ(version.status, 0);
  EXPECT_NE(version.out.find(cli::kToolVersion), std::string::npos);
}
