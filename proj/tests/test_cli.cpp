#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "test_util.hpp"
#include "uwgan/cli.hpp"
#include "uwgan/demo.hpp"

using namespace uwgan;
using nlohmann::json;
using uwgan::testing::read_file;
using uwgan::testing::TempDir;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) { return json::parse(read_file(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    write_demo_corpus(dir / "corpus", 4, 32, 40, 1);
    write_demo_real_pool(dir / "real", 3, 32, 32, 2);
  }

  std::string p(const std::string& child) const { return (dir / child).string(); }

  CliRun synthesize(const std::string& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{"synthesize", "--corpus", p("corpus"), "--out", p(out),
                                  "--count", "4", "--resolution", "32"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  std::vector<std::string> tiny_train() const {
    return {"--max-steps", "2", "--base-filters", "4", "--disc-base-filters", "4",
            "--preview-count", "1"};
  }

  TempDir dir{"cli"};
};

}  // namespace

TEST(CliParse, HelpAndErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--out", "x"}).code, 1);
  EXPECT_EQ(run({"synthesize", "--corpus", "a", "--out", "b", "--count", "many"}).code, 1);
}

TEST_F(Cli, SynthesizeMissingCorpusIsIoError) {
  const auto r = run({"synthesize", "--corpus", p("nothing"), "--out", p("ds")});
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(std::filesystem::exists(dir / "ds/manifest.json"));
}

TEST_F(Cli, BadWaterTypeIsValidationError) {
  EXPECT_EQ(synthesize("ds", {"--types", "b,x"}).code, 1);
}

TEST_F(Cli, FlagsOverrideConfigFileOverridesDefaults) {
  std::ofstream(dir / "cfg.json") << R"({"seed": 9, "dataset": {"count": 7, "types": "d"}})";
  const auto r = run({"synthesize", "--corpus", p("corpus"), "--out", p("ds"), "--config",
                      p("cfg.json"), "--count", "2", "--resolution", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto eff = read_json(dir / "ds/effective_config.json");
  EXPECT_EQ(eff["seed"], 9);
  EXPECT_EQ(eff["dataset"]["count"], 2);
  EXPECT_EQ(eff["dataset"]["types"], "d");
  EXPECT_EQ(eff["dataset"]["resolution"], 32);
  EXPECT_EQ(read_json(dir / "ds/manifest.json")["records"].size(), 2u);
}

TEST_F(Cli, MalformedConfigIsValidationError) {
  std::ofstream(dir / "cfg.json") << "{ not json";
  EXPECT_EQ(synthesize("ds", {"--config", p("cfg.json")}).code, 1);
  std::ofstream(dir / "cfg2.json") << R"({"train": {"lr_schedule": "cosine"}})";
  EXPECT_EQ(synthesize("ds", {"--config", p("cfg2.json")}).code, 1);
}

TEST_F(Cli, SynthesizeIsDeterministic) {
  ASSERT_EQ(synthesize("a").code, 0);
  ASSERT_EQ(synthesize("b").code, 0);
  EXPECT_EQ(read_file(dir / "a/manifest.json"), read_file(dir / "b/manifest.json"));
}

TEST_F(Cli, TrainEnhanceEvaluatePipeline) {
  ASSERT_EQ(synthesize("ds", {"--test-fraction", "0.25"}).code, 0);
  auto train = std::vector<std::string>{"train", "--dataset", p("ds"), "--real", p("real"),
                                        "--out", p("run")};
  const auto tiny = tiny_train();
  train.insert(train.end(), tiny.begin(), tiny.end());
  const auto t = run(train);
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run/final.pt"));
  EXPECT_EQ(read_json(dir / "run/effective_config.json")["train"]["max_steps"], 2);

  const auto e = run({"enhance", "--checkpoint", p("run/final.pt"), "--input", p("ds/test"),
                      "--out", p("enh")});
  ASSERT_EQ(e.code, 0) << e.err;

  const auto v = run({"evaluate", "--enhanced", p("enh"), "--dataset", p("ds"), "--split", "test",
                      "--out", p("eval")});
  ASSERT_EQ(v.code, 0) << v.err;
  const auto metrics = read_json(dir / "eval/metrics.json");
  EXPECT_FALSE(metrics["images"].empty());
  EXPECT_TRUE(metrics["aggregate"]["psnr"].is_number());
  EXPECT_TRUE(std::filesystem::exists(dir / "eval/report.txt"));

  const auto nr = run({"evaluate", "--enhanced", p("real")});
  EXPECT_EQ(nr.code, 0);
  EXPECT_NE(nr.out.find("UIQM"), std::string::npos);
}

TEST_F(Cli, TrainWithoutPoolNeedsAdaptationDisabled) {
  ASSERT_EQ(synthesize("ds").code, 0);
  auto args = std::vector<std::string>{"train", "--dataset", p("ds"), "--out", p("run")};
  const auto tiny = tiny_train();
  args.insert(args.end(), tiny.begin(), tiny.end());
  EXPECT_EQ(run(args).code, 1);
  args.push_back("--disable-da");
  EXPECT_EQ(run(args).code, 0);
}

TEST_F(Cli, EnhanceMissingCheckpointIsIoError) {
  EXPECT_EQ(run({"enhance", "--checkpoint", p("none.pt"), "--input", p("real"), "--out", p("o")})
                .code,
            3);
}

TEST_F(Cli, AblateWritesFourRows) {
  ASSERT_EQ(synthesize("ds", {"--test-fraction", "0.25"}).code, 0);
  auto args = std::vector<std::string>{"ablate", "--dataset", p("ds"), "--real", p("real"),
                                       "--out", p("abl")};
  const auto tiny = tiny_train();
  args.insert(args.end(), tiny.begin(), tiny.end());
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_json(dir / "abl/ablation.json")["rows"];
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0]["method"], "full");
  EXPECT_EQ(rows[1]["method"], "-DA");
  EXPECT_EQ(rows[2]["method"], "-PF");
  EXPECT_EQ(rows[3]["method"], "-PL");
  EXPECT_TRUE(rows[2]["config"]["ablation"]["disable_feedback"].get<bool>());
  EXPECT_TRUE(rows[0]["psnr"].is_number());
  EXPECT_TRUE(std::filesystem::exists(dir / "abl/ablation.txt"));
}
