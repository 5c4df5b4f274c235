#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "hsd/cli.hpp"
#include "support.hpp"

using nlohmann::json;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result hsd_run(std::vector<std::string> args) {
  args.insert(args.begin(), "hsd");
  std::ostringstream out, err;
  Result r;
  r.code = hsd::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t file_count(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir)) return 0;
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++n;
  return n;
}

// A small synthetic scene shared by the tests of one fixture instance.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const Result r = hsd_run({"synth", "-q", "-o", scene_, "--lines", "16", "--samples", "24", "--bands", "6",
                              "--plants", "12", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::string scene(const std::string& name) const { return scene_ + "/" + name; }

  Result detect(const std::string& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{"detect",      "-q",       "--cube",    scene("cube.hdr"),
                                  "--signature", scene("signature.csv"), "--regions", scene("regions.cfg"),
                                  "-o",          out};
    args.insert(args.end(), extra.begin(), extra.end());
    return hsd_run(args);
  }

  TempDir dir_;
  std::string scene_ = dir_ / "scene";
};

}  // namespace

TEST_F(CliTest, SynthWritesSceneFiles) {
  for (const char* f : {"cube.hdr", "cube.img", "mask.hdr", "mask.img", "signature.csv", "regions.cfg", "synth.json"})
    EXPECT_TRUE(std::filesystem::exists(scene(f))) << f;
  const json info = json::parse(slurp(scene("synth.json")));
  EXPECT_EQ(info["split_sample"], 12);
  const std::string regions = slurp(scene("regions.cfg"));
  EXPECT_NE(regions.find("region train 0 0 16 12"), std::string::npos) << regions;
  EXPECT_NE(regions.find("region test 0 12 16 12"), std::string::npos) << regions;
}

TEST_F(CliTest, DetectReportHasNoAuc) {
  const std::string out = dir_ / "det";
  const Result r = detect(out, {"--method", "ace", "--region", "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out + "/ace_test.hdr"));
  EXPECT_TRUE(std::filesystem::exists(out + "/ace_test.img"));
  const json report = json::parse(slurp(out + "/ace_test.json"));
  EXPECT_FALSE(report.contains("auc"));
  EXPECT_EQ(report["method"], "ace");
  EXPECT_EQ(report["normalized"], true);
}

TEST_F(CliTest, CenteredCemVariantIsRecorded) {
  const std::string out = dir_ / "cem";
  ASSERT_EQ(detect(out, {"--method", "cem", "--centered-cem"}).code, 0);
  const json report = json::parse(slurp(out + "/cem_full.json"));
  EXPECT_EQ(report["variant"], "centered");
  ASSERT_EQ(detect(out, {"--method", "cem"}).code, 0);
  EXPECT_EQ(json::parse(slurp(out + "/cem_full.json"))["variant"], "uncentered");
}

TEST_F(CliTest, MissingSignatureIsInvalidInput) {
  const std::string out = dir_ / "none";
  const std::string missing = dir_ / "nowhere.csv";
  const Result r = hsd_run({"detect", "--cube", scene("cube.hdr"), "--signature", missing, "-o", out});
  EXPECT_EQ(r.code, hsd::cli::kInvalidInput);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
  EXPECT_EQ(file_count(out), 0u);
}

TEST_F(CliTest, ExcludePositivesNeedsMask) {
  EXPECT_EQ(detect(dir_ / "x", {"--exclude-positives"}).code, hsd::cli::kInvalidInput);
  const Result ok = detect(dir_ / "y", {"--exclude-positives", "--mask", scene("mask.hdr")});
  EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST_F(CliTest, BadArgumentsAreInvalidInput) {
  EXPECT_EQ(detect(dir_ / "a", {"--method", "svm"}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(detect(dir_ / "b", {"--region", "nowhere"}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(detect(dir_ / "c", {"--window", "0,0,99,99"}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(hsd_run({"detect", "--bogus"}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(hsd_run({}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(file_count(dir_.path() / "a") + file_count(dir_.path() / "b") + file_count(dir_.path() / "c"), 0u);
}

TEST_F(CliTest, DetectIsByteIdenticalAcrossRunsAndThreads) {
  ASSERT_EQ(detect(dir_ / "r1", {"--method", "mf"}).code, 0);
  ASSERT_EQ(detect(dir_ / "r2", {"--method", "mf"}).code, 0);
  ASSERT_EQ(detect(dir_ / "r3", {"--method", "mf", "--parallel", "3"}).code, 0);
  EXPECT_EQ(slurp(dir_ / "r1/mf_full.img"), slurp(dir_ / "r2/mf_full.img"));
  EXPECT_EQ(slurp(dir_ / "r1/mf_full.json"), slurp(dir_ / "r2/mf_full.json"));
  EXPECT_EQ(slurp(dir_ / "r1/mf_full.img"), slurp(dir_ / "r3/mf_full.img"));
}

TEST_F(CliTest, SavedBackgroundReproducesScores) {
  ASSERT_EQ(detect(dir_ / "s", {"--region", "test", "--save-background", "bg.bin"}).code, 0);
  const Result r = detect(dir_ / "t", {"--region", "test", "--load-background", dir_ / "s/bg.bin"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "s/ace_test.img"), slurp(dir_ / "t/ace_test.img"));
}

TEST_F(CliTest, EvalWritesCurvesAndSummary) {
  ASSERT_EQ(detect(dir_ / "e", {"--region", "test"}).code, 0);
  const Result r = hsd_run({"eval", "-q", "--scores", dir_ / "e/ace_test.hdr", "--mask", scene("mask.hdr"), "-o",
                            dir_ / "e", "--svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("auc="), std::string::npos);
  const json s = json::parse(slurp(dir_ / "e/ace_test_summary.json"));
  EXPECT_GE(s["auc"].get<double>(), 0.0);
  EXPECT_LE(s["auc"].get<double>(), 1.0);
  EXPECT_EQ(s["region"], "test");
  EXPECT_EQ(slurp(dir_ / "e/ace_test_roc.csv").rfind("fpr,tpr\n0,0\n", 0), 0u);
  EXPECT_EQ(slurp(dir_ / "e/ace_test_pr.csv").rfind("recall,precision\n0,1\n", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "e/ace_test_roc_log.svg"));
}

TEST_F(CliTest, ScoreNnRejectsBandMismatch) {
  const Result t = hsd_run({"train-nn", "-q", "--cube", scene("cube.hdr"), "--mask", scene("mask.hdr"), "--regions",
                            scene("regions.cfg"), "--region", "train", "--epochs", "2", "-o", dir_ / "nn"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "nn/nn_model.bin"));
  EXPECT_EQ(slurp(dir_ / "nn/nn_loss.csv").rfind("epoch,mean_loss\n1,", 0), 0u);

  const Result ok = hsd_run({"score-nn", "-q", "--cube", scene("cube.hdr"), "--model", dir_ / "nn/nn_model.bin",
                             "-o", dir_ / "nn"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "nn/nn_full.hdr"));

  ASSERT_EQ(hsd_run({"synth", "-q", "-o", dir_ / "five", "--lines", "4", "--samples", "4", "--bands", "5",
                     "--plants", "2"})
                .code,
            0);
  const Result bad = hsd_run({"score-nn", "--cube", dir_ / "five/cube.hdr", "--model", dir_ / "nn/nn_model.bin",
                              "-o", dir_ / "bad"});
  EXPECT_EQ(bad.code, hsd::cli::kInvalidInput);
  EXPECT_NE(bad.err.find("band"), std::string::npos) << bad.err;
  EXPECT_EQ(file_count(dir_.path() / "bad"), 0u);
}

TEST(CliReport, TableHasOneRowPerMethod) {
  TempDir dir;
  std::vector<std::string> args{"report"};
  const char* methods[] = {"nn", "cem", "ace", "mf", "sam"};
  double v = 0.5;
  for (const char* m : methods)
    for (const char* r : {"train", "test"}) {
      if (std::string(m) == "sam" && std::string(r) == "train") continue;  // leaves one empty cell
      const std::string path = dir / (std::string(m) + "_" + r + ".json");
      spit(path, json{{"method", m}, {"region", r}, {"auc", v + 0.01}, {"ap", v}}.dump());
      args.push_back(path);
      v += 0.02;
    }
  const Result r = hsd_run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::vector<std::string> rows;
  for (std::string line; std::getline(lines, line);) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u) << r.out;
  EXPECT_NE(rows[0].find("train AP"), std::string::npos);
  EXPECT_NE(rows[0].find("test AUC"), std::string::npos);
  EXPECT_EQ(rows[1].rfind("sam", 0), 0u);
  EXPECT_EQ(rows[5].rfind("nn", 0), 0u);
  EXPECT_NE(rows[1].find("--"), std::string::npos);
  EXPECT_NE(rows[5].find("0.500"), std::string::npos);
  EXPECT_TRUE(r.err.empty());
}

TEST(CliReport, LaterDuplicateWinsWithWarning) {
  TempDir dir;
  spit(dir / "a.json", R"({"method":"ace","region":"test","auc":0.9,"ap":0.1})");
  spit(dir / "b.json", R"({"method":"ace","region":"test","auc":0.95,"ap":0.2})");
  const Result r = hsd_run({"report", dir / "a.json", dir / "b.json", "--csv", dir / "t.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: duplicate"), std::string::npos);
  EXPECT_NE(r.out.find("0.200"), std::string::npos);
  EXPECT_EQ(slurp(dir / "t.csv"), "method,test AP,test AUC\nace,0.200,0.950\n");
}

TEST(CliReport, RejectsMalformedSummary) {
  TempDir dir;
  spit(dir / "bad.json", R"({"method":"ace"})");
  EXPECT_EQ(hsd_run({"report", dir / "bad.json"}).code, hsd::cli::kInvalidInput);
  EXPECT_EQ(hsd_run({"report", dir / "missing.json"}).code, hsd::cli::kInvalidInput);
}

TEST(CliHelp, ListsSubcommandsAndFlags) {
  const Result top = hsd_run({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* s : {"detect", "eval", "train-nn", "score-nn", "synth", "report"})
    EXPECT_NE(top.out.find(s), std::string::npos) << s;
  const Result det = hsd_run({"detect", "--help"});
  EXPECT_EQ(det.code, 0);
  for (const char* f : {"--centered-cem", "--exclude-positives", "--parallel", "--window"})
    EXPECT_NE(det.out.find(f), std::string::npos) << f;
}
