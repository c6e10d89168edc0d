#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "mdts/fileio.hpp"
#include "mdts/md_ts.hpp"
#include "mdts/serialize.hpp"

namespace fs = std::filesystem;
using namespace mdts;

namespace {

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MDTS_CALIB_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return files;
}

Json ReadJson(const fs::path& p) { return Json::parse(Slurp(p)); }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fixtures::TempDir("cli");
    data_ = root_ / "data";
    small_ = root_ / "small";
    ASSERT_EQ(RunCli("synth --out " + data_.string() +
                      " --domains 3 --ood-domains 1 --classes 5 --per-domain 400 --seed 3",
                  root_ / "synth.log"),
              0);
    ASSERT_EQ(RunCli("synth --out " + small_.string() + " --domains 2 --ood-domains 1 --classes 4 --per-domain 300 --seed 11",
                  root_ / "synth_small.log"),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  fs::path Out(const std::string& name) const {
    const auto p = root_ / name;
    fs::create_directories(p);
    return p;
  }

  static inline fs::path root_, data_, small_;
};

}  // namespace

TEST_F(CliTest, SynthIsDeterministic) {
  const auto a = Out("det_a"), b = Out("det_b");
  const std::string flags = " --domains 2 --ood-domains 1 --classes 3 --per-domain 50 --seed 9";
  ASSERT_EQ(RunCli("synth --out " + a.string() + flags, a / ".." / "det_a.log"), 0);
  ASSERT_EQ(RunCli("synth --out " + b.string() + flags, a / ".." / "det_b.log"), 0);
  const auto sa = Snapshot(a), sb = Snapshot(b);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  EXPECT_TRUE(sa.count("ground_truth.json"));
  EXPECT_TRUE(sa.count("manifest.json"));
}

TEST_F(CliTest, ExitCodes) {
  const auto out = Out("exit");
  const auto log = out / "log.txt";
  EXPECT_EQ(RunCli("", log), 1);
  EXPECT_EQ(RunCli("frobnicate", log), 1);
  EXPECT_EQ(RunCli("synth --out " + (out / "zero").string() + " --domains 0", log), 1);
  EXPECT_EQ(RunCli("fit --data " + data_.string() + " --out " + out.string() + " --regressor lasso", log), 1);
  EXPECT_EQ(RunCli("fit --data " + data_.string() + " --out " + out.string() + " --method bbq", log), 1);
  EXPECT_EQ(RunCli("fit --data " + data_.string() + " --out " + out.string() + " --clamp 5,1", log), 1);
  EXPECT_EQ(RunCli("fit --data " + (root_ / "nowhere").string() + " --out " + out.string(), log), 3);
  EXPECT_EQ(RunCli("eval --data " + data_.string() + " --model " + (root_ / "none.json").string() + " --out " +
                    out.string(),
                log),
            3);
  EXPECT_NE(RunCli("fit --data " + data_.string() + " --out " + data_.string(), log), 0);
}

TEST_F(CliTest, BoundCheckRejectsTooManyDomains) {
  const auto out = Out("many");
  const auto data = out / "data";
  ASSERT_EQ(RunCli("synth --out " + data.string() + " --domains 5 --ood-domains 1 --classes 3 --per-domain 60",
                out / "synth.log"),
            0);
  ASSERT_EQ(RunCli("fit --data " + data.string() + " --out " + out.string(), out / "fit.log"), 0);
  const int code = RunCli("bound-check --data " + data.string() + " --model " + (out / "model.json").string() +
                           " --out " + out.string(),
                       out / "bound.log");
  EXPECT_NE(code, 0);
  EXPECT_NE(code, 2);
  EXPECT_NE(Slurp(out / "bound.log").find("TooManyDomains"), std::string::npos);
}

TEST_F(CliTest, FullPipelineLeavesInputUntouched) {
  const auto before = Snapshot(data_);
  const auto out = Out("pipeline");
  const std::string common = " --data " + data_.string() + " --out " + out.string();
  const std::string model = " --model " + (out / "model.json").string();
  ASSERT_EQ(RunCli("fit" + common, out / "fit.log"), 0);
  ASSERT_EQ(RunCli("eval" + common + model + " --reliability all", out / "eval.log"), 0);
  ASSERT_EQ(RunCli("ablate" + common, out / "ablate.log"), 0);
  ASSERT_EQ(RunCli("predict-acc" + common + model, out / "acc.log"), 0);
  const int bound = RunCli("bound-check" + common + model, out / "bound.log");
  EXPECT_TRUE(bound == 0 || bound == 2);
  for (const char* f : {"model.json", "report_ind.json", "report_ood.json", "reliability_ind_pooled.csv",
                        "reliability_ood_pooled.csv", "reliability_ind_00.csv", "reliability_ood_00.csv",
                        "ablation.csv", "predicted_accuracy.csv", "accuracy_mae.json", "bound_report.json"}) {
    EXPECT_TRUE(fs::is_regular_file(out / f)) << f;
  }
  EXPECT_EQ(Snapshot(data_), before);

  const auto report = ReadJson(out / "report_ind.json");
  EXPECT_EQ(report["bins"].get<int>(), 20);
  EXPECT_EQ(report["per_domain"].size(), 3u);
  const auto mae = ReadJson(out / "accuracy_mae.json");
  EXPECT_TRUE(mae["ind"].contains("oracle"));
  EXPECT_TRUE(mae["ood"].contains("mdts"));
}

TEST_F(CliTest, CommandsAreRepeatable) {
  const auto a = Out("rep_a"), b = Out("rep_b");
  for (const auto& out : {a, b}) {
    const std::string common = " --data " + data_.string() + " --out " + out.string() + " --split-seed 4";
    ASSERT_EQ(RunCli("fit --grid-search --regressor ridge" + common, out / "fit.log"), 0);
    ASSERT_EQ(RunCli("eval" + common + " --model " + (out / "model.json").string(), out / "eval.log"), 0);
  }
  EXPECT_EQ(Slurp(a / "model.json"), Slurp(b / "model.json"));
  EXPECT_EQ(Slurp(a / "report_ind.json"), Slurp(b / "report_ind.json"));
}

TEST_F(CliTest, SingleBinReportsAccuracyGap) {
  const auto out = Out("bins1");
  const std::string common = " --data " + data_.string() + " --out " + out.string();
  ASSERT_EQ(RunCli("fit --method ts" + common, out / "fit.log"), 0);
  ASSERT_EQ(RunCli("eval --bins 1" + common + " --model " + (out / "model.json").string(), out / "eval.log"), 0);
  const auto report = ReadJson(out / "report_ind.json");
  EXPECT_EQ(report["bins"].get<int>(), 1);
  for (const auto& d : report["per_domain"]) {
    EXPECT_NEAR(d["ece"].get<double>(), std::abs(d["acc"].get<double>() - d["conf"].get<double>()), 1e-12);
  }
}

TEST_F(CliTest, UnitTemperatureModelReportsMsp) {
  const auto out_md = Out("unit_md"), out_ts = Out("unit_ts");
  const auto manifest = ReadJson(data_ / "manifest.json");
  const int j = 5;
  const int p = j + 1;
  SaveModel(MdtsModel({}, FittedRegressor::Linear(RegressorSpec::Ols(), Eigen::VectorXd::Zero(p), 1.0), {}, j, p),
            out_md / "model.json");
  TemperatureModel unit;
  unit.temperature = 1.0;
  SaveModel(unit, out_ts / "model.json");
  for (const auto& out : {out_md, out_ts}) {
    ASSERT_EQ(RunCli("eval --data " + data_.string() + " --out " + out.string() + " --model " +
                      (out / "model.json").string(),
                  out / "eval.log"),
              0)
        << Slurp(out / "eval.log");
  }
  EXPECT_EQ(Slurp(out_md / "report_ind.json"), Slurp(out_ts / "report_ind.json"));
  EXPECT_EQ(Slurp(out_md / "report_ood.json"), Slurp(out_ts / "report_ood.json"));
}

TEST_F(CliTest, AblationOlsRowMatchesFitAndEval) {
  const auto out = Out("ablate_match");
  const std::string common = " --data " + data_.string() + " --out " + out.string();
  ASSERT_EQ(RunCli("ablate" + common, out / "ablate.log"), 0);
  ASSERT_EQ(RunCli("fit --grid-search --regressor ols" + common, out / "fit.log"), 0);
  ASSERT_EQ(RunCli("eval" + common + " --model " + (out / "model.json").string(), out / "eval.log"), 0);

  std::istringstream csv(Slurp(out / "ablation.csv"));
  std::string header, row;
  std::getline(csv, header);
  EXPECT_EQ(header, "regressor,hyperparams,ind_mdece,ood_mdece");
  std::getline(csv, row);
  ASSERT_EQ(row.rfind("ols,", 0), 0u);
  const auto last = row.rfind(',');
  const auto prev = row.rfind(',', last - 1);
  const double ind = std::stod(row.substr(prev + 1, last - prev - 1));
  const double ood = std::stod(row.substr(last + 1));
  EXPECT_EQ(ind, ReadJson(out / "report_ind.json")["mdece"].get<double>());
  EXPECT_EQ(ood, ReadJson(out / "report_ood.json")["mdece"].get<double>());
  int rows = 1;
  while (std::getline(csv, row)) rows += !row.empty();
  EXPECT_EQ(rows, 5);
}

TEST_F(CliTest, BoundHoldsWhenOodIsAnInDomain) {
  const auto out = Out("bound_copy");
  const std::string common = " --data " + small_.string() + " --out " + out.string();
  ASSERT_EQ(RunCli("fit" + common, out / "fit.log"), 0);
  EXPECT_EQ(RunCli("bound-check --slack 0 --ood ind_00" + common + " --model " + (out / "model.json").string(),
                out / "bound.log"),
            0)
      << Slurp(out / "bound.log");
  const auto report = ReadJson(out / "bound_report.json");
  EXPECT_LE(report["lhs"].get<double>(), report["rhs"].get<double>());
}
