#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "latwalk/error.hpp"
#include "latwalk_cli/cli.hpp"

using namespace latwalk;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("latwalk_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_main(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

const char* kManifest = R"({
  "seed": 17,
  "experiments": [
    {"id": "halfline", "model": "srw", "params": {"n_grid": [8, 16, 32], "samples": 3000, "compare_n": 0}}
  ]
})";

}  // namespace

TEST(Verify, SimpleRandomWalkPasses) {
  std::ostringstream out, err;
  cli::VerifyConfig cfg;
  EXPECT_EQ(cli::cmd_verify(cfg, out, err), 0) << out.str() << err.str();
  EXPECT_NE(out.str().find("PASS"), std::string::npos);
}

TEST(Verify, NegativeProbabilityRejected) {
  TempDir dir;
  const auto model = dir.write("bad.json", R"({"support": [[1, 0, 0.75], [-1, 0, -0.25], [0, 1, 0.25], [0, -1, 0.25]]})");
  std::ostringstream out, err;
  cli::VerifyConfig cfg;
  cfg.model = model.string();
  EXPECT_NE(cli::cmd_verify(cfg, out, err), 0);
  EXPECT_NE(err.str().find("NonProbability"), std::string::npos) << err.str();
}

TEST(Verify, SublatticeWalkRejected) {
  TempDir dir;
  const auto model = dir.write("even.json", R"({"support": [[2, 0, 0.25], [-2, 0, 0.25], [0, 2, 0.25], [0, -2, 0.25]]})");
  std::ostringstream out, err;
  cli::VerifyConfig cfg;
  cfg.model = model.string();
  EXPECT_NE(cli::cmd_verify(cfg, out, err), 0);
  EXPECT_NE(err.str().find("GeneratesLattice"), std::string::npos) << err.str();
}

TEST(Run, ByteIdenticalReruns) {
  TempDir dir;
  const auto manifest = dir.write("m.json", kManifest);
  cli::RunConfig cfg;
  cfg.manifest = manifest;
  cfg.experiment = "halfline";
  cfg.workers = 1;
  std::ostringstream out, err;
  cfg.out_dir = dir.path() / "a";
  cli::cmd_run(cfg, out, err);
  cfg.out_dir = dir.path() / "b";
  cfg.workers = 4;
  cli::cmd_run(cfg, out, err);
  const auto a = slurp(dir.path() / "a" / "halfline.csv");
  ASSERT_FALSE(a.empty()) << err.str();
  EXPECT_EQ(a, slurp(dir.path() / "b" / "halfline.csv"));
  EXPECT_NE(a.find("seed=17"), std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(dir.path() / "a" / "halfline.json"));
  EXPECT_TRUE(summary["metrics"].contains("slope tau<=T_kN"));
  EXPECT_EQ(summary["seed"], 17);
}

TEST(Run, SeedFlagOverridesManifest) {
  TempDir dir;
  const auto manifest = dir.write("m.json", kManifest);
  EXPECT_NO_THROW(run_main({"latwalk", "run", "--manifest", manifest.string(), "--experiment", "halfline", "--out",
                            (dir.path() / "out").string(), "--seed", "99", "--samples-override", "200"}));
  const auto csv = slurp(dir.path() / "out" / "halfline.csv");
  EXPECT_NE(csv.find("seed=99"), std::string::npos);
  EXPECT_NE(csv.find(",200,"), std::string::npos);
}

TEST(Manifest, BeurlingLargeKRejected) {
  const std::string text = R"({"experiments": [{"id": "beurling", "params": {"k_grid": [1, 40], "n_grid": [64]}}]})";
  try {
    cli::parse_manifest(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Manifest, Errors) {
  try {
    cli::parse_manifest("{\"experiments\": [\n  {\"id\": }\n]}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(cli::parse_manifest(R"({"experiments": [{"id": "nonsense"}]})"), Error);
  EXPECT_THROW(cli::parse_manifest(R"({"experiments": [{"id": "line"}, {"id": "line"}]})"), Error);
}

TEST(Manifest, ShippedManifestParses) {
  const auto m = cli::load_manifest(fs::path(LATWALK_SOURCE_DIR) / "configs" / "experiments.json");
  EXPECT_TRUE(m.seed.has_value());
  EXPECT_EQ(m.find("strip").models.size(), 2u);
  EXPECT_EQ(m.find("overshoot").kind, "overshoot");
}

TEST(Fit, SyntheticPowerLaw) {
  TempDir dir;
  std::string text = "experiment_id,model_hash,param_n,param_k,label,p_hat,stderr,n_samples,seed,cap_hits\n";
  for (int n : {16, 64, 256, 1024}) text += "x,h," + std::to_string(n) + ",0,a," + std::to_string(2.0 / std::sqrt(n)) + ",0,1,1,0\n";
  const auto csv = dir.write("fit.csv", text);
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_fit(csv.string(), -0.5, "", out, err), 0) << err.str();
  EXPECT_NE(out.str().find("slope"), std::string::npos);
  EXPECT_NE(out.str().find("-0.5"), std::string::npos) << out.str();
}

TEST(Fit, MissingFile) {
  std::ostringstream out, err;
  EXPECT_NE(cli::cmd_fit("/nonexistent/x.csv", -0.5, "", out, err), 0);
  EXPECT_NE(err.str().find("IoError"), std::string::npos);
}

TEST(Fit, SingleRow) {
  TempDir dir;
  const auto csv = dir.write(
      "one.csv", "experiment_id,model_hash,param_n,param_k,label,p_hat,stderr,n_samples,seed,cap_hits\nx,h,16,0,a,0.5,0,1,1,0\n");
  std::ostringstream out, err;
  EXPECT_NE(cli::cmd_fit(csv.string(), -0.5, "", out, err), 0);
  EXPECT_NE(err.str().find("InsufficientSamples"), std::string::npos);
}
