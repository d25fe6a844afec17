#include <limits>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "latwalk/error.hpp"
#include "latwalk/experiments.hpp"

using namespace latwalk;

namespace {

RunOptions options(unsigned workers = 1) {
  RunOptions o;
  o.seed = 77;
  o.workers = workers;
  o.chunk = 256;
  return o;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(ExactIdentities, SimpleRandomWalk) {
  IdentityParams p;
  p.harmonic_radius = 4;
  const auto r = exact_identities(presets::srw(), p);
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  EXPECT_TRUE(r.pass());
}

TEST(ExactIdentities, WithoutKernelChecks) {
  IdentityParams p;
  p.kernel_checks = false;
  const auto r = exact_identities(presets::range2(), p);
  EXPECT_TRUE(r.pass());
  EXPECT_THROW(r.check("harmonic"), Error);
  EXPECT_TRUE(r.check("last_exit").pass);
}

TEST(LogAsymptotics, SmallGrid) {
  LogParams p;
  p.n_grid = {16, 32};
  const auto r = exp_log_asymptotics(presets::srw(), p);
  EXPECT_TRUE(r.check("green_bracket").pass) << r.check("green_bracket").detail;
  EXPECT_EQ(r.table("green_offset").rows.size(), 2u);
}

TEST(Halfline, RowsAndDeterminism) {
  HalflineParams p;
  p.n_grid = {8, 16, 32};
  p.samples = 4000;
  p.compare_n = 0;
  const auto one = exp_halfline(presets::srw(), p, options(1));
  const auto three = exp_halfline(presets::srw(), p, options(3));
  EXPECT_EQ(results_csv(one), results_csv(three));
  EXPECT_EQ(one.table("tau<=T_kN").rows.size(), 3u);
  EXPECT_EQ(one.table("tau<=T_kZ+").rows.size(), 3u);
  // Every cell has its own seed.
  EXPECT_NE(one.rows[0].seed, one.rows[1].seed);
}

TEST(Halfline, SamplesOverride) {
  HalflineParams p;
  p.n_grid = {8, 16};
  p.compare_n = 0;
  auto o = options();
  o.samples_override = 500;
  for (const auto& row : exp_halfline(presets::srw(), p, o).rows) EXPECT_EQ(row.n_samples, 500u);
}

TEST(Beurling, RejectsLargeK) {
  BeurlingParams p;
  p.k_grid = {1, 40};
  p.n_grid = {64};
  try {
    exp_beurling(presets::srw(), p, options());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(ResultsCsv, Format) {
  ExperimentReport r;
  r.experiment = "demo";
  r.model_hash = "abc";
  r.seed = 5;
  r.rows.push_back({"demo", "abc", 16, 0, "tau<=T", 0.25, 0.01, 1000, 123, 0});
  const auto ls = lines(results_csv(r));
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[0].rfind("# tool=latwalk ", 0), 0u);
  EXPECT_NE(ls[0].find("seed=5"), std::string::npos);
  EXPECT_EQ(ls[1], "experiment_id,model_hash,param_n,param_k,label,p_hat,stderr,n_samples,seed,cap_hits");
  EXPECT_EQ(ls[2], "demo,abc,16,0,tau<=T,0.25,0.01,1000,123,0");
}

TEST(SummaryJson, Fields) {
  ExperimentReport r;
  r.experiment = "demo";
  r.metrics = {{"slope", -0.5}, {"bad", std::numeric_limits<double>::infinity()}};
  r.checks = {{"slope", true, "ok"}};
  const auto j = nlohmann::json::parse(summary_json(r, 1.5));
  EXPECT_EQ(j["experiment"], "demo");
  EXPECT_EQ(j["pass"], true);
  EXPECT_EQ(j["metrics"]["slope"], -0.5);
  EXPECT_TRUE(j["metrics"]["bad"].is_null());
  EXPECT_EQ(j["checks"][0]["name"], "slope");
  EXPECT_EQ(j["duration_s"], 1.5);
}

TEST(ExperimentReport, Lookup) {
  ExperimentReport r;
  r.checks = {{"a", true, ""}, {"b", false, ""}};
  r.metrics = {{"m", 2.0}};
  EXPECT_FALSE(r.pass());
  EXPECT_TRUE(r.check("a").pass);
  EXPECT_EQ(r.metric("m"), 2.0);
  EXPECT_THROW(r.check("c"), Error);
}
