/* Copyright 2026 The hyperseries Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "hyperseries/error.hpp"
#include "hyperseries/pipeline.hpp"

using namespace hyperseries;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("hyperseries_pipeline_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream(root_ / "tiny.spec") << "length = 400\nregime = 0 0.5 0.2 0.1\nregime = 2 -0.4 0.3 0.1\n"
                                         "cycle = 100\n";
    run_synth((root_ / "tiny.spec").string(), 3, root_ / "synth");
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::vector<std::string> tiny_overrides() {
    return {"T=8", "T_x=4", "k=2", "stride=2", "L_max=2", "d_s=4", "d_h=4", "d_v=2", "d_a=2",
            "epochs=2", "learning_rate=0.01"};
  }
  static RunSetup tiny_setup(std::vector<std::string> extra = {}) {
    auto o = tiny_overrides();
    o.insert(o.end(), extra.begin(), extra.end());
    return resolve_setup(load_manifest(root_ / "synth" / "manifest.txt", o));
  }

  static fs::path root_;
};

fs::path Pipeline::root_;

}  // namespace

TEST_F(Pipeline, SynthWritesEveryArtifact) {
  const fs::path dir = root_ / "synth";
  for (const char* f : {"series.csv", "manifest.txt", "spec.txt", "oracle.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(line_count(dir / "series.csv"), 401u);
  const std::string oracle = slurp(dir / "oracle.csv");
  EXPECT_EQ(oracle.rfind("regime,mu,phi1,phi2,sigma,count,oracle_rmse\n", 0), 0u);
  EXPECT_NE(oracle.find("\nall,,,,,398,"), std::string::npos) << oracle;

  run_synth((root_ / "tiny.spec").string(), 3, root_ / "synth_again");
  EXPECT_EQ(slurp(dir / "series.csv"), slurp(root_ / "synth_again" / "series.csv"));
  run_synth((root_ / "tiny.spec").string(), 4, root_ / "synth_other");
  EXPECT_NE(slurp(dir / "series.csv"), slurp(root_ / "synth_other" / "series.csv"));
}

TEST_F(Pipeline, SynthOracleNearNoiseLevel) {
  const SynthOutcome r = run_synth("reference", 1, root_ / "synth_ref");
  EXPECT_NEAR(r.oracle.rmse, 0.1, 0.005);
  for (double v : r.oracle.rmse_per_regime) EXPECT_NEAR(v, 0.1, 0.01);
  EXPECT_EQ(line_count(root_ / "synth_ref" / "series.csv"), 6001u);
}

TEST_F(Pipeline, SynthRejectsBadSpecWithLine) {
  std::ofstream(root_ / "bad.spec") << "length = 10\nregime = 0 0.5\n";
  try {
    run_synth((root_ / "bad.spec").string(), 1, root_ / "bad_out");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("bad.spec:2"), std::string::npos) << e.what();
  }
}

TEST_F(Pipeline, ManifestResolutionAndDefaults) {
  const RunSetup s = resolve_setup(load_manifest(root_ / "synth" / "manifest.txt"));
  EXPECT_TRUE(s.csv.is_absolute());
  EXPECT_EQ(s.csv.filename(), "series.csv");
  EXPECT_EQ(s.window.T, 64u);
  EXPECT_EQ(s.window.T_x, 64u);
  EXPECT_EQ(s.window.stride, 1u);
  EXPECT_EQ(s.L_max, 128u);
  EXPECT_EQ(s.model.k, 8u);
  EXPECT_EQ(s.model.cell, CellKind::kHyperGru);
  EXPECT_EQ(s.train.learning_rate, 2e-4);
  EXPECT_EQ(s.train.objective, Objective::kL2);
  EXPECT_DOUBLE_EQ(s.fractions.train, 0.6);
}

TEST_F(Pipeline, DerivedDefaultsFollowTheirSource) {
  const RunSetup s = resolve_setup(load_manifest(root_ / "synth" / "manifest.txt", {"T=32", "d_h=12"}));
  EXPECT_EQ(s.window.T_x, 32u);
  EXPECT_EQ(s.model.T_x, 32u);
  EXPECT_EQ(s.model.d_v, 12u);
  EXPECT_EQ(s.model.d_a, 12u);
  const RunSetup pinned = resolve_setup(load_manifest(root_ / "synth" / "manifest.txt", {"T=32", "T_x=5", "d_v=3"}));
  EXPECT_EQ(pinned.window.T_x, 5u);
  EXPECT_EQ(pinned.model.d_v, 3u);
  EXPECT_EQ(pinned.model.d_a, 16u);
}

TEST_F(Pipeline, DescribeSetupRoundTrips) {
  const RunSetup s = tiny_setup({"cell=static_lstm", "history_policy=uniform", "split=0.5,0.25,0.25"});
  const KeyValues text = describe_setup(s);
  const RunSetup back = resolve_setup(KeyValues::parse(text.str()));
  EXPECT_EQ(describe_setup(back).str(), text.str());
  EXPECT_EQ(back.model, s.model);
  EXPECT_EQ(back.policy, HistoryPolicy::kUniform);
}

TEST_F(Pipeline, UnknownKeysAndBadOverrides) {
  try {
    resolve_setup(KeyValues::parse("csv = a.csv\nlearning_rte = 0.1\n", "m.txt"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("m.txt:2"), std::string::npos) << e.what();
  }
  KeyValues kv;
  EXPECT_THROW(apply_overrides(kv, {"novalue"}), Error);
  EXPECT_THROW(apply_overrides(kv, {"=3"}), Error);
  apply_overrides(kv, {"seed = 9"});
  EXPECT_EQ(kv.get_u64("seed", 0), 9u);
  EXPECT_THROW(resolve_setup(KeyValues::parse("features = x\n")), Error);
  EXPECT_THROW(tiny_setup({"k=3"}), Error);
  EXPECT_THROW(tiny_setup({"objective=cross_entropy"}), Error);
}

TEST_F(Pipeline, TrainWritesArtifactsAndIsDeterministic) {
  const RunSetup s = tiny_setup();
  const TrainOutcome a = run_train(s, root_ / "train_a");
  const TrainOutcome b = run_train(s, root_ / "train_b");
  for (const char* f : {"manifest.copy", "train_report.csv", "model.ckpt", "metrics.csv"})
    EXPECT_TRUE(fs::exists(root_ / "train_a" / f)) << f;
  EXPECT_EQ(slurp(root_ / "train_a" / "train_report.csv"), slurp(root_ / "train_b" / "train_report.csv"));
  EXPECT_EQ(slurp(root_ / "train_a" / "model.ckpt"), slurp(root_ / "train_b" / "model.ckpt"));
  EXPECT_EQ(line_count(root_ / "train_a" / "train_report.csv"), 3u);
  const std::string metrics = slurp(root_ / "train_a" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("mode,scale,count,rmse,mae,mape\nlast,original,", 0), 0u) << metrics;
  EXPECT_NE(metrics.find("\nmean,normalized,"), std::string::npos);
  EXPECT_EQ(a.test_last.rmse, b.test_last.rmse);

  // Every run is reproducible from its own manifest copy.
  const RunSetup again = resolve_setup(load_manifest(root_ / "train_a" / "manifest.copy"));
  run_train(again, root_ / "train_c");
  EXPECT_EQ(slurp(root_ / "train_a" / "model.ckpt"), slurp(root_ / "train_c" / "model.ckpt"));
}

TEST_F(Pipeline, ZeroLearningRateCheckpointEqualsInit) {
  const RunSetup s = tiny_setup({"learning_rate=0"});
  const TrainOutcome r = run_train(s, root_ / "train_lr0");
  EXPECT_EQ(load_checkpoint(root_ / "train_lr0" / "model.ckpt").params, init_params(s.model, s.train.seed).params);
  EXPECT_EQ(r.model.params, init_params(s.model, s.train.seed).params);
}

TEST_F(Pipeline, EvalMatchesTrainMetrics) {
  const RunSetup s = tiny_setup();
  run_train(s, root_ / "train_eval");
  const auto rows = run_eval(root_ / "train_eval", "test", nullptr);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(slurp(root_ / "train_eval" / "eval_test.csv"), slurp(root_ / "train_eval" / "metrics.csv"));
  run_eval(root_ / "train_eval", "valid", nullptr);
  EXPECT_TRUE(fs::exists(root_ / "train_eval" / "eval_valid.csv"));
  EXPECT_THROW(run_eval(root_ / "train_eval", "holdout", nullptr), Error);
  EXPECT_THROW(run_eval(root_ / "no_such_run", "test", nullptr), Error);
}

TEST_F(Pipeline, ErrorsCarryStagePrefix) {
  RunSetup s = tiny_setup();
  s.csv = root_ / "missing.csv";
  try {
    run_train(s, root_ / "train_missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFile);
    EXPECT_EQ(std::string(e.what()).rfind("data: ", 0), 0u) << e.what();
  }
  s = tiny_setup({"T=300", "T_x=300"});
  try {
    run_train(s, root_ / "train_short");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("data: ", 0), 0u) << e.what();
  }
}

TEST_F(Pipeline, SweepOverTkAndHorizon) {
  const RunSetup s = tiny_setup({"epochs=1"});
  const auto rows = run_sweep(s, SweepAxis::kTk, {2, 3, 4, 8}, root_ / "sweep_tk");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_FALSE(rows[1].ok);
  EXPECT_TRUE(rows[2].ok);
  EXPECT_TRUE(rows[3].ok);
  EXPECT_EQ(line_count(root_ / "sweep_tk" / "sweep.csv"), 5u);
  EXPECT_TRUE(fs::exists(root_ / "sweep_tk" / "T_k_2" / "model.ckpt"));
  const std::string report = slurp(root_ / "sweep_tk" / "sweep_report.txt");
  EXPECT_NE(report.find("T_k=3 failed"), std::string::npos) << report;
  EXPECT_NE(report.find("expectation: smallest T_k has the worst RMSE: "), std::string::npos) << report;

  const auto h = run_sweep(s, SweepAxis::kHorizon, {1, 3, 6}, root_ / "sweep_h");
  for (const auto& r : h) {
    EXPECT_TRUE(r.ok) << r.error;
    EXPECT_GT(r.metrics.count, 0u);
  }
  EXPECT_EQ(load_checkpoint(root_ / "sweep_h" / "horizon_6" / "model.ckpt").config.T_y, 6u);
  EXPECT_THROW(parse_sweep_axis("depth"), Error);
}

TEST_F(Pipeline, ExportHidden) {
  run_train(tiny_setup(), root_ / "train_hidden");
  run_export_hidden(root_ / "train_hidden", "test", 0, root_ / "hidden.csv");
  EXPECT_EQ(line_count(root_ / "hidden.csv"), 3u);
  EXPECT_THROW(run_export_hidden(root_ / "train_hidden", "test", 100000, root_ / "h2.csv"), Error);
  run_train(tiny_setup({"cell=static_gru"}), root_ / "train_static");
  EXPECT_THROW(run_export_hidden(root_ / "train_static", "test", 0, root_ / "h3.csv"), Error);
}

TEST_F(Pipeline, GradcheckPassesAndDetectsCorruption) {
  for (CellKind cell : {CellKind::kHyperGru, CellKind::kHyperLstm}) {
    const GradCheckRun r = run_gradcheck(cell, kGradcheckSeed);
    EXPECT_TRUE(r.report.pass) << r.report.max_rel_err;
    EXPECT_EQ(r.report.entries.size(), init_params(gradcheck_config(cell), 1).params.size());
    std::ostringstream os;
    print_gradcheck(r, os);
    for (const auto& e : r.report.entries) EXPECT_NE(os.str().find(e.name + " max_rel_err="), std::string::npos);
    EXPECT_NE(os.str().find(" pass ("), std::string::npos);
  }
  set_backward_fault(Op::kTanh);
  const GradCheckRun broken = run_gradcheck(CellKind::kHyperGru, kGradcheckSeed);
  set_backward_fault(std::nullopt);
  EXPECT_FALSE(broken.report.pass);
}

TEST_F(Pipeline, GradcheckAtCoarseStepPassesForManySeeds) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed)
    for (CellKind cell : {CellKind::kHyperGru, CellKind::kHyperLstm})
      EXPECT_TRUE(run_gradcheck(cell, seed, 1e-4, 1e-5).report.pass) << seed;
}

TEST(OutputRoot, EnvironmentOverride) {
  ::setenv(kOutputRootEnv, "/tmp/hs_root", 1);
  EXPECT_EQ(default_output_root(), fs::path("/tmp/hs_root"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(default_output_root(), fs::path("runs"));
}
