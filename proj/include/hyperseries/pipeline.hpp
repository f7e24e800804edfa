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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyperseries/autodiff.hpp"
#include "hyperseries/data.hpp"
#include "hyperseries/keyvalue.hpp"
#include "hyperseries/metrics.hpp"
#include "hyperseries/model.hpp"
#include "hyperseries/synth.hpp"
#include "hyperseries/train.hpp"

namespace hyperseries {

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "HYPERSERIES_OUT";
std::filesystem::path default_output_root();

// A run manifest is a key=value file. Keys mirror the config field names:
//   data:  csv features targets timestamp delimiter missing T T_x T_y k
//          stride split L_max history_policy classes
//   model: cell task d_s d_h d_v d_a
//   train: learning_rate weight_decay batch_size epochs seed objective
//          patience clip_norm predict_mode threads
// A relative `csv` is resolved against the manifest's directory.
KeyValues load_manifest(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
// Applies `key=value` strings on top of `kv`.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides);

struct RunSetup {
  CsvSchema schema;
  std::filesystem::path csv;
  WindowConfig window;
  SplitFractions fractions;
  std::size_t L_max = 128;
  HistoryPolicy policy = HistoryPolicy::kRecent;
  ModelConfig model;
  TrainConfig train;
};

// Interprets a manifest; every key takes its default when absent. Model
// input/output widths come from the feature and target lists.
RunSetup resolve_setup(const KeyValues& kv);
// Fully explicit manifest text for a setup (the `manifest.copy` content).
KeyValues describe_setup(const RunSetup& setup);

WindowedDataset load_dataset(const RunSetup& setup);

struct TrainOutcome {
  HyperModel model;
  TrainReport report;
  Metrics test_last;
  Metrics test_mean;
};

// data -> model -> train; writes manifest.copy, train_report.csv, model.ckpt
// and metrics.csv into `out_dir`.
TrainOutcome run_train(const RunSetup& setup, const std::filesystem::path& out_dir,
                       std::ostream* progress = nullptr);

struct SynthOutcome {
  RegimeSpec spec;
  SynthSeries data;
  OracleStats oracle;
};

// Writes series.csv, manifest.txt, spec.txt and oracle.csv. `spec` is a spec
// file path or one of the built-in names `reference` and `severe`.
SynthOutcome run_synth(const std::string& spec, std::uint64_t seed, const std::filesystem::path& out_dir);
RegimeSpec resolve_regime_spec(const std::string& spec);

// Metrics of a saved run (manifest.copy + model.ckpt) on one split; writes
// eval_<split>.csv into the run directory.
std::vector<std::pair<std::string, Metrics>> run_eval(const std::filesystem::path& run_dir,
                                                      const std::string& split, std::ostream* out);

// Tiny model used by the gradient check.
ModelConfig gradcheck_config(CellKind cell);
inline constexpr std::size_t kGradcheckWindows = 3;
inline constexpr std::uint64_t kGradcheckSeed = 3;

struct GradCheckRun {
  CellKind cell = CellKind::kHyperGru;
  GradCheckReport report;
  double seconds = 0.0;
};

// Gradient check of the full per-instance loss. Parameters and data are drawn
// uniformly from [-1, 1].
GradCheckRun run_gradcheck(CellKind cell, std::uint64_t seed, double h = 1e-6, double tol = 1e-5);
void print_gradcheck(const GradCheckRun& run, std::ostream& out);

enum class SweepAxis { kTk, kHorizon };
SweepAxis parse_sweep_axis(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

struct SweepRow {
  std::size_t value = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;  // test split, predict mode of the setup
};

// Trains one model per value into out_dir/<axis>_<value>; writes sweep.csv
// and sweep_report.txt. Failing values are recorded and skipped.
std::vector<SweepRow> run_sweep(const RunSetup& setup, SweepAxis axis, const std::vector<std::size_t>& values,
                                const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

// Encoder states of the historical windows of one instance of a saved run.
// `instance` indexes the chosen split.
void run_export_hidden(const std::filesystem::path& run_dir, const std::string& split, std::size_t instance,
                       const std::filesystem::path& out);

}  // namespace hyperseries
