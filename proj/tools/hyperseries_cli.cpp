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

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hyperseries/hyperseries.h"

namespace {

// Manifest keys accepted as --<key> flags on train and sweep.
const char* const kManifestKeys[] = {
    "csv",           "features",    "targets",    "timestamp",     "delimiter", "missing",
    "T",             "T_x",         "T_y",        "k",             "stride",    "split",
    "L_max",         "history_policy", "classes", "cell",          "task",      "d_s",
    "d_h",           "d_v",         "d_a",        "learning_rate", "weight_decay", "batch_size",
    "epochs",        "seed",        "objective",  "patience",      "clip_norm", "predict_mode",
    "threads"};

struct ManifestFlags {
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<std::string> extra;

  void attach(CLI::App* cmd) {
    values.reserve(std::size(kManifestKeys) + 1);
    for (const char* key : kManifestKeys) {
      values.emplace_back(key, std::string());
      cmd->add_option(std::string("--") + key, values.back().second, std::string("manifest key ") + key)
          ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    values.emplace_back("learning_rate", std::string());
    cmd->add_option("--lr", values.back().second, "alias of --learning_rate")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--set", extra, "extra key=value overrides");
  }

  std::vector<std::string> overrides() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values)
      if (!v.empty()) out.push_back(k + "=" + v);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }
};

int check(hs_status status, const char* stage) {
  if (status == HS_OK) return 0;
  std::fprintf(stderr, "%s failed (%s): %s\n", stage, hs_status_name(status), hs_last_error());
  return 1;
}

std::vector<const char*> c_strings(const std::vector<std::string>& items) {
  std::vector<const char*> out;
  for (const auto& s : items) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypernetwork recurrent forecaster"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hs_version()));

  std::string spec = "reference";
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a regime-switching AR(2) series");
  synth->add_option("--spec", spec, "spec file, or 'reference' / 'severe'");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory");

  std::string manifest;
  std::string train_out;
  ManifestFlags train_flags;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train a model described by a manifest");
  train->add_option("--manifest", manifest, "run manifest")->required();
  train->add_option("--out", train_out, "output directory");
  train->add_flag("--quiet", quiet, "suppress progress lines");
  train_flags.attach(train);

  std::string run_dir;
  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "evaluate a trained run");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--split", split, "train, valid or test");

  std::string cell = "both";
  std::uint64_t gc_seed = hs_gradcheck_default_seed();
  std::string fault;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the training loss gradient");
  gradcheck->add_option("--cell", cell, "gru, lstm or both");
  gradcheck->add_option("--seed", gc_seed, "seed of the evaluation point");
  gradcheck->add_option("--fault", fault, "corrupt the backward rule of one op (testing)");

  std::string sweep_manifest;
  std::string axis = "T_k";
  std::vector<std::size_t> values;
  std::string sweep_out;
  ManifestFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "train one model per axis value");
  sweep->add_option("--manifest", sweep_manifest, "run manifest")->required();
  sweep->add_option("--axis", axis, "T_k or horizon");
  sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_flag("--quiet", quiet, "suppress progress lines");
  sweep_flags.attach(sweep);

  std::string hidden_run;
  std::string hidden_split = "test";
  std::size_t hidden_instance = 0;
  std::string hidden_out;
  auto* hidden = app.add_subcommand("export-hidden", "write encoder states of one instance's history");
  hidden->add_option("--run", hidden_run, "run directory")->required();
  hidden->add_option("--split", hidden_split, "train, valid or test");
  hidden->add_option("--instance", hidden_instance, "instance index within the split");
  hidden->add_option("--out", hidden_out, "output CSV (default <run>/hidden_states.csv)");

  CLI11_PARSE(app, argc, argv);

  if (*synth) {
    double oracle = 0.0;
    if (check(hs_cmd_synth(spec.c_str(), synth_seed, synth_out.c_str(), &oracle), "synth")) return 1;
    std::printf("oracle_rmse=%.6f\n", oracle);
    return 0;
  }
  if (*train) {
    const auto overrides = train_flags.overrides();
    const auto ptrs = c_strings(overrides);
    return check(hs_cmd_train(manifest.c_str(), ptrs.data(), ptrs.size(), train_out.c_str(), quiet ? 0 : 1),
                 "train");
  }
  if (*eval) return check(hs_cmd_eval(run_dir.c_str(), split.c_str(), 1), "eval");
  if (*gradcheck) {
    if (!fault.empty() && check(hs_debug_set_backward_fault(fault.c_str()), "gradcheck")) return 1;
    std::vector<std::string> cells;
    if (cell == "both")
      cells = {"gru", "lstm"};
    else
      cells = {cell};
    bool all = true;
    for (const auto& c : cells) {
      int pass = 0;
      double err = 0.0;
      if (check(hs_cmd_gradcheck(c.c_str(), gc_seed, 1, &pass, &err), "gradcheck")) return 1;
      all = all && pass;
    }
    return all ? 0 : 2;
  }
  if (*sweep) {
    const auto overrides = sweep_flags.overrides();
    const auto ptrs = c_strings(overrides);
    return check(hs_cmd_sweep(sweep_manifest.c_str(), ptrs.data(), ptrs.size(), axis.c_str(), values.data(),
                              values.size(), sweep_out.c_str(), quiet ? 0 : 1),
                 "sweep");
  }
  if (*hidden)
    return check(hs_cmd_export_hidden(hidden_run.c_str(), hidden_split.c_str(), hidden_instance, hidden_out.c_str()),
                 "export-hidden");
  return 0;
}
