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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hyperseries/autodiff.hpp"
#include "hyperseries/data.hpp"
#include "hyperseries/metrics.hpp"
#include "hyperseries/model.hpp"

namespace hyperseries {

enum class Objective { kL2, kCrossEntropy };
const char* objective_name(Objective objective);
Objective parse_objective(const std::string& name);

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
  Objective objective = Objective::kL2;
  std::size_t patience = 10;
  double clip_norm = 5.0;
  PredictMode predict_mode = PredictMode::kLast;
  std::size_t threads = 1;

  void validate() const;
};

struct AdamWState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

AdamWState make_adamw_state(const ParamSet& params);

// Decoupled weight decay, skipped for parameters flagged as biases.
void adamw_step(ParamSet& params, std::span<const Tensor> grads, AdamWState& state,
                const TrainConfig& cfg);

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

// criterion(prediction, target) for one historical window.
Var criterion(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat, const Tensor& y,
              Objective objective);

// Mean of the criterion over every window of the historical set.
Var loss_instance(const HyperModel& model, const ModelVars& vars, const Instance& inst,
                  const HistoricalSet& history, Objective objective);

struct InstanceGradient {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with ParamSet order
};

InstanceGradient instance_gradient(const HyperModel& model, const Instance& inst,
                                   const HistoricalSet& history, Objective objective);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_metric = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  void write_csv(const std::filesystem::path& path) const;
};

// Validation loss of predict(mode) against the targets (normalized scale).
double validation_loss(const HyperModel& model, const WindowedDataset& data,
                       std::span<const Instance> split, PredictMode mode, Objective objective);

// Runs the optimization loop. On return `model` holds the parameters of the
// epoch with the best validation loss. Progress lines go to `progress` when
// given.
TrainReport fit(HyperModel& model, const WindowedDataset& data, const TrainConfig& cfg,
                std::ostream* progress = nullptr);

// Metrics of predict(mode) on a split. Regression metrics are reported on
// the original scale unless normalized_scale is set.
Metrics evaluate(const HyperModel& model, const WindowedDataset& data, std::span<const Instance> split,
                 PredictMode mode, bool normalized_scale = false);

}  // namespace hyperseries
