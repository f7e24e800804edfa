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
#include <span>
#include <string>
#include <vector>

#include "hyperseries/autodiff.hpp"
#include "hyperseries/cells.hpp"
#include "hyperseries/tensor.hpp"

namespace hyperseries {

// Hyper variants generate the main cell's weights per step; static variants
// are plain recurrent baselines with learned fixed weights.
enum class CellKind : std::uint32_t { kHyperGru = 0, kHyperLstm = 1, kStaticGru = 2, kStaticLstm = 3 };
enum class Task : std::uint32_t { kRegression = 0, kClassification = 1 };
enum class PredictMode { kLast, kMean };

const char* cell_kind_name(CellKind kind);
CellKind parse_cell_kind(const std::string& name);
const char* task_name(Task task);
Task parse_task(const std::string& name);
const char* predict_mode_name(PredictMode mode);
PredictMode parse_predict_mode(const std::string& name);

bool is_hyper(CellKind kind);
std::size_t gate_count(CellKind kind);

struct ModelConfig {
  std::size_t d_x = 1;
  std::size_t d_y = 1;
  std::size_t d_s = 32;
  std::size_t d_h = 16;
  std::size_t d_v = 16;
  std::size_t d_a = 16;
  std::size_t T = 64;    // historical window length
  std::size_t T_x = 64;  // input window length
  std::size_t k = 8;     // pooling kernel
  std::size_t T_y = 1;
  Task task = Task::kRegression;
  CellKind cell = CellKind::kHyperGru;

  std::size_t pooled_length() const { return T / k; }
  // Throws a configuration error naming the first violated constraint.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;
  bool decay = true;  // false for bias vectors

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered parameter bundle. Order is the checkpoint declaration order.
class ParamSet {
 public:
  void add(std::string name, Tensor value, bool decay);
  std::size_t size() const { return entries_.size(); }
  std::size_t index(const std::string& name) const;
  const Tensor& operator[](const std::string& name) const { return entries_[index(name)].value; }
  Tensor& operator[](const std::string& name) { return entries_[index(name)].value; }
  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t scalar_count() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<NamedTensor> entries_;
};

struct HyperModel {
  ModelConfig config;
  std::uint64_t seed = 0;
  ParamSet params;

  HyperEncoderParams encoder() const;
  AttentionParams attention() const;
  WeightGenParams weight_gen() const;
};

// Parameters placed on a tape, with typed views onto the leaves.
struct ModelVars {
  std::vector<Var> leaves;  // aligned with ParamSet order
  HyperEncoderVars encoder;
  AttentionVars attention;
  WeightGenVars weight_gen;
  GruVars static_gru;
  LstmVars static_lstm;
  Var w_out;
  Var b_out;
};

ModelVars bind(Tape& tape, const HyperModel& model, bool requires_grad);
// Binds externally created leaves (same order as ParamSet).
ModelVars bind_leaves(const HyperModel& model, std::span<const Var> leaves);

std::size_t param_count(const ModelConfig& config);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases (static LSTM
// forget bias 1), generator matrices damped by an extra 1/sqrt(d_v).
HyperModel init_params(const ModelConfig& config, std::uint64_t seed);

// Static baseline whose hidden width makes its parameter count closest to the
// given hyper configuration's.
ModelConfig matched_static_config(const ModelConfig& hyper, CellKind static_kind);

// Pre-activation head output [d_y * T_y] for one (x, x_hat) pair.
Var forward_logits(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat);
// Head output with activation applied, as [d_y x T_y].
Var forward_output(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat);

// Encoder states h [T_k x d_h] for one historical window.
Var encode_history(const HyperModel& model, const ModelVars& vars, Var x_hat);

Tensor forward_one(const HyperModel& model, const Tensor& x, const Tensor& x_hat);
std::vector<Tensor> forward_all(const HyperModel& model, const Tensor& x,
                                std::span<const Tensor> history, std::size_t threads = 1);
Tensor predict(const HyperModel& model, const Tensor& x, std::span<const Tensor> history,
               PredictMode mode);

// One CSV row per window holding the final encoder state (d_h values).
void export_hidden_states(const HyperModel& model, std::span<const Tensor> history,
                          const std::filesystem::path& path);

void save_checkpoint(const HyperModel& model, const std::filesystem::path& path);
HyperModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hyperseries
