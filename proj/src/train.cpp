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

#include "hyperseries/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "hyperseries/keyvalue.hpp"

namespace hyperseries {

const char* objective_name(Objective objective) {
  return objective == Objective::kL2 ? "l2" : "cross_entropy";
}

Objective parse_objective(const std::string& name) {
  if (name == "l2" || name == "L2") return Objective::kL2;
  if (name == "cross_entropy") return Objective::kCrossEntropy;
  fail(ErrorKind::kConfig, "unknown objective '" + name + "' (l2, cross_entropy)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    fail(ErrorKind::kConfig, "learning rate must be finite and non-negative");
  if (!(weight_decay >= 0.0)) fail(ErrorKind::kConfig, "weight decay must be non-negative");
  if (batch_size == 0) fail(ErrorKind::kConfig, "batch size must be >= 1");
  if (!(clip_norm > 0.0)) fail(ErrorKind::kConfig, "gradient clip norm must be positive");
  if (threads == 0) fail(ErrorKind::kConfig, "threads must be >= 1");
}

AdamWState make_adamw_state(const ParamSet& params) {
  AdamWState s;
  for (const auto& e : params.entries()) {
    s.m.emplace_back(e.value.shape());
    s.v.emplace_back(e.value.shape());
  }
  return s;
}

void adamw_step(ParamSet& params, std::span<const Tensor> grads, AdamWState& state,
                const TrainConfig& cfg) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || state.m.size() != entries.size())
    fail(ErrorKind::kContract, "adamw_step: gradient count does not match parameters");
  for (std::size_t p = 0; p < entries.size(); ++p) {
    if (grads[p].shape() != entries[p].value.shape())
      fail(ErrorKind::kDimension, "adamw_step: gradient shape mismatch for " + entries[p].name);
    if (!all_finite(grads[p]))
      fail(ErrorKind::kNumeric, "adamw_step: non-finite gradient for " + entries[p].name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamWState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamWState::kBeta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto theta = entries[p].value.data();
    auto g = grads[p].data();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    const double decay = entries[p].decay ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = AdamWState::kBeta1 * m[i] + (1.0 - AdamWState::kBeta1) * g[i];
      v[i] = AdamWState::kBeta2 * v[i] + (1.0 - AdamWState::kBeta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + AdamWState::kEpsilon) + decay * theta[i]);
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& x : g.data()) x *= factor;
  }
  return norm;
}

namespace {

void check_objective(const HyperModel& model, Objective objective) {
  const bool classification = model.config.task == Task::kClassification;
  if (classification != (objective == Objective::kCrossEntropy))
    fail(ErrorKind::kConfig, std::string("objective ") + objective_name(objective) +
                                 " does not fit task " + task_name(model.config.task));
}

}  // namespace

Var criterion(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat, const Tensor& y,
              Objective objective) {
  check_objective(model, objective);
  Tape& tape = *x.tape();
  Var target = tape.constant(flatten(y));
  if (objective == Objective::kCrossEntropy) {
    Var logp = log_softmax(forward_logits(model, vars, x, x_hat));
    return scale(sum(mul(target, logp)), -1.0);
  }
  Var out = flatten(forward_output(model, vars, x, x_hat));
  return mean(square(sub(out, target)));
}

Var loss_instance(const HyperModel& model, const ModelVars& vars, const Instance& inst,
                  const HistoricalSet& history, Objective objective) {
  if (history.windows.empty()) fail(ErrorKind::kContract, "loss_instance: historical set is empty");
  Tape& tape = *vars.leaves.front().tape();
  Var x = tape.constant(inst.x);
  if (!is_hyper(model.config.cell)) {
    // Static cells ignore the history, so every term of the mean is identical.
    return criterion(model, vars, x, tape.constant(history.windows.back()), inst.y, objective);
  }
  std::vector<Var> terms;
  terms.reserve(history.windows.size());
  for (const Tensor& w : history.windows)
    terms.push_back(criterion(model, vars, x, tape.constant(w), inst.y, objective));
  return mean(concat(terms));
}

InstanceGradient instance_gradient(const HyperModel& model, const Instance& inst,
                                   const HistoricalSet& history, Objective objective) {
  Tape tape;
  ModelVars vars = bind(tape, model, true);
  Var loss = loss_instance(model, vars, inst, history, objective);
  GradientMap grads = tape.backward(loss);
  InstanceGradient out;
  out.loss = loss.value().item();
  out.grads.reserve(vars.leaves.size());
  for (const Var& leaf : vars.leaves) out.grads.push_back(grads[leaf]);
  return out;
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kFile, "cannot open " + path.string() + " for writing");
  out << "epoch,train_loss,valid_metric\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.valid_metric) << '\n';
  if (!out) fail(ErrorKind::kFile, "write failed for " + path.string());
}

double validation_loss(const HyperModel& model, const WindowedDataset& data,
                       std::span<const Instance> split, PredictMode mode, Objective objective) {
  check_objective(model, objective);
  if (split.empty()) fail(ErrorKind::kContract, "validation split is empty");
  double total = 0.0;
  for (const Instance& inst : split) {
    const HistoricalSet history = data.history(inst);
    const Tensor pred = predict(model, inst.x, history.windows, mode);
    double term = 0.0;
    if (objective == Objective::kCrossEntropy) {
      for (std::size_t i = 0; i < pred.size(); ++i)
        if (inst.y[i] > 0) term -= inst.y[i] * std::log(std::max(pred[i], 1e-300));
    } else {
      for (std::size_t i = 0; i < pred.size(); ++i) term += (pred[i] - inst.y[i]) * (pred[i] - inst.y[i]);
      term /= static_cast<double>(pred.size());
    }
    total += term;
  }
  return total / static_cast<double>(split.size());
}

TrainReport fit(HyperModel& model, const WindowedDataset& data, const TrainConfig& cfg,
                std::ostream* progress) {
  cfg.validate();
  const auto& train = data.splits.train;
  if (train.empty()) fail(ErrorKind::kContract, "fit: training split is empty");
  check_objective(model, cfg.objective);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamWState state = make_adamw_state(model.params);
  ParamSet best = model.params;
  TrainReport report;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      std::vector<InstanceGradient> parts(count);
      auto work = [&](std::size_t lane, std::size_t lanes) {
        for (std::size_t b = lane; b < count; b += lanes) {
          const Instance& inst = train[order[first + b]];
          parts[b] = instance_gradient(model, inst, data.history(inst), cfg.objective);
        }
      };
      const std::size_t lanes = std::min(cfg.threads, count);
      if (lanes <= 1) {
        work(0, 1);
      } else {
        std::vector<std::exception_ptr> errors(lanes);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < lanes; ++w)
          pool.emplace_back([&, w] {
            try {
              work(w, lanes);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }

      // Fixed-order reduction keeps the trace independent of thread count.
      std::vector<Tensor> grads = std::move(parts.front().grads);
      double batch_loss = parts.front().loss;
      for (std::size_t b = 1; b < count; ++b) {
        batch_loss += parts[b].loss;
        for (std::size_t p = 0; p < grads.size(); ++p) {
          auto dst = grads[p].data();
          auto src = parts[b].grads[p].data();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (Tensor& g : grads)
        for (double& x : g.data()) x *= inv;
      if (!std::isfinite(batch_loss))
        fail(ErrorKind::kNumeric, "non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batch_index));
      clip_global_norm(grads, cfg.clip_norm);
      adamw_step(model.params, grads, state, cfg);
      epoch_loss += batch_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train.size());
    rec.valid_metric = validation_loss(model, data, data.splits.valid, cfg.predict_mode, cfg.objective);
    report.epochs.push_back(rec);
    if (progress)
      *progress << "epoch=" << epoch << " train=" << format_double(rec.train_loss)
                << " valid=" << format_double(rec.valid_metric) << std::endl;

    if (rec.valid_metric < report.best_valid) {
      report.best_valid = rec.valid_metric;
      report.best_epoch = epoch;
      best = model.params;
      stale = 0;
    } else if (++stale > cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }
  if (report.best_epoch > 0) model.params = std::move(best);
  return report;
}

Metrics evaluate(const HyperModel& model, const WindowedDataset& data, std::span<const Instance> split,
                 PredictMode mode, bool normalized_scale) {
  if (split.empty()) fail(ErrorKind::kContract, "evaluate: split is empty");
  Metrics out;
  out.count = split.size();
  if (model.config.task == Task::kClassification) {
    out.classification = true;
    std::vector<std::size_t> pred, target;
    for (const Instance& inst : split) {
      const Tensor p = predict(model, inst.x, data.history(inst).windows, mode);
      pred.push_back(static_cast<std::size_t>(std::max_element(p.values().begin(), p.values().end()) -
                                              p.values().begin()));
      target.push_back(static_cast<std::size_t>(
          std::max_element(inst.y.values().begin(), inst.y.values().end()) - inst.y.values().begin()));
    }
    out.scores = classification_scores(pred, target, model.config.d_y);
    return out;
  }
  std::vector<double> pred, target;
  for (const Instance& inst : split) {
    Tensor p = predict(model, inst.x, data.history(inst).windows, mode);
    Tensor y = inst.y;
    if (!normalized_scale) {
      p = data.stats.invert_rows(p, data.window.target_rows);
      y = data.stats.invert_rows(y, data.window.target_rows);
    }
    pred.insert(pred.end(), p.values().begin(), p.values().end());
    target.insert(target.end(), y.values().begin(), y.values().end());
  }
  out.rmse = rmse(pred, target);
  out.mae = mae(pred, target);
  out.mape = mape(pred, target);
  return out;
}

}  // namespace hyperseries
