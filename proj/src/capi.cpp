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

#include "hyperseries/hyperseries.h"

#include <cstring>
#include <iostream>
#include <new>
#include <string>
#include <vector>

#include "hyperseries/pipeline.hpp"

struct hs_model {
  hyperseries::HyperModel model;
};

namespace {

using namespace hyperseries;

thread_local std::string g_last_error;

hs_status status_of(ErrorKind kind) { return static_cast<hs_status>(static_cast<int>(kind)); }

template <typename F>
hs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return HS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorKind::kContract, std::string(what) + " must not be null");
}

std::vector<std::string> collect(const char* const* items, std::size_t n) {
  std::vector<std::string> out;
  if (n) require(items, "overrides");
  for (std::size_t i = 0; i < n; ++i) {
    require(items[i], "override entry");
    out.emplace_back(items[i]);
  }
  return out;
}

std::filesystem::path out_or_default(const char* dir, const std::string& leaf) {
  return dir && *dir ? std::filesystem::path(dir) : default_output_root() / leaf;
}

}  // namespace

extern "C" {

const char* hs_version(void) { return "1.0.0"; }

const char* hs_status_name(hs_status status) {
  switch (status) {
    case HS_OK: return "ok";
    case HS_ERR_INTERNAL: return "internal";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= 7) return error_kind_name(static_cast<ErrorKind>(code));
  return "unknown";
}

const char* hs_last_error(void) { return g_last_error.c_str(); }

hs_status hs_model_create(const char* config, uint64_t seed, hs_model** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const KeyValues kv = KeyValues::parse(config, "<model config>");
    ModelConfig c;
    c.cell = parse_cell_kind(kv.get_string("cell", cell_kind_name(c.cell)));
    c.task = parse_task(kv.get_string("task", task_name(c.task)));
    c.d_x = kv.get_size("d_x", c.d_x);
    c.d_y = kv.get_size("d_y", c.d_y);
    c.d_s = kv.get_size("d_s", c.d_s);
    c.d_h = kv.get_size("d_h", c.d_h);
    c.d_v = kv.get_size("d_v", c.d_v);
    c.d_a = kv.get_size("d_a", c.d_a);
    c.T = kv.get_size("T", c.T);
    c.T_x = kv.get_size("T_x", c.T_x);
    c.T_y = kv.get_size("T_y", c.T_y);
    c.k = kv.get_size("k", c.k);
    *out = new hs_model{init_params(c, seed)};
  });
}

hs_status hs_model_load(const char* path, hs_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new hs_model{load_checkpoint(path)};
  });
}

hs_status hs_model_save(const hs_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_checkpoint(model->model, path);
  });
}

void hs_model_free(hs_model* model) { delete model; }

hs_status hs_model_param_count(const hs_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.params.scalar_count();
  });
}

hs_status hs_model_output_size(const hs_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.config.d_y * model->model.config.T_y;
  });
}

hs_status hs_model_predict(const hs_model* model, const double* x, size_t x_len, const double* history,
                           size_t n_windows, hs_predict_mode mode, double* out, size_t out_len) {
  return guarded([&] {
    require(model, "model");
    require(x, "x");
    require(history, "history");
    require(out, "out");
    const ModelConfig& c = model->model.config;
    if (x_len != c.d_x * c.T_x)
      throw Error(ErrorKind::kDimension, "x has " + std::to_string(x_len) + " values, expected " +
                                             std::to_string(c.d_x * c.T_x));
    if (out_len != c.d_y * c.T_y)
      throw Error(ErrorKind::kDimension, "output buffer has " + std::to_string(out_len) + " slots, expected " +
                                             std::to_string(c.d_y * c.T_y));
    if (mode != HS_PREDICT_LAST && mode != HS_PREDICT_MEAN)
      throw Error(ErrorKind::kConfig, "unknown predict mode " + std::to_string(static_cast<int>(mode)));
    const Tensor xt(Shape{c.d_x, c.T_x}, std::vector<double>(x, x + x_len));
    std::vector<Tensor> windows;
    const std::size_t block = c.d_x * c.T;
    for (std::size_t n = 0; n < n_windows; ++n)
      windows.emplace_back(Shape{c.d_x, c.T}, std::vector<double>(history + n * block, history + (n + 1) * block));
    const Tensor y = predict(model->model, xt, windows,
                             mode == HS_PREDICT_MEAN ? PredictMode::kMean : PredictMode::kLast);
    std::memcpy(out, y.values().data(), out_len * sizeof(double));
  });
}

hs_status hs_cmd_synth(const char* spec, uint64_t seed, const char* out_dir, double* oracle_rmse) {
  return guarded([&] {
    require(spec, "spec");
    const SynthOutcome r = run_synth(spec, seed, out_or_default(out_dir, "synth"));
    if (oracle_rmse) *oracle_rmse = r.oracle.rmse;
  });
}

hs_status hs_cmd_train(const char* manifest, const char* const* overrides, size_t n_overrides, const char* out_dir,
                       int verbose) {
  return guarded([&] {
    require(manifest, "manifest");
    const RunSetup setup = resolve_setup(load_manifest(manifest, collect(overrides, n_overrides)));
    const TrainOutcome r = run_train(setup, out_or_default(out_dir, "train"), verbose ? &std::cout : nullptr);
    if (verbose) {
      std::cout << "best_epoch=" << r.report.best_epoch << " best_valid=" << r.report.best_valid << "\n";
      std::cout << "test last\n" << r.test_last.table() << "test mean\n" << r.test_mean.table();
    }
  });
}

hs_status hs_cmd_eval(const char* run_dir, const char* split, int verbose) {
  return guarded([&] {
    require(run_dir, "run_dir");
    run_eval(run_dir, split && *split ? split : "test", verbose ? &std::cout : nullptr);
  });
}

uint64_t hs_gradcheck_default_seed(void) { return kGradcheckSeed; }

hs_status hs_cmd_gradcheck(const char* cell, uint64_t seed, int verbose, int* pass, double* max_rel_err) {
  return guarded([&] {
    require(cell, "cell");
    const CellKind kind = parse_cell_kind(cell);
    if (!is_hyper(kind)) throw Error(ErrorKind::kConfig, "gradcheck takes a hyper cell (gru, lstm)");
    const GradCheckRun r = run_gradcheck(kind, seed);
    if (verbose) print_gradcheck(r, std::cout);
    if (pass) *pass = r.report.pass ? 1 : 0;
    if (max_rel_err) *max_rel_err = r.report.max_rel_err;
  });
}

hs_status hs_cmd_sweep(const char* manifest, const char* const* overrides, size_t n_overrides, const char* axis,
                       const size_t* values, size_t n_values, const char* out_dir, int verbose) {
  return guarded([&] {
    require(manifest, "manifest");
    require(axis, "axis");
    if (n_values) require(values, "values");
    const RunSetup setup = resolve_setup(load_manifest(manifest, collect(overrides, n_overrides)));
    const auto rows = run_sweep(setup, parse_sweep_axis(axis), std::vector<std::size_t>(values, values + n_values),
                                out_or_default(out_dir, "sweep"), verbose ? &std::cout : nullptr);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok ? 0 : 1;
    if (failed)
      throw Error(ErrorKind::kConfig, std::to_string(failed) + " of " + std::to_string(rows.size()) +
                                          " sweep values failed; see sweep.csv");
  });
}

hs_status hs_cmd_export_hidden(const char* run_dir, const char* split, size_t instance, const char* out_path) {
  return guarded([&] {
    require(run_dir, "run_dir");
    const std::filesystem::path out =
        out_path && *out_path ? std::filesystem::path(out_path) : std::filesystem::path(run_dir) / "hidden_states.csv";
    run_export_hidden(run_dir, split && *split ? split : "test", instance, out);
  });
}

hs_status hs_default_output_root(char* buffer, size_t size) {
  return guarded([&] {
    require(buffer, "buffer");
    const std::string root = default_output_root().string();
    if (root.size() + 1 > size) throw Error(ErrorKind::kContract, "buffer too small for output root");
    std::memcpy(buffer, root.c_str(), root.size() + 1);
  });
}

hs_status hs_debug_set_backward_fault(const char* op) {
  return guarded([&] {
    if (!op || !*op) {
      set_backward_fault(std::nullopt);
      return;
    }
    const auto parsed = op_from_name(op);
    if (!parsed) throw Error(ErrorKind::kConfig, std::string("unknown op '") + op + "'");
    set_backward_fault(*parsed);
  });
}

}  // extern "C"
