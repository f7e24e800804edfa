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

#ifndef HYPERSERIES_HYPERSERIES_H_
#define HYPERSERIES_HYPERSERIES_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_DIMENSION = 1,
  HS_ERR_CONFIG = 2,
  HS_ERR_CONTRACT = 3,
  HS_ERR_NUMERIC = 4,
  HS_ERR_DATA = 5,
  HS_ERR_PARSE = 6,
  HS_ERR_FILE = 7,
  HS_ERR_INTERNAL = 99
} hs_status;

typedef enum hs_predict_mode { HS_PREDICT_LAST = 0, HS_PREDICT_MEAN = 1 } hs_predict_mode;

typedef struct hs_model hs_model;

HS_API const char* hs_version(void);
HS_API const char* hs_status_name(hs_status status);
// Message of the last failed call on this thread ("" after a success).
HS_API const char* hs_last_error(void);

// `config` holds key=value lines using the manifest model keys plus d_x, d_y,
// T, T_x, T_y and k.
HS_API hs_status hs_model_create(const char* config, uint64_t seed, hs_model** out);
HS_API hs_status hs_model_load(const char* path, hs_model** out);
HS_API hs_status hs_model_save(const hs_model* model, const char* path);
HS_API void hs_model_free(hs_model* model);
HS_API hs_status hs_model_param_count(const hs_model* model, size_t* out);
// Output length is d_y * T_y.
HS_API hs_status hs_model_output_size(const hs_model* model, size_t* out);
// x is d_x*T_x values (row-major, features x time); history holds n_windows
// consecutive d_x*T blocks.
HS_API hs_status hs_model_predict(const hs_model* model, const double* x, size_t x_len, const double* history,
                                  size_t n_windows, hs_predict_mode mode, double* out, size_t out_len);

// Commands. `overrides` are key=value strings applied on top of the manifest.
// Progress and reports go to standard output when `verbose` is non-zero.
HS_API hs_status hs_cmd_synth(const char* spec, uint64_t seed, const char* out_dir, double* oracle_rmse);
HS_API hs_status hs_cmd_train(const char* manifest, const char* const* overrides, size_t n_overrides,
                              const char* out_dir, int verbose);
HS_API hs_status hs_cmd_eval(const char* run_dir, const char* split, int verbose);
HS_API uint64_t hs_gradcheck_default_seed(void);
// cell: "gru" or "lstm". Sets *pass and *max_rel_err.
HS_API hs_status hs_cmd_gradcheck(const char* cell, uint64_t seed, int verbose, int* pass, double* max_rel_err);
// axis: "T_k" or "horizon". Every value is attempted; the call fails if any
// value failed (sweep.csv records which).
HS_API hs_status hs_cmd_sweep(const char* manifest, const char* const* overrides, size_t n_overrides,
                              const char* axis, const size_t* values, size_t n_values, const char* out_dir,
                              int verbose);
HS_API hs_status hs_cmd_export_hidden(const char* run_dir, const char* split, size_t instance,
                                      const char* out_path);
// Directory used when a command is given no output directory.
HS_API hs_status hs_default_output_root(char* buffer, size_t size);

// Test hook: corrupts the backward rule of the named op (e.g. "matvec");
// NULL or "" restores exact gradients.
HS_API hs_status hs_debug_set_backward_fault(const char* op);

#ifdef __cplusplus
}
#endif

#endif  // HYPERSERIES_HYPERSERIES_H_
