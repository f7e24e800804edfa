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

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "hyperseries/autodiff.hpp"
#include "hyperseries/tensor.hpp"

namespace hyperseries {

// Each parameter bundle is templated on its element so the same layout holds
// plain tensors (storage, checkpoints) and tape variables (differentiation).

template <class T>
struct GruParamsT {
  T w_xr, w_xz, w_xn;  // [d_out x d_in]
  T w_hr, w_hz, w_hn;  // [d_out x d_out]
  T b_r, b_z, b_n;     // [d_out]

  auto members() { return std::array{&w_xr, &w_xz, &w_xn, &w_hr, &w_hz, &w_hn, &b_r, &b_z, &b_n}; }
  auto members() const {
    return std::array{&w_xr, &w_xz, &w_xn, &w_hr, &w_hz, &w_hn, &b_r, &b_z, &b_n};
  }
};

// Gates in (input, forget, cell candidate, output) order.
template <class T>
struct LstmParamsT {
  T w_xi, w_xf, w_xg, w_xo;
  T w_hi, w_hf, w_hg, w_ho;
  T b_i, b_f, b_g, b_o;

  auto members() {
    return std::array{&w_xi, &w_xf, &w_xg, &w_xo, &w_hi, &w_hf, &w_hg, &w_ho, &b_i, &b_f, &b_g, &b_o};
  }
  auto members() const {
    return std::array{&w_xi, &w_xf, &w_xg, &w_xo, &w_hi, &w_hf, &w_hg, &w_ho, &b_i, &b_f, &b_g, &b_o};
  }
};

// Bidirectional encoder; each direction has width d_h / 2.
template <class T>
struct HyperEncoderParamsT {
  GruParamsT<T> forward_gru;
  GruParamsT<T> backward_gru;
};

// Additive score v^T tanh(W_s s + W_h h + b_s).
template <class T>
struct AttentionParamsT {
  T v;    // [d_a]
  T w_s;  // [d_a x d_s]
  T w_h;  // [d_a x d_h]
  T b_s;  // [d_a]

  auto members() { return std::array{&v, &w_s, &w_h, &b_s}; }
  auto members() const { return std::array{&v, &w_s, &w_h, &b_s}; }
};

template <class T>
struct WeightGenParamsT {
  T w_c;     // [d_v x d_h]
  T w_hv;    // [gates*d_s*d_s x d_v]
  T w_xv;    // [gates*d_s*d_x x d_v]
  T w_bv;    // [gates*d_s x d_v]
  T w_init;  // [d_s x d_h]
  T b_init;  // [d_s]

  auto members() { return std::array{&w_c, &w_hv, &w_xv, &w_bv, &w_init, &b_init}; }
  auto members() const { return std::array{&w_c, &w_hv, &w_xv, &w_bv, &w_init, &b_init}; }
};

using GruParams = GruParamsT<Tensor>;
using LstmParams = LstmParamsT<Tensor>;
using HyperEncoderParams = HyperEncoderParamsT<Tensor>;
using AttentionParams = AttentionParamsT<Tensor>;
using WeightGenParams = WeightGenParamsT<Tensor>;

using GruVars = GruParamsT<Var>;
using LstmVars = LstmParamsT<Var>;
using HyperEncoderVars = HyperEncoderParamsT<Var>;
using AttentionVars = AttentionParamsT<Var>;
using WeightGenVars = WeightGenParamsT<Var>;

template <template <class> class P>
P<Var> to_vars(Tape& tape, const P<Tensor>& params, bool requires_grad) {
  P<Var> out;
  auto src = params.members();
  auto dst = out.members();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = tape.leaf(*src[i], requires_grad);
  return out;
}

inline HyperEncoderVars to_vars(Tape& tape, const HyperEncoderParams& p, bool requires_grad) {
  return {to_vars(tape, p.forward_gru, requires_grad), to_vars(tape, p.backward_gru, requires_grad)};
}

// ---- differentiable cells -------------------------------------------------

Var gru_step(const GruVars& p, Var x, Var s_prev);

struct LstmState {
  Var s;
  Var cell;
};
LstmState lstm_step(const LstmVars& p, Var x, Var s_prev, Var cell_prev);

// x_bar is [d_x x T_k]; returns h [T_k x d_h].
Var bigru_encode(const HyperEncoderVars& p, Var x_bar);

// Encoder states with their attention projection W_h h[p] cached, since the
// projection does not depend on the decoding step.
struct EncodedHistory {
  Var h;       // [T_k x d_h]
  Var h_proj;  // [T_k x d_a]
};
EncodedHistory prepare_attention(const AttentionVars& a, Var h);

struct AttentionResult {
  Var context;  // [d_h]
  Var alpha;    // [T_k]
};
AttentionResult attend(const AttentionVars& a, Var s_prev, const EncodedHistory& enc);

Var attention_scores(const AttentionVars& a, Var s_prev, const EncodedHistory& enc);

// Generated main-cell weights: v = W_c c, flat weight vectors W_hv v, W_xv v,
// W_bv v, each chunked per gate and reshaped.
GruVars generate_gru_weights(const WeightGenVars& g, Var context, std::size_t d_s, std::size_t d_x);
LstmVars generate_lstm_weights(const WeightGenVars& g, Var context, std::size_t d_s, std::size_t d_x);

// Affine map of the last encoder row.
Var init_state(const WeightGenVars& g, Var h);

// ---- tensor conveniences --------------------------------------------------

Tensor gru_step(const GruParams& p, const Tensor& x, const Tensor& s_prev);
std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x, const Tensor& s_prev,
                                    const Tensor& cell_prev);
Tensor bigru_encode(const HyperEncoderParams& p, const Tensor& x_bar);
std::pair<Tensor, Tensor> attend(const AttentionParams& a, const Tensor& s_prev, const Tensor& h);
GruParams generate_gru_weights(const WeightGenParams& g, const Tensor& context, std::size_t d_s,
                               std::size_t d_x);
LstmParams generate_lstm_weights(const WeightGenParams& g, const Tensor& context, std::size_t d_s,
                                 std::size_t d_x);
Tensor init_state(const WeightGenParams& g, const Tensor& h);

}  // namespace hyperseries
