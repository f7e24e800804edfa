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

#include "hyperseries/cells.hpp"

namespace hyperseries {

namespace {

Var affine3(Var w_x, Var x, Var w_h, Var s, Var b) {
  return add(add(matvec(w_x, x), matvec(w_h, s)), b);
}

std::vector<Var> columns(Var m) {
  Var mt = transpose(m);
  std::vector<Var> out;
  const std::size_t n = mt.value().rows();
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.push_back(row(mt, t));
  return out;
}

// Splits a generated flat vector into `gates` matrices of [rows x cols]
// (or vectors when cols == 0).
std::vector<Var> split_generated(Var flat, std::size_t gates, std::size_t rows, std::size_t cols) {
  std::vector<Var> pieces = chunk(flat, gates);
  if (cols == 0) return pieces;
  for (Var& p : pieces) p = reshape_to_matrix(p, rows, cols);
  return pieces;
}

void check_generator(const WeightGenVars& g, std::size_t gates, std::size_t d_s, std::size_t d_x) {
  const std::size_t d_v = g.w_c.value().rows();
  auto expect = [&](Var w, std::size_t rows, const char* name) {
    if (w.value().rank() != 2 || w.value().rows() != rows || w.value().cols() != d_v)
      fail(ErrorKind::kDimension, std::string("weight generator: ") + name + " has shape " +
                                      w.shape().str() + ", expected [" + std::to_string(rows) +
                                      "x" + std::to_string(d_v) + "]");
  };
  expect(g.w_hv, gates * d_s * d_s, "w_hv");
  expect(g.w_xv, gates * d_s * d_x, "w_xv");
  expect(g.w_bv, gates * d_s, "w_bv");
}

}  // namespace

Var gru_step(const GruVars& p, Var x, Var s_prev) {
  Var r = sigmoid(affine3(p.w_xr, x, p.w_hr, s_prev, p.b_r));
  Var z = sigmoid(affine3(p.w_xz, x, p.w_hz, s_prev, p.b_z));
  Var n = tanh(add(matvec(p.w_xn, x), mul(r, add(matvec(p.w_hn, s_prev), p.b_n))));
  return add(mul(one_minus(z), n), mul(z, s_prev));
}

LstmState lstm_step(const LstmVars& p, Var x, Var s_prev, Var cell_prev) {
  Var i = sigmoid(affine3(p.w_xi, x, p.w_hi, s_prev, p.b_i));
  Var f = sigmoid(affine3(p.w_xf, x, p.w_hf, s_prev, p.b_f));
  Var g = tanh(affine3(p.w_xg, x, p.w_hg, s_prev, p.b_g));
  Var o = sigmoid(affine3(p.w_xo, x, p.w_ho, s_prev, p.b_o));
  Var cell = add(mul(f, cell_prev), mul(i, g));
  return {mul(o, tanh(cell)), cell};
}

Var bigru_encode(const HyperEncoderVars& p, Var x_bar) {
  std::vector<Var> xs = columns(x_bar);
  const std::size_t steps = xs.size();
  Tape& tape = *x_bar.tape();
  const std::size_t half = p.forward_gru.b_r.value().size();

  std::vector<Var> fwd(steps), bwd(steps);
  Var s = tape.constant(Tensor(Shape{half}));
  for (std::size_t t = 0; t < steps; ++t) fwd[t] = s = gru_step(p.forward_gru, xs[t], s);
  s = tape.constant(Tensor(Shape{p.backward_gru.b_r.value().size()}));
  for (std::size_t t = steps; t-- > 0;) bwd[t] = s = gru_step(p.backward_gru, xs[t], s);

  std::vector<Var> rows;
  rows.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Var both[] = {fwd[t], bwd[t]};
    rows.push_back(concat(both));
  }
  return stack_rows(rows);
}

EncodedHistory prepare_attention(const AttentionVars& a, Var h) {
  return {h, matmul_nt(h, a.w_h)};
}

Var attention_scores(const AttentionVars& a, Var s_prev, const EncodedHistory& enc) {
  Var query = add(matvec(a.w_s, s_prev), a.b_s);
  return matvec(tanh(add_rowwise(enc.h_proj, query)), a.v);
}

AttentionResult attend(const AttentionVars& a, Var s_prev, const EncodedHistory& enc) {
  Var alpha = softmax(attention_scores(a, s_prev, enc));
  return {matvec_t(enc.h, alpha), alpha};
}

GruVars generate_gru_weights(const WeightGenVars& g, Var context, std::size_t d_s, std::size_t d_x) {
  check_generator(g, 3, d_s, d_x);
  Var v = matvec(g.w_c, context);
  auto wh = split_generated(matvec(g.w_hv, v), 3, d_s, d_s);
  auto wx = split_generated(matvec(g.w_xv, v), 3, d_s, d_x);
  auto wb = split_generated(matvec(g.w_bv, v), 3, d_s, 0);
  return {wx[0], wx[1], wx[2], wh[0], wh[1], wh[2], wb[0], wb[1], wb[2]};
}

LstmVars generate_lstm_weights(const WeightGenVars& g, Var context, std::size_t d_s, std::size_t d_x) {
  check_generator(g, 4, d_s, d_x);
  Var v = matvec(g.w_c, context);
  auto wh = split_generated(matvec(g.w_hv, v), 4, d_s, d_s);
  auto wx = split_generated(matvec(g.w_xv, v), 4, d_s, d_x);
  auto wb = split_generated(matvec(g.w_bv, v), 4, d_s, 0);
  return {wx[0], wx[1], wx[2], wx[3], wh[0], wh[1], wh[2], wh[3], wb[0], wb[1], wb[2], wb[3]};
}

Var init_state(const WeightGenVars& g, Var h) {
  const std::size_t last = h.value().rows() - 1;
  return add(matvec(g.w_init, row(h, last)), g.b_init);
}

// Tensor conveniences run the differentiable versions on a scratch tape.

Tensor gru_step(const GruParams& p, const Tensor& x, const Tensor& s_prev) {
  Tape tape;
  GruVars v = to_vars(tape, p, false);
  return gru_step(v, tape.constant(x), tape.constant(s_prev)).value();
}

std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x, const Tensor& s_prev,
                                    const Tensor& cell_prev) {
  Tape tape;
  LstmVars v = to_vars(tape, p, false);
  LstmState st = lstm_step(v, tape.constant(x), tape.constant(s_prev), tape.constant(cell_prev));
  return {st.s.value(), st.cell.value()};
}

Tensor bigru_encode(const HyperEncoderParams& p, const Tensor& x_bar) {
  Tape tape;
  HyperEncoderVars v = to_vars(tape, p, false);
  return bigru_encode(v, tape.constant(x_bar)).value();
}

std::pair<Tensor, Tensor> attend(const AttentionParams& a, const Tensor& s_prev, const Tensor& h) {
  Tape tape;
  AttentionVars v = to_vars(tape, a, false);
  AttentionResult r = attend(v, tape.constant(s_prev), prepare_attention(v, tape.constant(h)));
  return {r.context.value(), r.alpha.value()};
}

GruParams generate_gru_weights(const WeightGenParams& g, const Tensor& context, std::size_t d_s,
                               std::size_t d_x) {
  Tape tape;
  WeightGenVars v = to_vars(tape, g, false);
  GruVars w = generate_gru_weights(v, tape.constant(context), d_s, d_x);
  GruParams out;
  auto src = w.members();
  auto dst = out.members();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->value();
  return out;
}

LstmParams generate_lstm_weights(const WeightGenParams& g, const Tensor& context, std::size_t d_s,
                                 std::size_t d_x) {
  Tape tape;
  WeightGenVars v = to_vars(tape, g, false);
  LstmVars w = generate_lstm_weights(v, tape.constant(context), d_s, d_x);
  LstmParams out;
  auto src = w.members();
  auto dst = out.members();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->value();
  return out;
}

Tensor init_state(const WeightGenParams& g, const Tensor& h) {
  Tape tape;
  WeightGenVars v = to_vars(tape, g, false);
  return init_state(v, tape.constant(h)).value();
}

}  // namespace hyperseries
