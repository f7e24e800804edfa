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

#include "hyperseries/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace hyperseries {

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'S', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

const char* const kGruNames[] = {"w_xr", "w_xz", "w_xn", "w_hr", "w_hz", "w_hn", "b_r", "b_z", "b_n"};
const char* const kLstmNames[] = {"w_xi", "w_xf", "w_xg", "w_xo", "w_hi", "w_hf",
                                  "w_hg", "w_ho", "b_i",  "b_f",  "b_g",  "b_o"};

enum class InitKind { kUniform, kGenerator, kZero, kOne };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init;
  bool decay;
};

void add_recurrent(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t gates,
                   std::size_t d_out, std::size_t d_in, bool forget_bias_one) {
  const char* const* names = gates == 3 ? kGruNames : kLstmNames;
  for (std::size_t g = 0; g < gates; ++g)
    out.push_back({prefix + names[g], Shape{d_out, d_in}, InitKind::kUniform, true});
  for (std::size_t g = 0; g < gates; ++g)
    out.push_back({prefix + names[gates + g], Shape{d_out, d_out}, InitKind::kUniform, true});
  for (std::size_t g = 0; g < gates; ++g) {
    const bool forget = gates == 4 && g == 1 && forget_bias_one;
    out.push_back({prefix + names[2 * gates + g], Shape{d_out}, forget ? InitKind::kOne : InitKind::kZero,
                   false});
  }
}

std::vector<ParamSpec> layout(const ModelConfig& c) {
  std::vector<ParamSpec> out;
  const std::size_t gates = gate_count(c.cell);
  if (is_hyper(c.cell)) {
    const std::size_t half = c.d_h / 2;
    add_recurrent(out, "encoder.fwd.", 3, half, c.d_x, false);
    add_recurrent(out, "encoder.bwd.", 3, half, c.d_x, false);
    out.push_back({"attn.v", Shape{c.d_a}, InitKind::kUniform, true});
    out.push_back({"attn.w_s", Shape{c.d_a, c.d_s}, InitKind::kUniform, true});
    out.push_back({"attn.w_h", Shape{c.d_a, c.d_h}, InitKind::kUniform, true});
    out.push_back({"attn.b_s", Shape{c.d_a}, InitKind::kZero, false});
    out.push_back({"gen.w_c", Shape{c.d_v, c.d_h}, InitKind::kUniform, true});
    out.push_back({"gen.w_hv", Shape{gates * c.d_s * c.d_s, c.d_v}, InitKind::kGenerator, true});
    out.push_back({"gen.w_xv", Shape{gates * c.d_s * c.d_x, c.d_v}, InitKind::kGenerator, true});
    out.push_back({"gen.w_bv", Shape{gates * c.d_s, c.d_v}, InitKind::kGenerator, true});
    out.push_back({"gen.w_init", Shape{c.d_s, c.d_h}, InitKind::kUniform, true});
    out.push_back({"gen.b_init", Shape{c.d_s}, InitKind::kZero, false});
  } else {
    add_recurrent(out, "cell.", gates, c.d_s, c.d_x, true);
  }
  out.push_back({"head.w_out", Shape{c.d_y * c.T_y, c.d_s}, InitKind::kUniform, true});
  out.push_back({"head.b_out", Shape{c.d_y * c.T_y}, InitKind::kZero, false});
  return out;
}

template <class P>
void bind_members(P& dst, const ParamSet& params, std::span<const Var> leaves, const std::string& prefix,
                  const char* const* names) {
  auto m = dst.members();
  for (std::size_t i = 0; i < m.size(); ++i) *m[i] = leaves[params.index(prefix + names[i])];
}

template <class P>
P extract(const ParamSet& params, const std::string& prefix, const char* const* names) {
  P out;
  auto m = out.members();
  for (std::size_t i = 0; i < m.size(); ++i) *m[i] = params[prefix + names[i]];
  return out;
}

const char* const kAttentionNames[] = {"v", "w_s", "w_h", "b_s"};
const char* const kGenNames[] = {"w_c", "w_hv", "w_xv", "w_bv", "w_init", "b_init"};

void require_shape(const Tensor& t, const Shape& expected, const char* stage) {
  if (t.shape() != expected)
    fail(ErrorKind::kDimension, std::string(stage) + ": expected " + expected.str() + ", got " +
                                    t.shape().str());
}

// ---- little-endian binary io ----

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(ErrorKind::kFile, "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) fail(ErrorKind::kFile, "checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

const char* cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::kHyperGru: return "gru";
    case CellKind::kHyperLstm: return "lstm";
    case CellKind::kStaticGru: return "static_gru";
    case CellKind::kStaticLstm: return "static_lstm";
  }
  return "?";
}

CellKind parse_cell_kind(const std::string& name) {
  for (CellKind k : {CellKind::kHyperGru, CellKind::kHyperLstm, CellKind::kStaticGru, CellKind::kStaticLstm})
    if (name == cell_kind_name(k)) return k;
  fail(ErrorKind::kConfig, "unknown cell kind '" + name + "' (gru, lstm, static_gru, static_lstm)");
}

const char* task_name(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

Task parse_task(const std::string& name) {
  if (name == "regression") return Task::kRegression;
  if (name == "classification") return Task::kClassification;
  fail(ErrorKind::kConfig, "unknown task '" + name + "'");
}

const char* predict_mode_name(PredictMode mode) { return mode == PredictMode::kLast ? "last" : "mean"; }

PredictMode parse_predict_mode(const std::string& name) {
  if (name == "last") return PredictMode::kLast;
  if (name == "mean") return PredictMode::kMean;
  fail(ErrorKind::kConfig, "unknown predict mode '" + name + "' (last, mean)");
}

bool is_hyper(CellKind kind) { return kind == CellKind::kHyperGru || kind == CellKind::kHyperLstm; }

std::size_t gate_count(CellKind kind) {
  return kind == CellKind::kHyperLstm || kind == CellKind::kStaticLstm ? 4 : 3;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) fail(ErrorKind::kConfig, std::string(name) + " must be positive");
  };
  positive(d_x, "d_x");
  positive(d_y, "d_y");
  positive(d_s, "d_s");
  positive(T_x, "T_x");
  positive(T_y, "T_y");
  if (is_hyper(cell)) {
    positive(d_h, "d_h");
    positive(d_v, "d_v");
    positive(d_a, "d_a");
    positive(T, "T");
    positive(k, "k");
    if (d_h % 2 != 0) fail(ErrorKind::kConfig, "d_h must be even (split across two directions)");
    if (k > T) fail(ErrorKind::kConfig, "pooling kernel k=" + std::to_string(k) + " exceeds T=" + std::to_string(T));
    if (T % k != 0)
      fail(ErrorKind::kConfig, "pooling kernel k=" + std::to_string(k) + " does not divide T=" + std::to_string(T));
  }
  if (task == Task::kClassification) {
    if (T_y != 1) fail(ErrorKind::kConfig, "classification requires T_y = 1");
    if (d_y < 2) fail(ErrorKind::kConfig, "classification requires at least two classes");
  }
}

void ParamSet::add(std::string name, Tensor value, bool decay) {
  entries_.push_back({std::move(name), std::move(value), decay});
}

std::size_t ParamSet::index(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  fail(ErrorKind::kContract, "no parameter named '" + name + "'");
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

HyperEncoderParams HyperModel::encoder() const {
  return {extract<GruParams>(params, "encoder.fwd.", kGruNames),
          extract<GruParams>(params, "encoder.bwd.", kGruNames)};
}

AttentionParams HyperModel::attention() const {
  return extract<AttentionParams>(params, "attn.", kAttentionNames);
}

WeightGenParams HyperModel::weight_gen() const {
  return extract<WeightGenParams>(params, "gen.", kGenNames);
}

ModelVars bind_leaves(const HyperModel& model, std::span<const Var> leaves) {
  const ParamSet& p = model.params;
  if (leaves.size() != p.size()) fail(ErrorKind::kContract, "bind: leaf count mismatch");
  ModelVars v;
  v.leaves.assign(leaves.begin(), leaves.end());
  switch (model.config.cell) {
    case CellKind::kHyperGru:
    case CellKind::kHyperLstm:
      bind_members(v.encoder.forward_gru, p, leaves, "encoder.fwd.", kGruNames);
      bind_members(v.encoder.backward_gru, p, leaves, "encoder.bwd.", kGruNames);
      bind_members(v.attention, p, leaves, "attn.", kAttentionNames);
      bind_members(v.weight_gen, p, leaves, "gen.", kGenNames);
      break;
    case CellKind::kStaticGru:
      bind_members(v.static_gru, p, leaves, "cell.", kGruNames);
      break;
    case CellKind::kStaticLstm:
      bind_members(v.static_lstm, p, leaves, "cell.", kLstmNames);
      break;
  }
  v.w_out = leaves[p.index("head.w_out")];
  v.b_out = leaves[p.index("head.b_out")];
  return v;
}

ModelVars bind(Tape& tape, const HyperModel& model, bool requires_grad) {
  std::vector<Var> leaves;
  leaves.reserve(model.params.size());
  for (const auto& e : model.params.entries()) leaves.push_back(tape.leaf(e.value, requires_grad));
  return bind_leaves(model, leaves);
}

std::size_t param_count(const ModelConfig& config) {
  std::size_t n = 0;
  for (const auto& spec : layout(config)) n += spec.shape.numel();
  return n;
}

HyperModel init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  HyperModel model;
  model.config = config;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& spec : layout(config)) {
    Tensor t(spec.shape);
    if (spec.init == InitKind::kOne) {
      for (double& x : t.data()) x = 1.0;
    } else if (spec.init != InitKind::kZero) {
      const std::size_t fan_in = spec.shape.rank() == 2 ? spec.shape[1] : spec.shape[0];
      double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      if (spec.init == InitKind::kGenerator) bound /= std::sqrt(static_cast<double>(config.d_v));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& x : t.data()) x = dist(rng);
    }
    model.params.add(spec.name, std::move(t), spec.decay);
  }
  return model;
}

ModelConfig matched_static_config(const ModelConfig& hyper, CellKind static_kind) {
  if (is_hyper(static_kind)) fail(ErrorKind::kConfig, "matched baseline must be a static cell");
  const std::size_t target = param_count(hyper);
  ModelConfig out = hyper;
  out.cell = static_kind;
  std::size_t best = 1;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t width = 1; width <= 4096; ++width) {
    out.d_s = width;
    const std::size_t n = param_count(out);
    const std::size_t gap = n > target ? n - target : target - n;
    if (gap < best_gap) {
      best_gap = gap;
      best = width;
    }
    if (n > target) break;
  }
  out.d_s = best;
  return out;
}

Var encode_history(const HyperModel& model, const ModelVars& vars, Var x_hat) {
  const ModelConfig& c = model.config;
  require_shape(x_hat.value(), Shape{c.d_x, c.T}, "historical window");
  return bigru_encode(vars.encoder, avg_pool_1d(x_hat, c.k));
}

Var forward_logits(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat) {
  const ModelConfig& c = model.config;
  require_shape(x.value(), Shape{c.d_x, c.T_x}, "input window");
  Tape& tape = *x.tape();
  Var xt = transpose(x);

  Var s;
  switch (c.cell) {
    case CellKind::kHyperGru:
    case CellKind::kHyperLstm: {
      Var h = encode_history(model, vars, x_hat);
      EncodedHistory enc = prepare_attention(vars.attention, h);
      s = init_state(vars.weight_gen, h);
      Var cell = tape.constant(Tensor(Shape{c.d_s}));
      for (std::size_t t = 0; t < c.T_x; ++t) {
        Var context = attend(vars.attention, s, enc).context;
        Var input = row(xt, t);
        if (c.cell == CellKind::kHyperGru) {
          s = gru_step(generate_gru_weights(vars.weight_gen, context, c.d_s, c.d_x), input, s);
        } else {
          LstmState st = lstm_step(generate_lstm_weights(vars.weight_gen, context, c.d_s, c.d_x), input, s, cell);
          s = st.s;
          cell = st.cell;
        }
      }
      break;
    }
    case CellKind::kStaticGru: {
      s = tape.constant(Tensor(Shape{c.d_s}));
      for (std::size_t t = 0; t < c.T_x; ++t) s = gru_step(vars.static_gru, row(xt, t), s);
      break;
    }
    case CellKind::kStaticLstm: {
      s = tape.constant(Tensor(Shape{c.d_s}));
      Var cell = s;
      for (std::size_t t = 0; t < c.T_x; ++t) {
        LstmState st = lstm_step(vars.static_lstm, row(xt, t), s, cell);
        s = st.s;
        cell = st.cell;
      }
      break;
    }
  }
  return add(matvec(vars.w_out, s), vars.b_out);
}

Var forward_output(const HyperModel& model, const ModelVars& vars, Var x, Var x_hat) {
  const ModelConfig& c = model.config;
  Var logits = forward_logits(model, vars, x, x_hat);
  if (c.task == Task::kClassification) logits = softmax(logits);
  return reshape_to_matrix(logits, c.d_y, c.T_y);
}

Tensor forward_one(const HyperModel& model, const Tensor& x, const Tensor& x_hat) {
  Tape tape;
  ModelVars vars = bind(tape, model, false);
  return forward_output(model, vars, tape.constant(x), tape.constant(x_hat)).value();
}

std::vector<Tensor> forward_all(const HyperModel& model, const Tensor& x,
                                std::span<const Tensor> history, std::size_t threads) {
  if (history.empty()) fail(ErrorKind::kContract, "forward_all: historical set is empty");
  std::vector<Tensor> out(history.size());
  threads = std::max<std::size_t>(1, std::min(threads, history.size()));
  if (threads == 1) {
    for (std::size_t n = 0; n < history.size(); ++n) out[n] = forward_one(model, x, history[n]);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t n = w; n < history.size(); n += threads) out[n] = forward_one(model, x, history[n]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Tensor predict(const HyperModel& model, const Tensor& x, std::span<const Tensor> history,
               PredictMode mode) {
  if (history.empty()) fail(ErrorKind::kContract, "predict: historical set is empty");
  if (mode == PredictMode::kLast || !is_hyper(model.config.cell))
    return forward_one(model, x, history.back());
  std::vector<Tensor> all = forward_all(model, x, history);
  Tensor acc = all.front();
  for (std::size_t n = 1; n < all.size(); ++n) acc = add(acc, all[n]);
  return scale(acc, 1.0 / static_cast<double>(all.size()));
}

void export_hidden_states(const HyperModel& model, std::span<const Tensor> history,
                          const std::filesystem::path& path) {
  if (!is_hyper(model.config.cell))
    fail(ErrorKind::kConfig, "export_hidden_states: model has no hyper layers");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kFile, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (std::size_t j = 0; j < model.config.d_h; ++j) out << (j ? "," : "") << 'h' << j;
  out << '\n';
  for (const Tensor& window : history) {
    Tape tape;
    ModelVars vars = bind(tape, model, false);
    Var h = encode_history(model, vars, tape.constant(window));
    Tensor last = hyperseries::row(h.value(), h.value().rows() - 1);
    for (std::size_t j = 0; j < last.size(); ++j) out << (j ? "," : "") << last[j];
    out << '\n';
  }
  if (!out) fail(ErrorKind::kFile, "write failed for " + path.string());
}

void save_checkpoint(const HyperModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kFile, "cannot open " + path.string() + " for writing");
  const ModelConfig& c = model.config;
  os.write(kCheckpointMagic, 4);
  write_u32(os, kCheckpointVersion);
  for (std::size_t v : {c.d_x, c.d_y, c.d_s, c.d_h, c.d_v, c.d_a, c.T, c.T_x, c.k, c.T_y}) write_u64(os, v);
  write_u32(os, static_cast<std::uint32_t>(c.task));
  write_u32(os, static_cast<std::uint32_t>(c.cell));
  write_u64(os, model.seed);
  write_u64(os, model.params.size());
  for (const auto& e : model.params.entries()) {
    write_u64(os, e.name.size());
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u64(os, e.value.rank());
    for (std::size_t d : e.value.shape().dims()) write_u64(os, d);
    for (double x : e.value.values()) write_u64(os, std::bit_cast<std::uint64_t>(x));
  }
  if (!os) fail(ErrorKind::kFile, "write failed for " + path.string());
}

HyperModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kFile, "cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    fail(ErrorKind::kFile, path.string() + " is not a checkpoint");
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion)
    fail(ErrorKind::kFile, "unsupported checkpoint version " + std::to_string(version));
  HyperModel model;
  ModelConfig& c = model.config;
  for (std::size_t* v : {&c.d_x, &c.d_y, &c.d_s, &c.d_h, &c.d_v, &c.d_a, &c.T, &c.T_x, &c.k, &c.T_y})
    *v = read_u64(is);
  const std::uint32_t task = read_u32(is);
  const std::uint32_t cell = read_u32(is);
  if (task > 1 || cell > 3) fail(ErrorKind::kFile, "checkpoint header corrupt");
  c.task = static_cast<Task>(task);
  c.cell = static_cast<CellKind>(cell);
  c.validate();
  model.seed = read_u64(is);

  const std::vector<ParamSpec> specs = layout(c);
  const std::uint64_t count = read_u64(is);
  if (count != specs.size()) fail(ErrorKind::kFile, "checkpoint tensor count does not match its config");
  for (const ParamSpec& spec : specs) {
    const std::uint64_t name_len = read_u64(is);
    if (name_len > 4096) fail(ErrorKind::kFile, "checkpoint tensor name too long");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) fail(ErrorKind::kFile, "checkpoint truncated");
    if (name != spec.name) fail(ErrorKind::kFile, "checkpoint expected tensor '" + spec.name + "', found '" + name + "'");
    const std::uint64_t rank = read_u64(is);
    if (rank != spec.shape.rank()) fail(ErrorKind::kFile, "checkpoint rank mismatch for " + name);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = read_u64(is);
    if (Shape(dims) != spec.shape) fail(ErrorKind::kFile, "checkpoint shape mismatch for " + name);
    Tensor t(spec.shape);
    for (double& x : t.data()) x = std::bit_cast<double>(read_u64(is));
    model.params.add(name, std::move(t), spec.decay);
  }
  return model;
}

}  // namespace hyperseries
