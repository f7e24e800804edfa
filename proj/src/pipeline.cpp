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

#include "hyperseries/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

namespace hyperseries {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "csv",     "features",   "targets",        "timestamp",    "delimiter",     "missing",
      "T",       "T_x",        "T_y",            "k",            "stride",        "split",
      "L_max",   "history_policy", "classes",    "cell",         "task",          "d_s",
      "d_h",     "d_v",        "d_a",            "learning_rate", "weight_decay", "batch_size",
      "epochs",  "seed",       "objective",      "patience",     "clip_norm",     "predict_mode",
      "threads"};
  return keys;
}

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

std::vector<std::string> name_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ','))
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kFile, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kFile, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::kFile, "write failed for " + path.string());
}

const char* missing_name(MissingPolicy p) { return p == MissingPolicy::kDrop ? "drop" : "ffill"; }

MissingPolicy parse_missing(const std::string& s) {
  if (s == "ffill" || s == "forward_fill") return MissingPolicy::kForwardFill;
  if (s == "drop") return MissingPolicy::kDrop;
  fail(ErrorKind::kConfig, "unknown missing-value policy '" + s + "' (ffill, drop)");
}

std::string split_text(const SplitFractions& f) {
  return format_double(f.train) + "," + format_double(f.valid) + "," + format_double(f.test);
}

std::span<const Instance> split_named(const WindowedDataset& data, const std::string& split) {
  if (split == "train") return data.splits.train;
  if (split == "valid") return data.splits.valid;
  if (split == "test") return data.splits.test;
  fail(ErrorKind::kConfig, "unknown split '" + split + "' (train, valid, test)");
}

struct SavedRun {
  RunSetup setup;
  HyperModel model;
};

SavedRun open_run(const fs::path& run_dir) {
  SavedRun run;
  run.setup = stage("manifest", [&] { return resolve_setup(load_manifest(run_dir / "manifest.copy")); });
  run.model = stage("model", [&] { return load_checkpoint(run_dir / "model.ckpt"); });
  if (run.model.config != run.setup.model)
    fail(ErrorKind::kConfig, "checkpoint configuration does not match " + (run_dir / "manifest.copy").string());
  return run;
}

std::string metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::string out = "mode,scale," + rows.front().second.csv_header() + "\n";
  for (const auto& [label, m] : rows) out += label + "," + m.csv_row() + "\n";
  return out;
}

std::vector<std::pair<std::string, Metrics>> metrics_rows(const HyperModel& model, const WindowedDataset& data,
                                                         std::span<const Instance> split) {
  std::vector<std::pair<std::string, Metrics>> rows;
  const bool classification = model.config.task == Task::kClassification;
  for (PredictMode mode : {PredictMode::kLast, PredictMode::kMean}) {
    const std::string name = predict_mode_name(mode);
    if (classification) {
      rows.emplace_back(name + ",labels", evaluate(model, data, split, mode));
    } else {
      rows.emplace_back(name + ",original", evaluate(model, data, split, mode, false));
      rows.emplace_back(name + ",normalized", evaluate(model, data, split, mode, true));
    }
  }
  return rows;
}

}  // namespace

fs::path default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || trim(item.substr(0, eq)).empty())
      fail(ErrorKind::kParse, "override '" + item + "' is not of the form key=value");
    kv.set(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
}

KeyValues load_manifest(const fs::path& path, const std::vector<std::string>& overrides) {
  KeyValues kv = KeyValues::load(path);
  if (auto csv = kv.get("csv"); csv && fs::path(*csv).is_relative())
    kv.set("csv", (fs::absolute(path).parent_path() / *csv).lexically_normal().string());
  apply_overrides(kv, overrides);
  return kv;
}

RunSetup resolve_setup(const KeyValues& kv) {
  for (const auto& e : kv.entries())
    if (!known_keys().count(e.key))
      fail(ErrorKind::kConfig, kv.origin() + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");

  RunSetup s;
  const auto csv = kv.get("csv");
  if (!csv) fail(ErrorKind::kConfig, kv.origin() + ": no csv given");
  s.csv = *csv;
  s.schema.features = name_list(kv.get_string("features", "x"));
  s.schema.targets = name_list(kv.get_string("targets", join(s.schema.features)));
  if (s.schema.features.empty() || s.schema.targets.empty())
    fail(ErrorKind::kConfig, "feature and target lists must be non-empty");
  s.schema.timestamp = kv.get_string("timestamp", "");
  const std::string delim = kv.get_string("delimiter", ",");
  if (delim == "tab" || delim == "\\t")
    s.schema.delimiter = '\t';
  else if (delim.size() == 1)
    s.schema.delimiter = delim[0];
  else
    fail(ErrorKind::kConfig, "delimiter must be a single character or 'tab'");
  s.schema.missing = parse_missing(kv.get_string("missing", "ffill"));

  WindowConfig& w = s.window;
  w.T = kv.get_size("T", 64);
  w.T_x = kv.get_size("T_x", w.T);
  w.T_y = kv.get_size("T_y", 1);
  w.stride = kv.get_size("stride", 1);
  w.classes = kv.get_size("classes", 0);
  // load_csv lays out features first, then targets not already listed.
  std::vector<std::string> layout = s.schema.features;
  for (const auto& t : s.schema.targets)
    if (std::find(layout.begin(), layout.end(), t) == layout.end()) layout.push_back(t);
  auto row = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(layout.begin(), layout.end(), n) - layout.begin());
  };
  for (const auto& f : s.schema.features) w.feature_rows.push_back(row(f));
  for (const auto& t : s.schema.targets) w.target_rows.push_back(row(t));
  s.fractions = parse_split(kv.get_string("split", "6:2:2"));
  s.L_max = kv.get_size("L_max", 128);
  s.policy = parse_history_policy(kv.get_string("history_policy", "recent"));

  ModelConfig& m = s.model;
  m.task = parse_task(kv.get_string("task", w.classes > 0 ? "classification" : "regression"));
  if ((m.task == Task::kClassification) != (w.classes > 0))
    fail(ErrorKind::kConfig, "classification needs classes >= 2 and a single label target");
  if (w.classes > 0 && w.target_rows.size() != 1)
    fail(ErrorKind::kConfig, "classification takes exactly one target column");
  m.d_x = w.feature_rows.size();
  m.d_y = w.classes > 0 ? w.classes : w.target_rows.size();
  m.T = w.T;
  m.T_x = w.T_x;
  m.T_y = w.T_y;
  m.k = kv.get_size("k", 8);
  m.cell = parse_cell_kind(kv.get_string("cell", "gru"));
  m.d_s = kv.get_size("d_s", 32);
  m.d_h = kv.get_size("d_h", 16);
  m.d_v = kv.get_size("d_v", m.d_h);
  m.d_a = kv.get_size("d_a", m.d_h);
  m.validate();

  TrainConfig& t = s.train;
  t.learning_rate = kv.get_double("learning_rate", t.learning_rate);
  t.weight_decay = kv.get_double("weight_decay", t.weight_decay);
  t.batch_size = kv.get_size("batch_size", t.batch_size);
  t.epochs = kv.get_size("epochs", t.epochs);
  t.seed = kv.get_u64("seed", t.seed);
  t.objective = parse_objective(
      kv.get_string("objective", m.task == Task::kClassification ? "cross_entropy" : "l2"));
  if ((t.objective == Objective::kCrossEntropy) != (m.task == Task::kClassification))
    fail(ErrorKind::kConfig, std::string("objective ") + objective_name(t.objective) + " does not fit task " +
                                 task_name(m.task));
  t.patience = kv.get_size("patience", t.patience);
  t.clip_norm = kv.get_double("clip_norm", t.clip_norm);
  t.predict_mode = parse_predict_mode(kv.get_string("predict_mode", "last"));
  t.threads = kv.get_size("threads", t.threads);
  t.validate();
  return s;
}

KeyValues describe_setup(const RunSetup& s) {
  KeyValues kv;
  auto put = [&](const std::string& k, const std::string& v) { kv.set(k, v); };
  auto num = [&](const std::string& k, std::size_t v) { kv.set(k, std::to_string(v)); };
  put("csv", s.csv.string());
  put("features", join(s.schema.features));
  put("targets", join(s.schema.targets));
  put("timestamp", s.schema.timestamp);
  put("delimiter", s.schema.delimiter == '\t' ? "tab" : std::string(1, s.schema.delimiter));
  put("missing", missing_name(s.schema.missing));
  num("T", s.window.T);
  num("T_x", s.window.T_x);
  num("T_y", s.window.T_y);
  num("k", s.model.k);
  num("stride", s.window.stride);
  put("split", split_text(s.fractions));
  num("L_max", s.L_max);
  put("history_policy", history_policy_name(s.policy));
  num("classes", s.window.classes);
  put("cell", cell_kind_name(s.model.cell));
  put("task", task_name(s.model.task));
  num("d_s", s.model.d_s);
  num("d_h", s.model.d_h);
  num("d_v", s.model.d_v);
  num("d_a", s.model.d_a);
  put("learning_rate", format_double(s.train.learning_rate));
  put("weight_decay", format_double(s.train.weight_decay));
  num("batch_size", s.train.batch_size);
  num("epochs", s.train.epochs);
  put("seed", std::to_string(s.train.seed));
  put("objective", objective_name(s.train.objective));
  num("patience", s.train.patience);
  put("clip_norm", format_double(s.train.clip_norm));
  put("predict_mode", predict_mode_name(s.train.predict_mode));
  num("threads", s.train.threads);
  return kv;
}

WindowedDataset load_dataset(const RunSetup& setup) {
  return stage("data", [&] {
    RawSeries raw = load_csv(setup.csv, setup.schema);
    return make_dataset(raw, setup.window, setup.fractions, setup.L_max, setup.policy);
  });
}

TrainOutcome run_train(const RunSetup& setup, const fs::path& out_dir, std::ostream* progress) {
  ensure_dir(out_dir);
  write_text(out_dir / "manifest.copy", describe_setup(setup).str());
  const WindowedDataset data = load_dataset(setup);
  TrainOutcome out;
  out.model = stage("model", [&] { return init_params(setup.model, setup.train.seed); });
  out.report = stage("train", [&] { return fit(out.model, data, setup.train, progress); });
  stage("output", [&] {
    out.report.write_csv(out_dir / "train_report.csv");
    save_checkpoint(out.model, out_dir / "model.ckpt");
    return 0;
  });
  const auto rows = stage("evaluate", [&] { return metrics_rows(out.model, data, data.splits.test); });
  write_text(out_dir / "metrics.csv", metrics_csv(rows));
  out.test_last = rows.front().second;
  out.test_mean = rows[rows.size() / 2].second;
  return out;
}

RegimeSpec resolve_regime_spec(const std::string& spec) {
  if (spec == "reference") return reference_regime_spec();
  if (spec == "severe") return severe_regime_spec();
  return load_regime_spec(spec);
}

SynthOutcome run_synth(const std::string& spec, std::uint64_t seed, const fs::path& out_dir) {
  SynthOutcome out;
  out.spec = stage("spec", [&] { return resolve_regime_spec(spec); });
  out.data = generate(out.spec, seed);
  std::vector<std::size_t> targets;
  for (std::size_t t = 2; t < out.spec.length; ++t) targets.push_back(t);
  out.oracle = oracle_rmse(out.spec, out.data, targets);

  ensure_dir(out_dir);
  write_csv(out.data.series, out_dir / "series.csv", "t");
  write_text(out_dir / "spec.txt", format_regime_spec(out.spec));
  KeyValues manifest;
  manifest.set("csv", "series.csv");
  manifest.set("features", "x");
  manifest.set("targets", "x");
  manifest.set("timestamp", "t");
  write_text(out_dir / "manifest.txt", "# seed " + std::to_string(seed) + "\n" + manifest.str());
  std::string sidecar = "regime,mu,phi1,phi2,sigma,count,oracle_rmse\n";
  for (std::size_t r = 0; r < out.spec.regimes.size(); ++r) {
    const Regime& g = out.spec.regimes[r];
    sidecar += std::to_string(r) + "," + format_double(g.mu) + "," + format_double(g.phi1) + "," +
               format_double(g.phi2) + "," + format_double(g.sigma) + "," +
               std::to_string(out.oracle.count_per_regime[r]) + "," +
               format_double(out.oracle.rmse_per_regime[r]) + "\n";
  }
  sidecar += "all,,,,," + std::to_string(out.oracle.count) + "," + format_double(out.oracle.rmse) + "\n";
  write_text(out_dir / "oracle.csv", sidecar);
  return out;
}

std::vector<std::pair<std::string, Metrics>> run_eval(const fs::path& run_dir, const std::string& split,
                                                      std::ostream* out) {
  const SavedRun run = open_run(run_dir);
  const WindowedDataset data = load_dataset(run.setup);
  const auto part = split_named(data, split);
  const auto rows = stage("evaluate", [&] { return metrics_rows(run.model, data, part); });
  write_text(run_dir / ("eval_" + split + ".csv"), metrics_csv(rows));
  if (out)
    for (const auto& [label, m] : rows) *out << split << " " << label << "\n" << m.table();
  return rows;
}

ModelConfig gradcheck_config(CellKind cell) {
  ModelConfig c;
  c.d_x = 3;
  c.d_y = 1;
  c.d_s = 4;
  c.d_h = 6;
  c.d_v = 4;
  c.d_a = 4;
  c.T = 10;
  c.k = 2;
  c.T_x = 4;
  c.T_y = 1;
  c.cell = cell;
  c.validate();
  return c;
}

GradCheckRun run_gradcheck(CellKind cell, std::uint64_t seed, double h, double tol) {
  const auto start = std::chrono::steady_clock::now();
  HyperModel model = init_params(gradcheck_config(cell), seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto draw = [&](Shape shape) {
    Tensor t(shape);
    for (double& v : t.data()) v = unit(rng);
    return t;
  };
  const ModelConfig& c = model.config;
  Instance inst;
  inst.x = draw(Shape{c.d_x, c.T_x});
  inst.y = draw(Shape{c.d_y, c.T_y});
  HistoricalSet history;
  for (std::size_t n = 0; n < kGradcheckWindows; ++n) history.windows.push_back(draw(Shape{c.d_x, c.T}));

  std::vector<Tensor> point;
  std::vector<std::string> names;
  for (auto& e : model.params.entries()) {
    for (double& v : e.value.data()) v = unit(rng);
    point.push_back(e.value);
    names.push_back(e.name);
  }
  const Objective objective = c.task == Task::kClassification ? Objective::kCrossEntropy : Objective::kL2;
  auto loss = [&](Tape&, std::span<const Var> leaves) {
    return loss_instance(model, bind_leaves(model, leaves), inst, history, objective);
  };
  GradCheckRun run;
  run.cell = cell;
  run.report = grad_check(loss, point, names, h, tol);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void print_gradcheck(const GradCheckRun& run, std::ostream& out) {
  out << "gradcheck cell=" << cell_kind_name(run.cell) << "\n";
  for (const auto& e : run.report.entries)
    out << "  " << e.name << " max_rel_err=" << e.max_rel_err << "\n";
  out << "max_rel_err=" << run.report.max_rel_err << " " << (run.report.pass ? "pass" : "FAIL") << " ("
      << run.seconds << " s)\n";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "T_k" || name == "tk") return SweepAxis::kTk;
  if (name == "horizon" || name == "T_y") return SweepAxis::kHorizon;
  fail(ErrorKind::kConfig, "unknown sweep axis '" + name + "' (T_k, horizon)");
}

const char* sweep_axis_name(SweepAxis axis) { return axis == SweepAxis::kTk ? "T_k" : "horizon"; }

std::vector<SweepRow> run_sweep(const RunSetup& setup, SweepAxis axis, const std::vector<std::size_t>& values,
                                const fs::path& out_dir, std::ostream* progress) {
  if (values.empty()) fail(ErrorKind::kConfig, "sweep needs at least one value");
  ensure_dir(out_dir);
  std::vector<SweepRow> rows;
  for (std::size_t value : values) {
    SweepRow row;
    row.value = value;
    try {
      RunSetup s = setup;
      if (axis == SweepAxis::kTk) {
        if (value == 0 || s.model.T % value != 0)
          fail(ErrorKind::kConfig, "T_k=" + std::to_string(value) + " does not divide T=" + std::to_string(s.model.T));
        s.model.k = s.model.T / value;
      } else {
        s.window.T_y = s.model.T_y = value;
      }
      s.model.validate();
      if (progress) *progress << sweep_axis_name(axis) << "=" << value << "\n";
      const fs::path dir = out_dir / (std::string(sweep_axis_name(axis)) + "_" + std::to_string(value));
      const TrainOutcome outcome = run_train(s, dir, progress);
      row.metrics = s.train.predict_mode == PredictMode::kLast ? outcome.test_last : outcome.test_mean;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::string csv = std::string(sweep_axis_name(axis)) + ",status,count,rmse,mae,mape\n";
  std::string report;
  const SweepRow* worst = nullptr;
  for (const auto& r : rows) {
    if (r.ok) {
      csv += std::to_string(r.value) + ",ok," + std::to_string(r.metrics.count) + "," +
             format_double(r.metrics.rmse) + "," + format_double(r.metrics.mae) + "," +
             format_double(r.metrics.mape) + "\n";
      if (!worst || r.metrics.rmse > worst->metrics.rmse) worst = &r;
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      csv += std::to_string(r.value) + ",error: " + msg + ",,,,\n";
      report += sweep_axis_name(axis) + std::string("=") + std::to_string(r.value) + " failed: " + r.error + "\n";
    }
  }
  write_text(out_dir / "sweep.csv", csv);
  if (worst) {
    report += "worst " + std::string(sweep_axis_name(axis)) + "=" + std::to_string(worst->value) +
              " rmse=" + format_double(worst->metrics.rmse) + "\n";
    if (axis == SweepAxis::kTk)
      report += std::string("expectation: smallest T_k has the worst RMSE: ") +
                (worst->value == *std::min_element(values.begin(), values.end()) ? "met" : "not met") + "\n";
  }
  write_text(out_dir / "sweep_report.txt", report);
  return rows;
}

void run_export_hidden(const fs::path& run_dir, const std::string& split, std::size_t instance,
                       const fs::path& out) {
  const SavedRun run = open_run(run_dir);
  if (!is_hyper(run.model.config.cell))
    fail(ErrorKind::kConfig, "export-hidden needs a hyper model, run has " +
                                 std::string(cell_kind_name(run.model.config.cell)));
  const WindowedDataset data = load_dataset(run.setup);
  const auto part = split_named(data, split);
  if (instance >= part.size())
    fail(ErrorKind::kConfig, "instance " + std::to_string(instance) + " out of range for split " + split +
                                 " (" + std::to_string(part.size()) + " instances)");
  const HistoricalSet history = data.history(part[instance]);
  export_hidden_states(run.model, history.windows, out);
}

}  // namespace hyperseries
