// Copyright 2026 The ebmrnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ebmrnn: train, evaluate, trace, plot, generate data, check gradients.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
// Failures print one line to stderr: error=<kind> exit=<code> message="...".

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ebmrnn/checkpoint.hpp"
#include "ebmrnn/config.hpp"
#include "ebmrnn/suites.hpp"
#include "ebmrnn/tasks.hpp"
#include "ebmrnn/trace.hpp"
#include "ebmrnn/training.hpp"

namespace fs = std::filesystem;
using namespace ebmrnn;

namespace {

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

Level log_level() {
  static const Level level = [] {
    const char* v = std::getenv("EBMRNN_LOG");
    std::string s = v ? v : "info";
    if (s == "error") return Level::kError;
    if (s == "debug") return Level::kDebug;
    return Level::kInfo;
  }();
  return level;
}

void log(Level level, const std::string& msg) {
  if (level > log_level()) return;
  std::cerr << (level == Level::kDebug ? "[debug] " : "[info] ") << msg << '\n';
}

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

// Quotes and backslashes escaped, newlines flattened, so the line stays
// machine-parsable.
std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int report(const Failure& f) {
  std::cerr << "error=" << f.kind << " exit=" << f.code << " message=" << quote(f.message) << '\n';
  return f.code;
}

void write_text(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError(path + ": cannot write");
}

struct Options {
  std::string config;
  std::string data;
  std::string ckpt;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string task;
  std::string format = "csv";
  int limit = 1;
  int count = 0;
  double eps = 1e-5;
};

RunConfig load_config(const Options& o) {
  RunConfig rc = o.config.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (!o.out.empty()) rc.output_dir = o.out;
  rc.train.threads = o.threads;
  if (!o.data.empty()) {
    rc.task.kind = "csv";
    rc.task.csv_path = o.data;
  }
  for (const std::string& w : rc.warnings) log(Level::kInfo, "config warning: " + w);
  return rc;
}

// Data for eval and trace: a CSV when --data is given, otherwise the task
// section of --config.
Dataset load_data(const Options& o) {
  if (!o.data.empty()) {
    if (!o.task.empty()) return load_csv(o.data, parse_task_mode(o.task));
    return load_csv(o.data);
  }
  if (o.config.empty()) throw ConfigError("--data or --config is required");
  RunConfig rc = load_config(o);
  return make_task_dataset(rc.task, rc.seed);
}

int cmd_train(const Options& o) {
  RunConfig rc = load_config(o);
  fs::create_directories(rc.output_dir);
  const fs::path dir(rc.output_dir);
  write_text((dir / "config.json").string(), run_config_to_json(rc).dump(2) + "\n");
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary);
  TrainHooks hooks;
  hooks.metrics = &metrics;
  hooks.on_epoch = [](const EpochRecord& r) {
    std::string line = "epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.train_loss);
    if (r.eval) line += " eval_accuracy " + std::to_string(r.eval->accuracy);
    log(Level::kInfo, line);
    log(Level::kDebug, epoch_record_json(r));
  };
  log(Level::kInfo, "train: variant " + rc.variant + ", task " + rc.task.kind + ", seed " + std::to_string(rc.seed));
  RunOutcome run = execute_run(rc, hooks);
  save_checkpoint((dir / "checkpoint.bin").string(), run.model);
  nlohmann::json summary;
  summary["epochs"] = run.result.history.size();
  summary["reached_target"] = run.result.reached_target;
  summary["train_sequences"] = run.split.train.samples.size();
  summary["eval_sequences"] = run.split.eval.samples.size();
  summary["checkpoint"] = (dir / "checkpoint.bin").string();
  if (!run.result.history.empty()) {
    summary["final"] = nlohmann::json::parse(epoch_record_json(run.result.history.back()));
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  Model model = load_checkpoint(o.ckpt);
  Dataset data = load_data(o);
  data.validate();
  std::cout << eval_report_json(evaluate(model, data, o.threads)) << '\n';
  return 0;
}

int cmd_trace(const Options& o) {
  Model model = load_checkpoint(o.ckpt);
  if (!model.config().use_memory) throw ConfigError("trace: checkpoint holds a model without memory");
  Dataset data = load_data(o);
  TraceFormat format = parse_trace_format(o.format);
  const std::size_t n = std::min(data.samples.size(), static_cast<std::size_t>(std::max(o.limit, 0)));
  nlohmann::json written = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const SequenceSample& s = data.samples[i];
    TraceLog log_ = trace_sequence(model, s.inputs);
    if (reconstruct_annotations(log_) != log_.steps().back().slot_time) {
      throw NumericError("trace: write events do not reproduce the bank of sequence " + s.id, 0, 0);
    }
    TraceFiles files = export_trace(log_, format, (fs::path(o.out) / s.id).string());
    written.push_back({{"sequence_id", s.id}, {"slots", files.slots}, {"gates", files.gates}});
  }
  std::cout << written.dump() << '\n';
  return 0;
}

int cmd_plot(const Options& o) {
  TraceLog log_ = import_trace(o.data, parse_trace_format(o.format));
  const fs::path dir(o.out);
  write_text((dir / "slot_map.svg").string(), render_slot_map(log_));
  write_text((dir / "gate_lines.svg").string(), render_gate_lines(log_));
  std::cout << nlohmann::json{{"slot_map", (dir / "slot_map.svg").string()},
                              {"gate_lines", (dir / "gate_lines.svg").string()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_gen_data(const Options& o) {
  RunConfig rc = o.config.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (!o.task.empty()) {
    if (o.task == "copy" || o.task == "assoc_recall") {
      rc.task.kind = o.task;
    } else {
      rc.task.kind = "ehr";
      rc.task.ehr.mode = parse_task_mode(o.task);
    }
  }
  if (o.count > 0) rc.task.count = o.count;
  if (rc.task.kind == "csv") throw ConfigError("gen-data: task kind csv has nothing to generate");
  Dataset data = make_task_dataset(rc.task, rc.seed);
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  write_csv(data, o.out);
  std::cout << nlohmann::json{{"path", o.out},
                              {"mode", task_mode_name(data.mode)},
                              {"sequences", data.samples.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_gradcheck(const Options& o) {
  bool ok = true;
  for (const SuiteResult& r : run_gradcheck_suites(o.seed.value_or(0), o.eps)) {
    ok = ok && r.passed();
    std::cout << nlohmann::json{{"suite", r.name},
                                {"max_rel_error", r.result.max_rel_error},
                                {"tolerance", r.tolerance},
                                {"eps", o.eps},
                                {"worst", r.worst},
                                {"analytic", r.result.analytic},
                                {"numeric", r.result.numeric},
                                {"pass", r.passed()}}
                     .dump()
              << '\n';
  }
  if (!ok) throw NumericError("gradcheck: a suite exceeded its tolerance", 0, 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit-blurred memory RNN"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { o.seed = v; }, "Root seed");
  };

  CLI::App* train = app.add_subcommand("train", "Train a model from a JSON config");
  train->add_option("--config", o.config, "Run configuration (JSON)")->required();
  train->add_option("--data", o.data, "CSV dataset, replacing the config's task");
  train->add_option("--out", o.out, "Output directory, replacing output_dir");
  train->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  add_seed(train);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--ckpt", o.ckpt, "Checkpoint file")->required();
  eval->add_option("--data", o.data, "CSV dataset");
  eval->add_option("--config", o.config, "Config whose task section generates the data");
  eval->add_option("--task", o.task, "Task mode of the CSV, inferred when omitted");
  eval->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  add_seed(eval);

  CLI::App* trace = app.add_subcommand("trace", "Write trace-v1 files for the first sequences");
  trace->add_option("--ckpt", o.ckpt, "Checkpoint file")->required();
  trace->add_option("--data", o.data, "CSV dataset");
  trace->add_option("--config", o.config, "Config whose task section generates the data");
  trace->add_option("--task", o.task, "Task mode of the CSV, inferred when omitted");
  trace->add_option("--out", o.out, "Output directory; one subdirectory per sequence")->required();
  trace->add_option("--format", o.format, "csv or json");
  trace->add_option("--limit", o.limit, "Number of sequences to trace");
  add_seed(trace);

  CLI::App* plot = app.add_subcommand("plot", "Render SVG charts from a trace directory");
  plot->add_option("--data", o.data, "Trace directory")->required();
  plot->add_option("--out", o.out, "Output directory")->required();
  plot->add_option("--format", o.format, "csv or json");

  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen->add_option("--task", o.task,
                  "copy, assoc_recall, sequence_binary, step_binary or sequence_multilabel");
  gen->add_option("--config", o.config, "Config whose task section is used");
  gen->add_option("--count", o.count, "Number of sequences");
  gen->add_option("--out", o.out, "CSV path")->required();
  add_seed(gen);

  CLI::App* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--eps", o.eps, "Finite-difference step")->check(CLI::PositiveNumber);
  add_seed(grad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report({2, "usage", e.what()});
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*trace) return cmd_trace(o);
    if (*plot) return cmd_plot(o);
    if (*gen) return cmd_gen_data(o);
    if (*grad) return cmd_gradcheck(o);
  } catch (const ConfigError& e) {
    return report({2, "config", e.what()});
  } catch (const NumericError& e) {
    return report({4, "numeric", e.what()});
  } catch (const DataError& e) {
    return report({3, "data", e.what()});
  } catch (const CheckpointError& e) {
    return report({3, "checkpoint", e.what()});
  } catch (const TraceError& e) {
    return report({3, "trace", e.what()});
  } catch (const DimensionError& e) {
    return report({3, "data", e.what()});
  } catch (const std::invalid_argument& e) {
    return report({2, "config", e.what()});
  } catch (const std::exception& e) {
    return report({3, "io", e.what()});
  }
  return 0;
}
