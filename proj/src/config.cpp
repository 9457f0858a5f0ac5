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

#include "ebmrnn/config.hpp"

#include <fstream>
#include <set>

namespace ebmrnn {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void warn_range(std::vector<std::string>& warnings, const std::string& name, int v, int lo, int hi) {
  if (v < lo || v > hi) {
    warnings.push_back(name + "=" + std::to_string(v) + " is outside the usual range " + std::to_string(lo) +
                       "-" + std::to_string(hi));
  }
}

void parse_model(const json& j, RunConfig& rc) {
  const std::string where = "model";
  require_object(j, where);
  reject_unknown(j, where, {"variant", "controller", "memory", "input_size", "output_size", "output"});
  ModelConfig& m = rc.model;
  read(j, "variant", rc.variant, where);
  if (rc.variant != "ebmrnn" && rc.variant != "emrnn" && rc.variant != "gru") {
    throw ConfigError("model.variant: expected ebmrnn, emrnn or gru, got '" + rc.variant + "'");
  }
  if (j.contains("controller")) {
    const json& c = j.at("controller");
    const std::string cw = "model.controller";
    require_object(c, cw);
    reject_unknown(c, cw, {"cell", "layers", "hidden", "dropout"});
    std::string cell = "gru";
    read(c, "cell", cell, cw);
    if (cell == "gru") m.controller.kind = CellKind::kGru;
    else if (cell == "lstm") m.controller.kind = CellKind::kLstm;
    else throw ConfigError(cw + ".cell: expected gru or lstm, got '" + cell + "'");
    read(c, "layers", m.controller.layers, cw);
    read(c, "hidden", m.controller.hidden, cw);
    read(c, "dropout", m.controller.dropout, cw);
  }
  if (j.contains("memory")) {
    const json& c = j.at("memory");
    const std::string cw = "model.memory";
    require_object(c, cw);
    reject_unknown(c, cw, {"explicit_slots", "blurred_slots", "slot_width", "hops", "usage_decay", "tau",
                           "address_sharpness", "hard", "blurred_write", "frozen_noise"});
    read(c, "explicit_slots", m.cell.explicit_slots, cw);
    read(c, "blurred_slots", m.cell.blurred_slots, cw);
    read(c, "slot_width", m.cell.slot_width, cw);
    read(c, "hops", m.cell.hops, cw);
    read(c, "usage_decay", m.cell.usage_decay, cw);
    read(c, "tau", m.cell.tau, cw);
    read(c, "address_sharpness", m.cell.address_sharpness, cw);
    read(c, "hard", m.cell.hard, cw);
    read(c, "blurred_write", m.cell.blurred_write, cw);
    read(c, "frozen_noise", m.cell.frozen_noise, cw);
  }
  read(j, "input_size", m.controller.input, where);
  read(j, "output_size", m.output_size, where);
  if (j.contains("output")) {
    std::string out;
    read(j, "output", out, where);
    if (out == "softmax") m.output = OutputKind::kSoftmax;
    else if (out == "sigmoid") m.output = OutputKind::kSigmoid;
    else throw ConfigError("model.output: expected softmax or sigmoid, got '" + out + "'");
  }
  m.use_memory = rc.variant != "gru";
  m.cell.variant = rc.variant == "emrnn" ? Variant::kEmrnn : Variant::kEbmrnn;
}

void parse_train(const json& j, TrainConfig& t) {
  const std::string where = "train";
  require_object(j, where);
  reject_unknown(j, where, {"learning_rate", "momentum", "clip_norm", "clip", "epochs", "batch_size",
                            "eval_fraction", "threads", "target_accuracy"});
  read(j, "learning_rate", t.learning_rate, where);
  read(j, "momentum", t.momentum, where);
  read(j, "clip_norm", t.clip_norm, where);
  read(j, "clip", t.clip, where);
  read(j, "epochs", t.epochs, where);
  read(j, "batch_size", t.batch_size, where);
  read(j, "eval_fraction", t.eval_fraction, where);
  read(j, "threads", t.threads, where);
  read(j, "target_accuracy", t.target_accuracy, where);
}

void parse_task(const json& j, TaskConfig& t) {
  const std::string where = "task";
  require_object(j, where);
  reject_unknown(j, where, {"kind", "count", "length", "alphabet", "pairs", "mode", "noise_channels",
                            "background", "early_fraction", "window", "positive_rate", "labels", "presence",
                            "csv_path"});
  read(j, "kind", t.kind, where);
  if (t.kind != "copy" && t.kind != "assoc_recall" && t.kind != "ehr" && t.kind != "csv") {
    throw ConfigError("task.kind: expected copy, assoc_recall, ehr or csv, got '" + t.kind + "'");
  }
  read(j, "count", t.count, where);
  read(j, "length", t.length, where);
  read(j, "alphabet", t.alphabet, where);
  read(j, "pairs", t.pairs, where);
  if (j.contains("mode")) {
    std::string mode;
    read(j, "mode", mode, where);
    try {
      const TaskMode m = parse_task_mode(mode);
      t.ehr.mode = m;
      t.csv_mode = m;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("task.mode: ") + e.what());
    }
  }
  read(j, "noise_channels", t.ehr.noise_channels, where);
  read(j, "background", t.ehr.background, where);
  read(j, "early_fraction", t.ehr.early_fraction, where);
  read(j, "window", t.ehr.window, where);
  read(j, "positive_rate", t.ehr.positive_rate, where);
  read(j, "labels", t.ehr.labels, where);
  read(j, "presence", t.ehr.presence, where);
  read(j, "csv_path", t.csv_path, where);
  if (j.contains("length")) t.ehr.length = t.length;
  if (t.kind == "csv" && t.csv_path.empty()) throw ConfigError("task.csv_path: required for kind csv");
  if (t.count < 0) throw ConfigError("task.count: must be >= 0");
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  require_object(doc, "config");
  reject_unknown(doc, "config", {"model", "train", "task", "seed", "output_dir"});
  RunConfig rc;
  if (doc.contains("model")) parse_model(doc.at("model"), rc);
  if (doc.contains("train")) parse_train(doc.at("train"), rc.train);
  if (doc.contains("task")) parse_task(doc.at("task"), rc.task);
  read(doc, "seed", rc.seed, "config");
  read(doc, "output_dir", rc.output_dir, "config");
  rc.train.seed = rc.seed;
  rc.model.use_memory = rc.variant != "gru";
  try {
    rc.model.normalized().validate();
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  warn_range(rc.warnings, "controller.hidden", rc.model.controller.hidden, 4, 32);
  if (rc.model.use_memory) {
    warn_range(rc.warnings, "memory.explicit_slots", rc.model.cell.explicit_slots, 4, 32);
    if (rc.variant == "ebmrnn") warn_range(rc.warnings, "memory.blurred_slots", rc.model.cell.blurred_slots, 4, 32);
    warn_range(rc.warnings, "memory.hops", rc.model.cell.hops, 2, 8);
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

std::string_view variant_name(const ModelConfig& config) {
  if (!config.use_memory) return "gru";
  return config.cell.variant == Variant::kEmrnn ? "emrnn" : "ebmrnn";
}

json model_config_to_json(const ModelConfig& m) {
  json j;
  j["variant"] = variant_name(m);
  j["controller"] = {{"cell", m.controller.kind == CellKind::kGru ? "gru" : "lstm"},
                     {"layers", m.controller.layers},
                     {"hidden", m.controller.hidden},
                     {"dropout", m.controller.dropout}};
  j["memory"] = {{"explicit_slots", m.cell.explicit_slots},
                 {"blurred_slots", m.cell.blurred_slots},
                 {"slot_width", m.cell.slot_width},
                 {"hops", m.cell.hops},
                 {"usage_decay", m.cell.usage_decay},
                 {"tau", m.cell.tau},
                 {"address_sharpness", m.cell.address_sharpness},
                 {"hard", m.cell.hard},
                 {"blurred_write", m.cell.blurred_write},
                 {"frozen_noise", m.cell.frozen_noise}};
  j["input_size"] = m.controller.input;
  j["output_size"] = m.output_size;
  j["output"] = m.output == OutputKind::kSoftmax ? "softmax" : "sigmoid";
  return j;
}

ModelConfig model_config_from_json(const json& doc) {
  RunConfig rc;
  parse_model(doc, rc);
  return rc.model.normalized();
}

json run_config_to_json(const RunConfig& rc) {
  json j;
  j["model"] = model_config_to_json(rc.model);
  const TrainConfig& t = rc.train;
  j["train"] = {{"learning_rate", t.learning_rate}, {"momentum", t.momentum},   {"clip_norm", t.clip_norm},
                {"clip", t.clip},                   {"epochs", t.epochs},       {"batch_size", t.batch_size},
                {"eval_fraction", t.eval_fraction}, {"threads", t.threads},     {"target_accuracy", t.target_accuracy}};
  const TaskConfig& k = rc.task;
  j["task"] = {{"kind", k.kind},
               {"count", k.count},
               {"length", k.kind == "ehr" ? k.ehr.length : k.length},
               {"alphabet", k.alphabet},
               {"pairs", k.pairs},
               {"mode", task_mode_name(k.ehr.mode)},
               {"noise_channels", k.ehr.noise_channels},
               {"background", k.ehr.background},
               {"early_fraction", k.ehr.early_fraction},
               {"window", k.ehr.window},
               {"positive_rate", k.ehr.positive_rate},
               {"labels", k.ehr.labels},
               {"presence", k.ehr.presence},
               {"csv_path", k.csv_path}};
  j["seed"] = rc.seed;
  j["output_dir"] = rc.output_dir;
  return j;
}

Dataset make_task_dataset(const TaskConfig& task, std::uint64_t seed) {
  if (task.kind == "copy") return gen_copy(seed, task.count, task.length, task.alphabet);
  if (task.kind == "assoc_recall") return gen_assoc_recall(seed, task.count, task.pairs, task.alphabet);
  if (task.kind == "ehr") {
    return gen_ehr_like(seed, task.count, task.ehr);
  }
  if (task.kind == "csv") return task.csv_mode ? load_csv(task.csv_path, *task.csv_mode) : load_csv(task.csv_path);
  throw ConfigError("task.kind: unknown '" + task.kind + "'");
}

RunOutcome execute_run(const RunConfig& config, const TrainHooks& hooks) {
  Dataset data = make_task_dataset(config.task, config.seed);
  data.validate();
  Split split = split_dataset(data, config.train.eval_fraction, mix_seed(config.seed, 1));
  Model model(model_config_for(config.model, data), mix_seed(config.seed, 2));
  TrainConfig tc = config.train;
  tc.seed = mix_seed(config.seed, 3);
  const Dataset* eval = split.eval.samples.empty() ? nullptr : &split.eval;
  TrainResult result = train(model, split.train, eval, tc, hooks);
  return {std::move(split), std::move(model), std::move(result)};
}

}  // namespace ebmrnn
