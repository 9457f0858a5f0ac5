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

// JSON run configuration.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebmrnn/model.hpp"
#include "ebmrnn/tasks.hpp"
#include "ebmrnn/training.hpp"

namespace ebmrnn {

/// Invalid configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskConfig {
  /// copy | assoc_recall | ehr | csv
  std::string kind = "copy";
  int count = 1000;
  int length = 20;
  int alphabet = 8;
  int pairs = 4;
  EhrParams ehr;
  std::string csv_path;
  std::optional<TaskMode> csv_mode;
};

struct RunConfig {
  /// ebmrnn | emrnn | gru
  std::string variant = "ebmrnn";
  ModelConfig model;
  TrainConfig train;
  TaskConfig task;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  /// Values outside the usual hyperparameter ranges; accepted but reported.
  std::vector<std::string> warnings;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& config);

/// The model section, including input and output sizes, as stored in
/// checkpoints.
nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& doc);

std::string_view variant_name(const ModelConfig& config);

/// Builds the dataset a task section describes.
Dataset make_task_dataset(const TaskConfig& task, std::uint64_t seed);

struct RunOutcome {
  Split split;
  Model model;
  TrainResult result;
};

/// Generates or loads the data, splits it, initialises the model and trains.
/// Data, split, initialisation and training each draw from their own stream
/// derived from `config.seed`.
RunOutcome execute_run(const RunConfig& config, const TrainHooks& hooks = {});

}  // namespace ebmrnn
