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

// Losses, optimizer, metrics and the epoch loop.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebmrnn/model.hpp"
#include "ebmrnn/parameters.hpp"
#include "ebmrnn/tasks.hpp"

namespace ebmrnn {

/// Floor applied to every log argument in the losses.
inline constexpr double kLogFloor = 1e-12;

enum class LossKind { kBinary, kMulticlass, kMultilabel };

LossKind loss_kind_for(TaskMode mode);
OutputKind output_kind_for(TaskMode mode);

/// Mean negative log-likelihood of one prediction (a column) against a 0/1
/// target of the same length. Binary and multi-label average per-output
/// cross-entropy; multiclass is -sum(y log p).
Tensor loss(LossKind kind, const Tensor& prediction, const Matrix& target);

/// Loss of one sequence: mean over counted steps for step modes, the final
/// step's loss for sequence modes.
Tensor sequence_loss(const SequenceRun& run, const SequenceSample& sample, TaskMode mode);

// -- optimizer -------------------------------------------------------------------

double global_norm(const Gradients& grads);

/// Scales every gradient by c / norm when the global norm exceeds c. Returns
/// the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

struct OptimState {
  Gradients velocity;
};

OptimState make_optim_state(const ParameterSet& params);

/// v' = mu v + g; theta' = theta - lr v'. Non-trainable entries are skipped.
void sgd_momentum_step(ParameterSet& params, const Gradients& grads, OptimState& state, double lr,
                       double momentum);

// -- metrics ---------------------------------------------------------------------

/// AUC-ROC is undefined when only one class is present.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mann-Whitney statistic: the fraction of (positive, negative) pairs ranked
/// correctly, ties counted one half.
double auc_roc(std::span<const double> scores, std::span<const double> labels);

struct MultiLabelAuc {
  double macro = 0.0;
  double micro = 0.0;
  /// NaN for skipped labels.
  std::vector<double> per_label;
  /// Labels with a single class, left out of the macro average.
  std::vector<int> skipped;
};

/// Rows are instances, columns labels. Throws UndefinedMetric when no label
/// column is usable or the flattened labels hold a single class.
MultiLabelAuc auc_macro_micro(const Matrix& scores, const Matrix& labels);

struct EvalReport {
  double loss = 0.0;
  /// Token accuracy for multiclass modes, 0.5-threshold accuracy otherwise.
  double accuracy = 0.0;
  std::optional<double> auc;  // binary modes
  std::optional<MultiLabelAuc> multilabel;  // multi-label mode
  std::size_t sequences = 0;
};

std::string eval_report_json(const EvalReport& report);

/// Eval mode: no dropout and no Gumbel noise.
EvalReport evaluate(const Model& model, const Dataset& data, int threads = 1);

// -- training loop -----------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double clip_norm = 5.0;
  bool clip = true;
  int epochs = 100;
  int batch_size = 16;
  /// Fraction of the dataset held out for evaluation after each epoch.
  double eval_fraction = 0.2;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Stop once held-out accuracy reaches this value; 0 disables.
  double target_accuracy = 0.0;

  void validate() const;
};

/// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int epoch, int batch)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}
  int epoch;
  int batch;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double max_grad_norm = 0.0;
  int clipped_batches = 0;
  std::optional<EvalReport> eval;
};

std::string epoch_record_json(const EpochRecord& record);

struct TrainResult {
  std::vector<EpochRecord> history;
  bool reached_target = false;
};

struct TrainHooks {
  /// Receives one JSON line per epoch.
  std::ostream* metrics = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Deterministic given `config.seed`: shuffling, Gumbel noise and dropout all
/// derive from it, and per-sequence gradients are summed in batch order no
/// matter how many threads computed them.
TrainResult train(Model& model, const Dataset& train_data, const Dataset* eval_data,
                  const TrainConfig& config, const TrainHooks& hooks = {});

struct Split {
  Dataset train;
  Dataset eval;
};

/// Seeded shuffle, then the first `eval_fraction` of sequences go to eval.
Split split_dataset(const Dataset& data, double eval_fraction, std::uint64_t seed);

/// Model configuration matching a dataset's shapes and output kind.
ModelConfig model_config_for(ModelConfig base, const Dataset& data);

}  // namespace ebmrnn
