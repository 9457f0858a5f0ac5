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

// Synthetic sequence tasks and CSV ingestion.
//
// Labels are always stored as 0/1 matrices: one row per step for step-level
// modes, a single row for sequence-level modes. Multiclass targets are one-hot
// rows; a step whose mask is 0 carries an all-zero row.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ebmrnn/tensor.hpp"

namespace ebmrnn {

enum class TaskMode {
  kSequenceBinary,  // one label per sequence (mortality analog)
  kStepBinary,  // one label per step (decompensation analog)
  kSequenceMultiLabel,  // 25 labels per sequence (phenotype analog)
  kStepMulticlass,  // copy task
  kSequenceMulticlass,  // associative recall
};

std::string_view task_mode_name(TaskMode mode);
TaskMode parse_task_mode(std::string_view name);
bool is_step_mode(TaskMode mode);
bool is_multiclass(TaskMode mode);

/// Malformed or inconsistent data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SequenceSample {
  std::string id;
  Matrix inputs;  // T x U
  Matrix labels;  // T x L (step modes) or 1 x L
  /// T x 1 of 0/1; empty means every step counts.
  Matrix mask;

  Index length() const { return inputs.rows(); }
  bool counts(Index t) const { return mask.size() == 0 || mask(t, 0) != 0.0; }
};

struct Dataset {
  TaskMode mode = TaskMode::kSequenceBinary;
  int input_size = 0;
  int label_size = 0;
  std::vector<SequenceSample> samples;

  /// Throws DataError on shape, finiteness or label violations.
  void validate() const;
};

// -- generators ----------------------------------------------------------------

/// L one-hot symbols over A channels, then one step with the delimiter channel
/// (index A) set, then L blank steps during which the symbols must be emitted
/// in order. T = 2L + 1, U = A + 1, labels T x A, mask on the output phase.
Dataset gen_copy(std::uint64_t seed, int count, int length, int alphabet);

/// P steps each carrying a (key, value) pair as two one-hot blocks, then a
/// query step with the query flag set and one of the keys. The label is the
/// value paired with that key. Keys within a sequence are distinct, so P <= A.
/// U = 2A + 1, T = P + 1, labels 1 x A.
Dataset gen_assoc_recall(std::uint64_t seed, int count, int pairs, int alphabet);

struct EhrParams {
  TaskMode mode = TaskMode::kSequenceBinary;
  int length = 48;
  /// Background-only channels, added after the motif channels.
  int noise_channels = 4;
  /// Background values are uniform in [0, background); motif entries are 1.
  double background = 0.5;
  /// SequenceBinary: the trigger is planted in the first `early_fraction` of
  /// the sequence.
  double early_fraction = 0.25;
  /// StepBinary: window W and the requested fraction of positive steps.
  int window = 24;
  double positive_rate = 0.2;
  /// SequenceMultiLabel: label count and per-motif presence probability.
  int labels = 25;
  double presence = 0.2;
};

/// Motif channels first (2 for SequenceBinary, 1 for StepBinary, `labels` for
/// SequenceMultiLabel), then `noise_channels` background channels.
///
/// SequenceBinary: one trigger of kind k in {0, 1}, label = k.
/// StepBinary: independent triggers with per-step probability p; the step-s
///   label is 1 iff a trigger fired at some step in [s - W, s]. p is chosen by
///   bisection so the expected positive fraction equals `positive_rate`.
/// SequenceMultiLabel: label l is 1 iff motif l appears anywhere.
Dataset gen_ehr_like(std::uint64_t seed, int count, const EhrParams& params);

int ehr_input_size(const EhrParams& params);

/// Per-step trigger probability used by the StepBinary generator.
double step_trigger_probability(const EhrParams& params);

/// Expected positive fraction for a given per-step trigger probability.
double expected_positive_rate(double trigger_probability, int length, int window);

/// Scores produced by evaluating the documented label function on the inputs.
/// Same shape as the sample's labels.
Matrix ehr_oracle_scores(const SequenceSample& sample, const EhrParams& params);

// -- CSV -------------------------------------------------------------------------

/// Header: sequence_id,t,x0..x{U-1},y0..y{L-1}[,mask]. Sequence-level labels
/// are repeated on every row of their sequence. Rows may come in any order;
/// sequences come back sorted by id.
Dataset load_csv(const std::string& path, TaskMode mode);
/// Same, with the mode inferred: a mask column or labels that change within a
/// sequence mean a step mode (multiclass when every counted row is one-hot and
/// L > 1); otherwise a sequence mode (multi-label when L > 1).
Dataset load_csv(const std::string& path);

void write_csv(const Dataset& data, const std::string& path);

}  // namespace ebmrnn
