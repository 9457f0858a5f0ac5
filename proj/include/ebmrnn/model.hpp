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

#pragma once

#include <cstdint>
#include <vector>

#include "ebmrnn/memory_cell.hpp"
#include "ebmrnn/parameters.hpp"

namespace ebmrnn {

struct ModelConfig {
  ControllerConfig controller;
  CellConfig cell;
  /// False builds the plain recurrent baseline: no memory banks, the output
  /// layer reads the controller's top hidden state.
  bool use_memory = true;
  OutputKind output = OutputKind::kSoftmax;
  int output_size = 2;

  /// Controller read width follows the cell's slot width (0 without memory).
  ModelConfig normalized() const;
  void validate() const;
};

/// Forward-value record of one step, captured on request.
struct StepRecord {
  StepTrace trace;
  std::vector<int> slot_time;  // after this step's write
  Matrix explicit_slots;  // after this step's write
  Matrix memory;  // m_t
  Matrix read;  // r_t
  Matrix output;  // y_t
};

struct SequenceRun {
  std::vector<Tensor> outputs;  // y_t per step
  std::vector<StepRecord> records;  // empty unless requested
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  /// Rebuilds the parameter layout for `config` and installs `values`, which
  /// must match it name for name and shape for shape.
  Model(ModelConfig config, std::uint64_t seed, const ParameterSet& values);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const CellSpec& spec() const { return spec_; }
  const OutputParams& output_ids() const { return output_ids_; }

  /// Runs a T x U input sequence. `noise` null freezes Gumbel noise; it is
  /// also ignored when the cell is configured with frozen noise.
  SequenceRun forward(const BoundParameters& p, const Matrix& inputs, Mode mode, Rng* noise,
                      Rng* dropout, bool record = false) const;

 private:
  void build(Rng& rng);

  ModelConfig config_;
  std::uint64_t seed_;
  ParameterSet params_;
  CellSpec spec_;
  OutputParams output_ids_;
};

}  // namespace ebmrnn
