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

#include "ebmrnn/model.hpp"

#include <stdexcept>

namespace ebmrnn {

ModelConfig ModelConfig::normalized() const {
  ModelConfig c = *this;
  c.controller.read = use_memory ? cell.slot_width : 0;
  return c;
}

void ModelConfig::validate() const {
  controller.validate();
  if (use_memory) cell.validate();
  if (output_size < 1) throw std::invalid_argument("model: output_size must be >= 1");
}

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(config.normalized()), seed_(seed) {
  config_.validate();
  Rng rng(seed);
  build(rng);
}

Model::Model(ModelConfig config, std::uint64_t seed, const ParameterSet& values)
    : Model(std::move(config), seed) {
  if (values.size() != params_.size()) {
    throw std::invalid_argument("model: expected " + std::to_string(params_.size()) +
                                " parameters, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Matrix& v = values.value(i);
    if (values.name(i) != params_.name(i) || v.rows() != params_.value(i).rows() ||
        v.cols() != params_.value(i).cols()) {
      throw std::invalid_argument("model: parameter " + std::to_string(i) + " (" + values.name(i) +
                                  " " + shape_string(v) + ") does not match layout (" +
                                  params_.name(i) + " " + shape_string(params_.value(i)) + ")");
    }
    params_.value(i) = v;
  }
}

void Model::build(Rng& rng) {
  Rng controller_rng = rng.split();
  Rng cell_rng = rng.split();
  Rng output_rng = rng.split();
  spec_.controller = config_.controller;
  spec_.cell = config_.cell;
  spec_.controller_ids = ControllerParams::create(params_, config_.controller, controller_rng);
  if (config_.use_memory) {
    spec_.cell_ids = CellParams::create(params_, config_.cell, config_.controller.hidden, cell_rng);
  }
  const int width = config_.use_memory ? config_.cell.slot_width : config_.controller.hidden;
  output_ids_ = OutputParams::create(params_, width, config_.output_size, output_rng);
}

SequenceRun Model::forward(const BoundParameters& p, const Matrix& inputs, Mode mode, Rng* noise,
                           Rng* dropout, bool record) const {
  if (inputs.cols() != config_.controller.input) {
    throw DimensionError("model: inputs " + shape_string(inputs) + " but controller expects " +
                         std::to_string(config_.controller.input) + " features");
  }
  if (config_.cell.frozen_noise) noise = nullptr;
  Tape& tape = p.tape();
  SequenceRun run;
  run.outputs.reserve(static_cast<std::size_t>(inputs.rows()));

  if (!config_.use_memory) {
    ControllerState state = initial_controller_state(tape, config_.controller);
    for (Index t = 0; t < inputs.rows(); ++t) {
      Tensor x = tape.constant(inputs.row(t).transpose());
      ControllerOutput out = controller_step(x, Tensor(), state, config_.controller, p,
                                             spec_.controller_ids, mode, dropout);
      state = std::move(out.state);
      run.outputs.push_back(project_output(out.hidden, p, output_ids_, config_.output));
      if (record) {
        StepRecord rec;
        rec.read = out.hidden.value();
        rec.output = run.outputs.back().value();
        run.records.push_back(std::move(rec));
      }
    }
    return run;
  }

  CellState state = initial_cell_state(spec_, p);
  for (Index t = 0; t < inputs.rows(); ++t) {
    Tensor x = tape.constant(inputs.row(t).transpose());
    StepResult step = cell_step(x, state, spec_, p, mode, noise, dropout, static_cast<int>(t));
    run.outputs.push_back(project_output(step.read, p, output_ids_, config_.output));
    if (record) {
      StepRecord rec;
      rec.trace = std::move(step.trace);
      rec.slot_time = step.state.explicit_bank.slot_time;
      rec.explicit_slots = step.state.explicit_bank.slots.value();
      rec.memory = step.heads.memory.value();
      rec.read = step.read.value();
      rec.output = run.outputs.back().value();
      run.records.push_back(std::move(rec));
    }
    state = std::move(step.state);
  }
  return run;
}

}  // namespace ebmrnn
