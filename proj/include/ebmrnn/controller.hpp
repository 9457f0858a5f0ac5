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

// Recurrent controller: a stack of GRU or LSTM layers consuming [x_t; r_{t-1}]
// and emitting the four control heads used by the memory banks.

#pragma once

#include <string>
#include <vector>

#include "ebmrnn/parameters.hpp"
#include "ebmrnn/rng.hpp"
#include "ebmrnn/tensor.hpp"

namespace ebmrnn {

enum class CellKind { kGru, kLstm };
enum class Mode { kTrain, kEval };

struct ControllerConfig {
  CellKind kind = CellKind::kGru;
  int layers = 2;
  int hidden = 16;
  /// Width of x_t.
  int input = 1;
  /// Width of r_{t-1} (the slot width D); 0 for a controller without memory.
  int read = 8;
  double dropout = 0.0;

  void validate() const;
};

struct GruLayerParams {
  ParamId w_x;  // 3C x in: update, reset, candidate
  ParamId w_h;  // 2C x C: update, reset
  ParamId w_hc;  // C x C: candidate, applied to r o h
  ParamId b;  // 3C x 1
};

struct LstmLayerParams {
  ParamId w_x;  // 4C x in: input, forget, cell, output
  ParamId w_h;  // 4C x C
  ParamId b;  // 4C x 1, forget slice initialised to +1
};

struct ControllerParams {
  std::vector<GruLayerParams> gru;
  std::vector<LstmLayerParams> lstm;
  /// Stacked head projection, 4D x C: [k^E; k^B; m; e].
  ParamId w_heads;
  ParamId b_heads;
  bool has_heads = false;

  /// Registers all controller parameters under `prefix`.
  static ControllerParams create(ParameterSet& params, const ControllerConfig& config, Rng& rng,
                                 const std::string& prefix = "controller.");
};

struct ControllerState {
  std::vector<Tensor> h;
  std::vector<Tensor> c;  // LSTM only
};

ControllerState initial_controller_state(Tape& tape, const ControllerConfig& config);

struct Heads {
  Tensor key_explicit;
  Tensor key_blurred;
  Tensor memory;
  Tensor erase;  // in [0, 1]
};

struct ControllerOutput {
  Tensor hidden;  // top-layer h_t
  Heads heads;
  ControllerState state;
};

/// One GRU layer: h' = (1 - z) o h + z o tanh(W x + U (r o h) + b).
Tensor gru_step(const Tensor& x, const Tensor& h, const BoundParameters& p,
                const GruLayerParams& ids);

struct LstmOutput {
  Tensor h;
  Tensor c;
};
LstmOutput lstm_step(const Tensor& x, const Tensor& h, const Tensor& c, const BoundParameters& p,
                     const LstmLayerParams& ids);

/// Linear heads on h_t; the erase head goes through a sigmoid.
Heads compute_heads(const Tensor& hidden, int slot_width, const BoundParameters& p,
                    const ControllerParams& ids);

/// Advances every layer by one step. Layer 1 sees [x_t; r_prev] (or just x_t
/// when `r_prev` is undefined); inverted dropout is applied between layers in
/// train mode only, drawing masks from `dropout_rng`.
ControllerOutput controller_step(const Tensor& x, const Tensor& r_prev, const ControllerState& state,
                                 const ControllerConfig& config, const BoundParameters& p,
                                 const ControllerParams& ids, Mode mode, Rng* dropout_rng);

}  // namespace ebmrnn
