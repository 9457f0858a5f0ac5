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

#include "ebmrnn/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace ebmrnn {

void ControllerConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("controller: layers must be >= 1");
  if (hidden < 1) throw std::invalid_argument("controller: hidden size must be >= 1");
  if (input < 1) throw std::invalid_argument("controller: input size must be >= 1");
  if (read < 0) throw std::invalid_argument("controller: read size must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("controller: dropout must lie in [0, 1)");
  }
}

ControllerParams ControllerParams::create(ParameterSet& params, const ControllerConfig& config,
                                          Rng& rng, const std::string& prefix) {
  config.validate();
  ControllerParams ids;
  const Index c = config.hidden;
  for (int l = 0; l < config.layers; ++l) {
    const Index in = l == 0 ? config.input + config.read : c;
    const std::string name = prefix + "layer" + std::to_string(l) + ".";
    const double s = 1.0 / std::sqrt(static_cast<double>(in + c));
    if (config.kind == CellKind::kGru) {
      GruLayerParams g;
      g.w_x = params.add(name + "w_x", uniform_matrix(3 * c, in, s, rng));
      g.w_h = params.add(name + "w_h", uniform_matrix(2 * c, c, s, rng));
      g.w_hc = params.add(name + "w_hc", uniform_matrix(c, c, s, rng));
      g.b = params.add(name + "b", uniform_matrix(3 * c, 1, s, rng));
      ids.gru.push_back(g);
    } else {
      LstmLayerParams g;
      g.w_x = params.add(name + "w_x", uniform_matrix(4 * c, in, s, rng));
      g.w_h = params.add(name + "w_h", uniform_matrix(4 * c, c, s, rng));
      Matrix b = uniform_matrix(4 * c, 1, s, rng);
      b.middleRows(c, c).setOnes();
      g.b = params.add(name + "b", std::move(b));
      ids.lstm.push_back(g);
    }
  }
  if (config.read > 0) {
    const Index d = config.read;
    const double s = 1.0 / std::sqrt(static_cast<double>(c));
    ids.w_heads = params.add(prefix + "heads.w", uniform_matrix(4 * d, c, s, rng));
    ids.b_heads = params.add(prefix + "heads.b", uniform_matrix(4 * d, 1, s, rng));
    ids.has_heads = true;
  }
  return ids;
}

ControllerState initial_controller_state(Tape& tape, const ControllerConfig& config) {
  ControllerState s;
  for (int l = 0; l < config.layers; ++l) {
    s.h.push_back(tape.zeros(config.hidden));
    if (config.kind == CellKind::kLstm) s.c.push_back(tape.zeros(config.hidden));
  }
  return s;
}

Tensor gru_step(const Tensor& x, const Tensor& h, const BoundParameters& p,
                const GruLayerParams& ids) {
  const Index c = h.rows();
  Tensor gx = affine(p[ids.w_x], x, p[ids.b]);
  Tensor gh = matmul(p[ids.w_h], h);
  Tensor z = sigmoid(slice(gx, 0, c) + slice(gh, 0, c));
  Tensor r = sigmoid(slice(gx, c, c) + slice(gh, c, c));
  Tensor candidate = tanh(slice(gx, 2 * c, c) + matmul(p[ids.w_hc], mul(r, h)));
  return h + mul(z, candidate - h);
}

LstmOutput lstm_step(const Tensor& x, const Tensor& h, const Tensor& c, const BoundParameters& p,
                     const LstmLayerParams& ids) {
  const Index n = h.rows();
  Tensor gates = affine(p[ids.w_x], x, p[ids.b]) + matmul(p[ids.w_h], h);
  Tensor i = sigmoid(slice(gates, 0, n));
  Tensor f = sigmoid(slice(gates, n, n));
  Tensor g = tanh(slice(gates, 2 * n, n));
  Tensor o = sigmoid(slice(gates, 3 * n, n));
  Tensor c_next = mul(f, c) + mul(i, g);
  return {mul(o, tanh(c_next)), c_next};
}

Heads compute_heads(const Tensor& hidden, int slot_width, const BoundParameters& p,
                    const ControllerParams& ids) {
  const Index d = slot_width;
  Tensor all = affine(p[ids.w_heads], hidden, p[ids.b_heads]);
  return {slice(all, 0, d), slice(all, d, d), slice(all, 2 * d, d), sigmoid(slice(all, 3 * d, d))};
}

ControllerOutput controller_step(const Tensor& x, const Tensor& r_prev, const ControllerState& state,
                                 const ControllerConfig& config, const BoundParameters& p,
                                 const ControllerParams& ids, Mode mode, Rng* dropout_rng) {
  if (x.rows() != config.input || x.cols() != 1) {
    throw DimensionError("controller_step: input " + shape_string(x.value()) + " vs configured [" +
                         std::to_string(config.input) + "x1]");
  }
  if (r_prev.defined() && r_prev.rows() != config.read) {
    throw DimensionError("controller_step: read vector " + shape_string(r_prev.value()) +
                         " vs configured [" + std::to_string(config.read) + "x1]");
  }
  if (static_cast<int>(state.h.size()) != config.layers) {
    throw DimensionError("controller_step: state has " + std::to_string(state.h.size()) +
                         " layers, config has " + std::to_string(config.layers));
  }

  if (mode == Mode::kTrain && config.dropout > 0.0 && config.layers > 1 && dropout_rng == nullptr) {
    throw std::invalid_argument("controller_step: dropout requires a random stream in train mode");
  }

  ControllerOutput out;
  Tensor input = r_prev.defined() ? concat(x, r_prev) : x;
  for (int l = 0; l < config.layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    if (l > 0 && mode == Mode::kTrain && config.dropout > 0.0) {
      Matrix mask(input.rows(), 1);
      const double keep = 1.0 - config.dropout;
      for (Index i = 0; i < mask.rows(); ++i) {
        mask(i, 0) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      }
      input = mul(input, input.tape().constant(std::move(mask)));
    }
    if (config.kind == CellKind::kGru) {
      out.state.h.push_back(gru_step(input, state.h[li], p, ids.gru[li]));
    } else {
      LstmOutput o = lstm_step(input, state.h[li], state.c[li], p, ids.lstm[li]);
      out.state.h.push_back(o.h);
      out.state.c.push_back(o.c);
    }
    input = out.state.h.back();
  }
  out.hidden = input;
  if (ids.has_heads) out.heads = compute_heads(out.hidden, config.read, p, ids);
  return out;
}

}  // namespace ebmrnn
