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

// The explicit-blurred memory cell.
//
// Each step the controller reads [x_t; r_{t-1}], K read hops address the
// explicit bank E (discrete, Gumbel-Softmax straight-through) and the blurred
// bank B (soft), a scalar gate g mixes the two reads, and then m_t is written:
// appended to E while it has room, otherwise replacing the slot with the
// lowest retention-plus-usage score. The evicted row and m_t form a candidate
// that is soft-written into B.

#pragma once

#include <string>
#include <vector>

#include "ebmrnn/controller.hpp"
#include "ebmrnn/parameters.hpp"
#include "ebmrnn/rng.hpp"
#include "ebmrnn/tensor.hpp"

namespace ebmrnn {

enum class Variant {
  kEbmrnn,
  /// Explicit bank only: no blurred bank, read gate fixed at 1, evicted rows
  /// are discarded.
  kEmrnn,
};

struct CellConfig {
  int explicit_slots = 8;
  int blurred_slots = 8;
  int slot_width = 8;
  int hops = 4;
  /// alpha_E in u_t = alpha u_{t-1} + (1 - alpha) w^{r,E}.
  double usage_decay = 0.7;
  /// Gumbel-Softmax temperature.
  double tau = 1.0;
  /// Multiplier on the cosine scores fed to explicit-read addressing. 1 leaves
  /// the logits as plain cosine similarities.
  double address_sharpness = 1.0;
  Variant variant = Variant::kEbmrnn;
  /// Straight-through one-hot explicit addressing. When false, explicit read
  /// and eviction weights are the relaxed (soft) samples.
  bool hard = true;
  bool blurred_write = true;
  /// Disables Gumbel noise regardless of mode.
  bool frozen_noise = false;

  void validate() const;
};

/// Score assigned to unoccupied explicit slots before addressing.
inline constexpr double kMaskedScore = -1e9;

struct CellParams {
  ParamId w_hop, b_hop;  // 2D x (C + D): keys for hops after the first
  ParamId a_gate_blurred, a_gate_explicit, b_gate;  // 1 x D, 1 x D, 1 x 1
  ParamId w_read_blurred, w_read_explicit, b_read;  // D x D, D x D, D x 1
  ParamId a_gamma, b_gamma;  // 1 x C, 1 x 1
  ParamId w_forget_memory, w_forget_popped, b_forget;  // D x D, D x D, D x 1
  ParamId w_blur_memory, w_blur_popped, b_blur;  // D x D, D x D, D x 1
  ParamId blurred_init;  // N^B x D, not trained

  static CellParams create(ParameterSet& params, const CellConfig& config, int hidden, Rng& rng,
                           const std::string& prefix = "cell.");
};

/// Everything that defines a cell apart from parameter values.
struct CellSpec {
  CellConfig cell;
  ControllerConfig controller;
  ControllerParams controller_ids;
  CellParams cell_ids;
};

struct ExplicitBank {
  Tensor slots;  // N^E x D; rows >= occupancy are zero
  Tensor usage;  // N^E x 1
  int occupancy = 0;
  /// Time index of the event stored in each slot, -1 while unoccupied.
  std::vector<int> slot_time;

  int capacity() const { return static_cast<int>(slot_time.size()); }
  bool full() const { return occupancy == capacity(); }
};

struct BlurredBank {
  Tensor slots;  // N^B x D
};

struct CellState {
  ControllerState controller;
  ExplicitBank explicit_bank;
  BlurredBank blurred_bank;  // undefined for EmRNN
  Tensor read;  // r_{t-1}
};

CellState initial_cell_state(const CellSpec& spec, const BoundParameters& p);

enum class WriteKind { kNone, kAppend, kReplace };

std::string_view write_kind_name(WriteKind kind);

struct StepTrace {
  std::vector<double> gates;  // one per hop
  std::vector<Matrix> w_blurred;  // per hop; empty matrices for EmRNN
  std::vector<Matrix> w_explicit;  // per hop
  WriteKind write = WriteKind::kNone;
  int slot = -1;
  /// Time index of the row that was replaced, -1 unless write == kReplace.
  int evicted_time = -1;
  Matrix popped;  // m-hat, empty unless write == kReplace
};

// -- read path ---------------------------------------------------------------

struct ReadWeights {
  Tensor w_blurred;
  Tensor w_explicit;
};

/// w^{r,B} = softmax(S(k^B, B)); w^{r,E} = Gumbel-Softmax(S(k^E, E)) over
/// occupied slots. An empty explicit bank yields all-zero explicit weights.
ReadWeights read_addresses(const Tensor& key_blurred, const Tensor& key_explicit,
                           const BlurredBank& blurred, const ExplicitBank& bank,
                           const CellConfig& config, Rng* noise);

struct Reads {
  Tensor r_blurred;
  Tensor r_explicit;
};

Reads read_memories(const ReadWeights& w, const BlurredBank& blurred, const ExplicitBank& bank);

struct FusedRead {
  Tensor gate;  // 1 x 1, in (0, 1)
  Tensor read;  // D x 1, nonnegative
};

/// g = sigmoid(a_B' r^B + a_E' r^E + b_g);
/// r = relu((1 - g) W_B r^B + g W_E r^E + b_r). EmRNN fixes g = 1 and
/// drops the blurred term.
FusedRead fuse_reads(const Reads& reads, const BoundParameters& p, const CellParams& ids,
                     Variant variant);

struct MultiHopRead {
  Tensor read;  // final hop's fused read
  std::vector<Tensor> gates;
  std::vector<ReadWeights> weights;
};

/// Hop 1 uses the controller's keys; hop k > 1 derives both keys from
/// [h_t; r^{(k-1)}] through one shared linear map.
MultiHopRead multi_hop_read(const Tensor& hidden, const Heads& heads, const BlurredBank& blurred,
                            const ExplicitBank& bank, const CellConfig& config,
                            const BoundParameters& p, const CellParams& ids, Rng* noise);

// -- write path --------------------------------------------------------------

/// softmax(1 - S(m_t, E)). Dissimilar slots get larger retention weight.
/// Only defined for a full bank.
Tensor retention_weights(const Tensor& memory, const ExplicitBank& bank);

Tensor usage_update(const Tensor& usage, const Tensor& w_explicit, double decay);

/// Gumbel-Softmax(1 - (retention + gamma u)): the selected slot is evicted.
Tensor write_address_explicit(const Tensor& retention, const Tensor& gamma, const Tensor& usage,
                              const CellConfig& config, Rng* noise);

/// Writes m_t into row `occupancy` and stamps it with time t. Usage of the
/// new slot starts at 0.
ExplicitBank append_explicit(const ExplicitBank& bank, const Tensor& memory, int t);

struct Replacement {
  ExplicitBank bank;
  Tensor popped;  // m-hat
  int slot = -1;
  int evicted_time = -1;
};

/// m-hat = E' w (the outgoing row); E' = E o (1 - w 1') + w m'; usage at the
/// written slot is reset to 0. Requires a full bank and, when
/// `require_one_hot`, a one-hot w.
Replacement replace_explicit(const ExplicitBank& bank, const Tensor& w_write, const Tensor& memory,
                             int t, bool require_one_hot = true);

/// f = sigmoid(W_f m + W_fE m-hat + b_f);
/// m^B = relu((1 - f) o W_i m + f o W_E m-hat + b_m).
Tensor blur_candidate(const Tensor& memory, const Tensor& popped, const BoundParameters& p,
                      const CellParams& ids);

struct BlurredWrite {
  BlurredBank bank;
  Tensor weights;
};

/// w = softmax(S(m^B, B)); B' = B o (1 - w e') + w m^B'.
BlurredWrite write_blurred(const BlurredBank& bank, const Tensor& candidate, const Tensor& erase);
/// Same update with caller-supplied write weights.
BlurredBank write_blurred_with(const BlurredBank& bank, const Tensor& candidate,
                               const Tensor& erase, const Tensor& weights);

// -- full step ---------------------------------------------------------------

struct StepResult {
  Tensor read;  // r_t
  Tensor hidden;  // controller h_t
  Heads heads;
  std::vector<Tensor> gates;  // per hop
  CellState state;
  StepTrace trace;
};

/// One timestep: controller, K-hop read against E_{t-1}/B_{t-1}, usage update,
/// explicit append or replace, blurred candidate and write. `noise` null
/// freezes Gumbel noise; `dropout` may be null in eval mode.
StepResult cell_step(const Tensor& x, const CellState& state, const CellSpec& spec,
                     const BoundParameters& p, Mode mode, Rng* noise, Rng* dropout, int t);

// -- output ------------------------------------------------------------------

enum class OutputKind {
  kSoftmax,  // multiclass
  kSigmoid,  // binary and multi-label
};

struct OutputParams {
  ParamId w, b;
  static OutputParams create(ParameterSet& params, int inputs, int outputs, Rng& rng,
                             const std::string& prefix = "output.");
};

/// y_t = softmax(W_y r_t + b_y) or elementwise sigmoid.
Tensor project_output(const Tensor& read, const BoundParameters& p, const OutputParams& ids,
                      OutputKind kind);

}  // namespace ebmrnn
