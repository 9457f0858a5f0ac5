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

#include "ebmrnn/memory_cell.hpp"

#include <cmath>
#include <stdexcept>

namespace ebmrnn {

void CellConfig::validate() const {
  if (explicit_slots < 1) throw std::invalid_argument("cell: explicit_slots must be >= 1");
  if (blurred_slots < 1) throw std::invalid_argument("cell: blurred_slots must be >= 1");
  if (slot_width < 1) throw std::invalid_argument("cell: slot_width must be >= 1");
  if (hops < 1) throw std::invalid_argument("cell: hops must be >= 1");
  if (!(usage_decay >= 0.0 && usage_decay <= 1.0)) {
    throw std::invalid_argument("cell: usage_decay must lie in [0, 1]");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("cell: tau must be positive");
  if (!(address_sharpness > 0.0)) {
    throw std::invalid_argument("cell: address_sharpness must be positive");
  }
}

std::string_view write_kind_name(WriteKind kind) {
  switch (kind) {
    case WriteKind::kNone: return "none";
    case WriteKind::kAppend: return "append";
    case WriteKind::kReplace: return "replace";
  }
  return "none";
}

CellParams CellParams::create(ParameterSet& params, const CellConfig& config, int hidden, Rng& rng,
                              const std::string& prefix) {
  config.validate();
  CellParams ids;
  const Index d = config.slot_width;
  const Index c = hidden;
  const bool blurred = config.variant == Variant::kEbmrnn;
  Rng init = rng.split();

  ids.w_hop = params.add(prefix + "hop.w", fan_in_init(2 * d, c + d, init));
  ids.b_hop = params.add(prefix + "hop.b", uniform_matrix(2 * d, 1, 1.0 / std::sqrt(c + d), init));
  if (blurred) {
    const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(d));
    ids.a_gate_blurred = params.add(prefix + "gate.a_blurred", uniform_matrix(1, d, s, init));
    ids.a_gate_explicit = params.add(prefix + "gate.a_explicit", uniform_matrix(1, d, s, init));
    ids.b_gate = params.add(prefix + "gate.b", uniform_matrix(1, 1, s, init));
    ids.w_read_blurred = params.add(prefix + "read.w_blurred", fan_in_init(d, d, init));
  }
  ids.w_read_explicit = params.add(prefix + "read.w_explicit", fan_in_init(d, d, init));
  ids.b_read = params.add(prefix + "read.b", uniform_matrix(d, 1, 1.0 / std::sqrt(d), init));
  ids.a_gamma = params.add(prefix + "usage.a_gamma", fan_in_init(1, c, init));
  ids.b_gamma = params.add(prefix + "usage.b_gamma", uniform_matrix(1, 1, 1.0 / std::sqrt(c), init));
  if (blurred) {
    const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(d));
    ids.w_forget_memory = params.add(prefix + "blur.w_forget_memory", uniform_matrix(d, d, s, init));
    ids.w_forget_popped = params.add(prefix + "blur.w_forget_popped", uniform_matrix(d, d, s, init));
    ids.b_forget = params.add(prefix + "blur.b_forget", uniform_matrix(d, 1, s, init));
    ids.w_blur_memory = params.add(prefix + "blur.w_memory", uniform_matrix(d, d, s, init));
    ids.w_blur_popped = params.add(prefix + "blur.w_popped", uniform_matrix(d, d, s, init));
    ids.b_blur = params.add(prefix + "blur.b", uniform_matrix(d, 1, s, init));
    ids.blurred_init = params.add(prefix + "blurred_init",
                                  uniform_matrix(config.blurred_slots, d, 0.1, init), false);
  }
  return ids;
}

CellState initial_cell_state(const CellSpec& spec, const BoundParameters& p) {
  Tape& tape = p.tape();
  const auto& cfg = spec.cell;
  CellState s;
  s.controller = initial_controller_state(tape, spec.controller);
  s.explicit_bank.slots = tape.zeros(cfg.explicit_slots, cfg.slot_width);
  s.explicit_bank.usage = tape.zeros(cfg.explicit_slots);
  s.explicit_bank.slot_time.assign(static_cast<std::size_t>(cfg.explicit_slots), -1);
  if (cfg.variant == Variant::kEbmrnn) s.blurred_bank.slots = p[spec.cell_ids.blurred_init];
  s.read = tape.zeros(cfg.slot_width);
  return s;
}

// ---------------------------------------------------------------------------
// Read path

ReadWeights read_addresses(const Tensor& key_blurred, const Tensor& key_explicit,
                           const BlurredBank& blurred, const ExplicitBank& bank,
                           const CellConfig& config, Rng* noise) {
  ReadWeights w;
  if (blurred.slots.defined()) w.w_blurred = softmax(cosine_sim(key_blurred, blurred.slots));

  Tape& tape = key_explicit.tape();
  const Index n = bank.capacity();
  if (bank.occupancy == 0) {
    w.w_explicit = tape.zeros(n);
    return w;
  }
  Tensor scores = cosine_sim(key_explicit, bank.slots);
  if (config.address_sharpness != 1.0) scores = scale_shift(scores, config.address_sharpness, 0.0);
  if (!bank.full()) {
    Matrix mask = Matrix::Zero(n, 1);
    mask.bottomRows(n - bank.occupancy).setConstant(kMaskedScore);
    scores = scores + tape.constant(std::move(mask));
  }
  w.w_explicit = gumbel_softmax(scores, config.tau, config.hard, noise);
  return w;
}

Reads read_memories(const ReadWeights& w, const BlurredBank& blurred, const ExplicitBank& bank) {
  Reads r;
  if (blurred.slots.defined()) r.r_blurred = matmul_tn(blurred.slots, w.w_blurred);
  r.r_explicit = matmul_tn(bank.slots, w.w_explicit);
  return r;
}

FusedRead fuse_reads(const Reads& reads, const BoundParameters& p, const CellParams& ids,
                     Variant variant) {
  FusedRead out;
  if (variant == Variant::kEmrnn) {
    out.gate = p.tape().scalar(1.0);
    out.read = relu(matmul(p[ids.w_read_explicit], reads.r_explicit) + p[ids.b_read]);
    return out;
  }
  out.gate = sigmoid(affine(p[ids.a_gate_blurred], reads.r_blurred, p[ids.b_gate]) +
                     matmul(p[ids.a_gate_explicit], reads.r_explicit));
  Tensor mixed = mul(one_minus(out.gate), matmul(p[ids.w_read_blurred], reads.r_blurred)) +
                 mul(out.gate, matmul(p[ids.w_read_explicit], reads.r_explicit));
  out.read = relu(mixed + p[ids.b_read]);
  return out;
}

MultiHopRead multi_hop_read(const Tensor& hidden, const Heads& heads, const BlurredBank& blurred,
                            const ExplicitBank& bank, const CellConfig& config,
                            const BoundParameters& p, const CellParams& ids, Rng* noise) {
  const Index d = config.slot_width;
  MultiHopRead out;
  Tensor key_explicit = heads.key_explicit;
  Tensor key_blurred = heads.key_blurred;
  for (int hop = 0; hop < config.hops; ++hop) {
    if (hop > 0) {
      Tensor keys = affine(p[ids.w_hop], concat(hidden, out.read), p[ids.b_hop]);
      key_explicit = slice(keys, 0, d);
      key_blurred = slice(keys, d, d);
    }
    ReadWeights w = read_addresses(key_blurred, key_explicit, blurred, bank, config, noise);
    FusedRead fused = fuse_reads(read_memories(w, blurred, bank), p, ids, config.variant);
    out.read = fused.read;
    out.gates.push_back(fused.gate);
    out.weights.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Write path

Tensor retention_weights(const Tensor& memory, const ExplicitBank& bank) {
  if (!bank.full()) {
    throw std::logic_error("retention_weights: explicit bank is not full (" +
                           std::to_string(bank.occupancy) + "/" +
                           std::to_string(bank.capacity()) + ")");
  }
  return softmax(one_minus(cosine_sim(memory, bank.slots)));
}

Tensor usage_update(const Tensor& usage, const Tensor& w_explicit, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("usage_update: decay must lie in [0, 1]");
  }
  return scale_shift(usage, decay, 0.0) + scale_shift(w_explicit, 1.0 - decay, 0.0);
}

Tensor write_address_explicit(const Tensor& retention, const Tensor& gamma, const Tensor& usage,
                              const CellConfig& config, Rng* noise) {
  Tensor scores = one_minus(retention + mul(gamma, usage));
  return gumbel_softmax(scores, config.tau, config.hard, noise);
}

ExplicitBank append_explicit(const ExplicitBank& bank, const Tensor& memory, int t) {
  if (bank.full()) {
    throw std::logic_error("append_explicit: explicit bank is full (" +
                           std::to_string(bank.capacity()) + " slots)");
  }
  if (memory.rows() != bank.slots.cols()) {
    throw DimensionError("append_explicit: memory " + shape_string(memory.value()) +
                         " vs slot width " + std::to_string(bank.slots.cols()));
  }
  Tape& tape = memory.tape();
  const Index n = bank.capacity();
  const Index row = bank.occupancy;
  Tensor select = tape.constant(one_hot(n, row));
  ExplicitBank out = bank;
  out.slots = bank.slots + outer(select, memory);
  out.usage = mul(bank.usage, one_minus(select));
  out.slot_time[static_cast<std::size_t>(row)] = t;
  ++out.occupancy;
  return out;
}

namespace {

bool is_one_hot(const Matrix& w) {
  int ones = 0;
  for (Index i = 0; i < w.size(); ++i) {
    const double v = w.data()[i];
    if (v == 1.0) ++ones;
    else if (v != 0.0) return false;
  }
  return ones == 1;
}

}  // namespace

Replacement replace_explicit(const ExplicitBank& bank, const Tensor& w_write, const Tensor& memory,
                             int t, bool require_one_hot) {
  if (!bank.full()) {
    throw std::logic_error("replace_explicit: explicit bank is not full");
  }
  if (w_write.rows() != bank.capacity() || w_write.cols() != 1) {
    throw DimensionError("replace_explicit: write weights " + shape_string(w_write.value()) +
                         " vs " + std::to_string(bank.capacity()) + " slots");
  }
  if (require_one_hot && !is_one_hot(w_write.value())) {
    throw std::invalid_argument("replace_explicit: write weights are not one-hot");
  }
  Tape& tape = memory.tape();
  Tensor ones = tape.constant(Matrix::Ones(bank.slots.cols(), 1));

  Replacement out;
  out.slot = static_cast<int>(argmax(w_write.value()));
  out.popped = matmul_tn(bank.slots, w_write);
  out.bank = bank;
  out.bank.slots = mul(bank.slots, one_minus(outer(w_write, ones))) + outer(w_write, memory);
  out.bank.usage = mul(bank.usage, one_minus(w_write));
  out.evicted_time = bank.slot_time[static_cast<std::size_t>(out.slot)];
  out.bank.slot_time[static_cast<std::size_t>(out.slot)] = t;
  return out;
}

Tensor blur_candidate(const Tensor& memory, const Tensor& popped, const BoundParameters& p,
                      const CellParams& ids) {
  Tensor forget = sigmoid(affine(p[ids.w_forget_memory], memory, p[ids.b_forget]) +
                          matmul(p[ids.w_forget_popped], popped));
  Tensor mixed = mul(one_minus(forget), matmul(p[ids.w_blur_memory], memory)) +
                 mul(forget, matmul(p[ids.w_blur_popped], popped));
  return relu(mixed + p[ids.b_blur]);
}

BlurredBank write_blurred_with(const BlurredBank& bank, const Tensor& candidate,
                               const Tensor& erase, const Tensor& weights) {
  BlurredBank out;
  out.slots = mul(bank.slots, one_minus(outer(weights, erase))) + outer(weights, candidate);
  return out;
}

BlurredWrite write_blurred(const BlurredBank& bank, const Tensor& candidate, const Tensor& erase) {
  BlurredWrite out;
  out.weights = softmax(cosine_sim(candidate, bank.slots));
  out.bank = write_blurred_with(bank, candidate, erase, out.weights);
  return out;
}

// ---------------------------------------------------------------------------
// Step

StepResult cell_step(const Tensor& x, const CellState& state, const CellSpec& spec,
                     const BoundParameters& p, Mode mode, Rng* noise, Rng* dropout, int t) {
  const CellConfig& cfg = spec.cell;
  const CellParams& ids = spec.cell_ids;
  Tape& tape = p.tape();

  ControllerOutput ctrl = controller_step(x, state.read, state.controller, spec.controller, p,
                                          spec.controller_ids, mode, dropout);
  MultiHopRead hops = multi_hop_read(ctrl.hidden, ctrl.heads, state.blurred_bank,
                                     state.explicit_bank, cfg, p, ids, noise);

  StepResult out;
  out.read = hops.read;
  out.hidden = ctrl.hidden;
  out.heads = ctrl.heads;
  out.gates = hops.gates;
  for (std::size_t k = 0; k < hops.gates.size(); ++k) {
    out.trace.gates.push_back(hops.gates[k].item());
    const ReadWeights& w = hops.weights[k];
    out.trace.w_blurred.push_back(w.w_blurred.defined() ? w.w_blurred.value() : Matrix());
    out.trace.w_explicit.push_back(w.w_explicit.value());
  }

  ExplicitBank bank = state.explicit_bank;
  bank.usage = usage_update(bank.usage, hops.weights.back().w_explicit, cfg.usage_decay);

  const Tensor& memory = ctrl.heads.memory;
  Tensor popped;
  if (!bank.full()) {
    out.trace.write = WriteKind::kAppend;
    out.trace.slot = bank.occupancy;
    bank = append_explicit(bank, memory, t);
  } else {
    Tensor retention = retention_weights(memory, bank);
    Tensor gamma = sigmoid(affine(p[ids.a_gamma], ctrl.hidden, p[ids.b_gamma]));
    Tensor w_write = write_address_explicit(retention, gamma, bank.usage, cfg, noise);
    Replacement rep = replace_explicit(bank, w_write, memory, t, cfg.hard);
    bank = std::move(rep.bank);
    popped = rep.popped;
    out.trace.write = WriteKind::kReplace;
    out.trace.slot = rep.slot;
    out.trace.evicted_time = rep.evicted_time;
    out.trace.popped = popped.value();
  }

  out.state.controller = std::move(ctrl.state);
  out.state.explicit_bank = std::move(bank);
  out.state.read = hops.read;
  if (cfg.variant == Variant::kEbmrnn) {
    out.state.blurred_bank = state.blurred_bank;
    if (cfg.blurred_write) {
      if (!popped.defined()) popped = tape.zeros(cfg.slot_width);
      Tensor candidate = blur_candidate(memory, popped, p, ids);
      out.state.blurred_bank = write_blurred(state.blurred_bank, candidate, ctrl.heads.erase).bank;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

OutputParams OutputParams::create(ParameterSet& params, int inputs, int outputs, Rng& rng,
                                  const std::string& prefix) {
  OutputParams ids;
  ids.w = params.add(prefix + "w", fan_in_init(outputs, inputs, rng));
  ids.b = params.add(prefix + "b", uniform_matrix(outputs, 1, 1.0 / std::sqrt(inputs), rng));
  return ids;
}

Tensor project_output(const Tensor& read, const BoundParameters& p, const OutputParams& ids,
                      OutputKind kind) {
  Tensor logits = affine(p[ids.w], read, p[ids.b]);
  return kind == OutputKind::kSoftmax ? softmax(logits) : sigmoid(logits);
}

}  // namespace ebmrnn
