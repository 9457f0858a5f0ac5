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

#include "ebmrnn/suites.hpp"

#include <algorithm>
#include <functional>
#include <utility>

#include "ebmrnn/controller.hpp"

namespace ebmrnn {

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) { return uniform_matrix(rows, cols, 1.0, rng); }

std::string describe(const ParameterSet& params, const GradCheckResult& r) {
  return params.name(r.worst_input) + "[" + std::to_string(r.worst_entry) + "]";
}

}  // namespace

UnrolledCellProblem::UnrolledCellProblem(std::uint64_t seed, int steps) {
  spec_.cell.slot_width = 4;
  spec_.cell.explicit_slots = 3;
  spec_.cell.blurred_slots = 3;
  spec_.cell.hops = 2;
  spec_.cell.hard = false;
  spec_.cell.frozen_noise = true;
  spec_.controller.input = 2;
  spec_.controller.hidden = 5;
  spec_.controller.read = spec_.cell.slot_width;
  Rng rng(seed);
  spec_.controller_ids = ControllerParams::create(params_, spec_.controller, rng);
  spec_.cell_ids = CellParams::create(params_, spec_.cell, spec_.controller.hidden, rng);
  Rng data(seed + 1);
  for (int t = 0; t < steps; ++t) inputs_.push_back(random_matrix(spec_.controller.input, 1, data));
  projection_ = random_matrix(spec_.cell.slot_width, 1, data);
}

Tensor UnrolledCellProblem::loss(const BoundParameters& p) const {
  Tape& tape = p.tape();
  CellState state = initial_cell_state(spec_, p);
  Tensor total = tape.scalar(0.0);
  for (std::size_t t = 0; t < inputs_.size(); ++t) {
    StepResult step = cell_step(tape.constant(inputs_[t]), state, spec_, p, Mode::kEval, nullptr, nullptr,
                                static_cast<int>(t));
    state = step.state;
    total = total + dot(tape.constant(projection_), step.read);
    for (const Tensor& g : step.gates) total = total + g;
  }
  return total;
}

SuiteResult unrolled_cell_suite(std::uint64_t seed, double eps) {
  UnrolledCellProblem problem(seed);
  SuiteResult out;
  out.name = "cell_unrolled";
  out.tolerance = 1e-4;
  out.result = finite_diff_check([&](const BoundParameters& p) { return problem.loss(p); },
                                 problem.params(), eps);
  out.worst = describe(problem.params(), out.result);
  return out;
}

std::vector<SuiteResult> run_gradcheck_suites(std::uint64_t seed, double eps) {
  std::vector<SuiteResult> results;
  Rng rng(seed);

  // Scalar ops: the worst case over all of them.
  {
    using Case = std::pair<const char*, std::function<Tensor(const Tensor&, const Tensor&)>>;
    const std::vector<Case> cases{
        {"mul", [](const Tensor& a, const Tensor& b) { return mul(a, b); }},
        {"sigmoid", [](const Tensor& a, const Tensor&) { return sigmoid(a); }},
        {"tanh", [](const Tensor& a, const Tensor&) { return tanh(a); }},
        {"softmax", [](const Tensor& a, const Tensor&) { return softmax(a); }},
        {"cosine_sim", [](const Tensor& a, const Tensor& b) { return cosine_sim(a, transpose(b)); }},
        {"gumbel_softmax", [](const Tensor& a, const Tensor&) { return gumbel_softmax(a, 0.7, false, nullptr); }},
        {"outer", [](const Tensor& a, const Tensor& b) { return sum(outer(a, b)); }},
    };
    SuiteResult suite;
    suite.name = "ops";
    suite.tolerance = 1e-6;
    for (const auto& [name, op] : cases) {
      const Matrix weights = random_matrix(3, 1, rng);
      MultiScalarFn f = [&](Tape& tape, std::span<const Tensor> in) {
        Tensor y = op(in[0], in[1]);
        return y.size() == 1 ? y : dot(tape.constant(weights.topRows(y.rows())), y);
      };
      GradCheckResult r = finite_diff_check(f, {random_matrix(3, 1, rng), random_matrix(3, 1, rng)}, eps);
      if (suite.worst.empty() || r.max_rel_error > suite.result.max_rel_error) {
        suite.result = r;
        suite.worst = std::string(name) + " input " + std::to_string(r.worst_input) + "[" +
                      std::to_string(r.worst_entry) + "]";
      }
    }
    results.push_back(std::move(suite));
  }

  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    ControllerConfig config;
    config.kind = kind;
    config.layers = 1;
    config.hidden = 3;
    config.input = 2;
    config.read = 2;
    ParameterSet params;
    ControllerParams ids = ControllerParams::create(params, config, rng);
    const Matrix x1 = random_matrix(2, 1, rng), x2 = random_matrix(2, 1, rng);
    const Matrix r = random_matrix(2, 1, rng), proj = random_matrix(3, 1, rng);
    ParamLossFn f = [&](const BoundParameters& p) {
      Tape& tape = p.tape();
      ControllerState s = initial_controller_state(tape, config);
      ControllerOutput o1 = controller_step(tape.constant(x1), tape.constant(r), s, config, p, ids,
                                            Mode::kEval, nullptr);
      ControllerOutput o2 = controller_step(tape.constant(x2), tape.constant(r), o1.state, config, p, ids,
                                            Mode::kEval, nullptr);
      Tensor loss = dot(tape.constant(proj), o2.hidden);
      return loss + sum(o2.heads.key_explicit) + sum(o2.heads.erase);
    };
    SuiteResult suite;
    suite.name = kind == CellKind::kGru ? "controller_gru" : "controller_lstm";
    suite.tolerance = 1e-5;
    suite.result = finite_diff_check(f, params, eps);
    suite.worst = describe(params, suite.result);
    results.push_back(std::move(suite));
  }

  results.push_back(unrolled_cell_suite(seed, eps));
  return results;
}

}  // namespace ebmrnn
