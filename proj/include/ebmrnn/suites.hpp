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

// Finite-difference gradient suites shared by the command line and the
// acceptance harness.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebmrnn/gradcheck.hpp"
#include "ebmrnn/memory_cell.hpp"

namespace ebmrnn {

struct SuiteResult {
  std::string name;
  double tolerance = 0.0;
  GradCheckResult result;
  /// Human-readable location of the worst entry.
  std::string worst;

  bool passed() const { return result.max_rel_error < tolerance; }
};

/// An EBmRNN cell (D=4, N^E=3, N^B=3, K=2, controller hidden 5, input 2) in
/// soft mode with frozen noise, unrolled for 5 steps. The loss is
/// sum_t <p, r_t> + sum_t sum_k g_t^k for a fixed random projection p.
class UnrolledCellProblem {
 public:
  explicit UnrolledCellProblem(std::uint64_t seed, int steps = 5);

  Tensor loss(const BoundParameters& p) const;
  ParameterSet& params() { return params_; }

 private:
  CellSpec spec_;
  ParameterSet params_;
  std::vector<Matrix> inputs_;
  Matrix projection_;
};

/// The unrolled cell compared at step `eps` over every parameter entry.
SuiteResult unrolled_cell_suite(std::uint64_t seed, double eps = 1e-5);

/// Elementwise and addressing ops on random 3-vectors (tolerance 1e-6), one
/// GRU and one LSTM controller step at C=3 (1e-5), and the unrolled cell (1e-4).
std::vector<SuiteResult> run_gradcheck_suites(std::uint64_t seed, double eps = 1e-5);

}  // namespace ebmrnn
