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

#include <functional>
#include <span>
#include <vector>

#include "ebmrnn/parameters.hpp"
#include "ebmrnn/tensor.hpp"

namespace ebmrnn {

/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// Which input and which flat entry produced the maximum.
  std::size_t worst_input = 0;
  Index worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// A scalar-valued function of one or more tensors. It is evaluated on a fresh
/// Tape each time, with the inputs supplied as leaves of that tape.
using MultiScalarFn = std::function<Tensor(Tape&, std::span<const Tensor>)>;
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

/// Compares reverse-mode gradients against central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / 2 eps over every entry of every input.
GradCheckResult finite_diff_check(const MultiScalarFn& f, std::vector<Matrix> inputs,
                                  double eps = 1e-5);

GradCheckResult finite_diff_check(const ScalarFn& f, const Matrix& x, double eps = 1e-5);

/// A scalar loss of a whole parameter set, built on the tape held by the
/// bound parameters.
using ParamLossFn = std::function<Tensor(const BoundParameters&)>;

/// Same comparison over every trainable parameter entry. `worst_input` is the
/// parameter index. `params` is restored before returning.
GradCheckResult finite_diff_check(const ParamLossFn& f, ParameterSet& params, double eps = 1e-5);

}  // namespace ebmrnn
