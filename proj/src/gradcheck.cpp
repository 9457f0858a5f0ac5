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

#include "ebmrnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ebmrnn {

double relative_error(double analytic, double numeric) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / den;
}

namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Matrix>& inputs) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m, false));
  return f(tape, leaves).item();
}

}  // namespace

GradCheckResult finite_diff_check(const MultiScalarFn& f, std::vector<Matrix> inputs,
                                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be positive");

  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(inputs.size());
    for (const auto& m : inputs) leaves.push_back(tape.leaf(m, true));
    Tensor loss = f(tape, leaves);
    tape.backward(loss);
    for (const auto& leaf : leaves) analytic.push_back(leaf.grad());
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Index i = 0; i < inputs[k].size(); ++i) {
      double& entry = inputs[k].data()[i];
      const double saved = entry;
      entry = saved + eps;
      const double plus = evaluate(f, inputs);
      entry = saved - eps;
      const double minus = evaluate(f, inputs);
      entry = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double err = relative_error(a, numeric);
      ++result.entries_checked;
      if (result.entries_checked == 1 || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = k;
        result.worst_entry = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult finite_diff_check(const ScalarFn& f, const Matrix& x, double eps) {
  MultiScalarFn wrapped = [&f](Tape& tape, std::span<const Tensor> xs) { return f(tape, xs[0]); };
  return finite_diff_check(wrapped, std::vector<Matrix>{x}, eps);
}

GradCheckResult finite_diff_check(const ParamLossFn& f, ParameterSet& params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  auto loss_at = [&]() {
    Tape tape;
    BoundParameters p(tape, params);
    return f(p).item();
  };

  Gradients analytic;
  {
    Tape tape;
    BoundParameters p(tape, params);
    tape.backward(f(p));
    analytic = p.gradients();
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params.trainable(k)) continue;
    Matrix& value = params.value(k);
    for (Index i = 0; i < value.size(); ++i) {
      double& entry = value.data()[i];
      const double saved = entry;
      entry = saved + eps;
      const double plus = loss_at();
      entry = saved - eps;
      const double minus = loss_at();
      entry = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double err = relative_error(a, numeric);
      ++result.entries_checked;
      if (result.entries_checked == 1 || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = k;
        result.worst_entry = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace ebmrnn
