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

#include "ebmrnn/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace ebmrnn {

ParamId ParameterSet::add(std::string name, Matrix value, bool trainable) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  trainable_.push_back(trainable);
  return ParamId{values_.size() - 1};
}

std::optional<ParamId> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return ParamId{i};
  }
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    g.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
  }
  return g;
}

BoundParameters::BoundParameters(Tape& tape, const ParameterSet& params) : tape_(&tape) {
  leaves_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    leaves_.push_back(tape.leaf(params.value(i), params.trainable(i)));
  }
}

Gradients BoundParameters::gradients() const {
  Gradients g;
  g.reserve(leaves_.size());
  for (const auto& leaf : leaves_) g.push_back(leaf.grad());
  return g;
}

void BoundParameters::accumulate_into(Gradients& out) const {
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    if (leaves_[i].has_grad()) out[i] += tape_->node(leaves_[i].id()).grad;
  }
}

Matrix uniform_matrix(Index rows, Index cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

Matrix fan_in_init(Index rows, Index cols, Rng& rng) {
  return uniform_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

}  // namespace ebmrnn
