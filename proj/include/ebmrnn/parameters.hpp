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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebmrnn/rng.hpp"
#include "ebmrnn/tensor.hpp"

namespace ebmrnn {

/// Handle to one entry of a ParameterSet.
struct ParamId {
  std::size_t index = 0;
};

/// Named, ordered parameter values. Order is registration order and is the
/// order used for checkpoints and gradient vectors.
class ParameterSet {
 public:
  ParamId add(std::string name, Matrix value, bool trainable = true);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  bool trainable(std::size_t i) const { return trainable_[i]; }

  Matrix& value(ParamId id) { return values_[id.index]; }
  const Matrix& value(ParamId id) const { return values_[id.index]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }

  std::optional<ParamId> find(std::string_view name) const;
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<bool> trainable_;
};

/// One gradient matrix per parameter, in ParameterSet order.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParameterSet& params);

/// A ParameterSet materialized as leaves on a tape for one forward pass.
/// Non-trainable entries become constants.
class BoundParameters {
 public:
  BoundParameters(Tape& tape, const ParameterSet& params);

  const Tensor& operator[](ParamId id) const { return leaves_[id.index]; }
  Tape& tape() const { return *tape_; }

  /// Gradients accumulated on the leaves; zeros where nothing flowed.
  Gradients gradients() const;
  void accumulate_into(Gradients& out) const;

 private:
  Tape* tape_;
  std::vector<Tensor> leaves_;
};

/// Uniform(-scale, scale) entries.
Matrix uniform_matrix(Index rows, Index cols, double scale, Rng& rng);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix fan_in_init(Index rows, Index cols, Rng& rng);

}  // namespace ebmrnn
