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

// Reverse-mode automatic differentiation over dense binary64 matrices.
//
// Every Tensor lives on a Tape. Operations append a node recording the
// operator and its inputs, so tape order is a topological order of the
// computation graph and backward() is a single reverse sweep. Vectors are
// column matrices (n x 1); scalars are 1 x 1.

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ebmrnn {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Rng;
class Tape;

/// Raised when operand shapes are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kMatMulTN,
  kAffine,
  kAdd,
  kSub,
  kMul,
  kScaleShift,
  kSigmoid,
  kTanh,
  kRelu,
  kSoftmax,
  kCosine,
  kGumbelSoftmax,
  kConcat,
  kSlice,
  kTranspose,
  kSum,
  kLogClamped,
  kOuter,
};

std::string_view op_name(Op op);

std::string shape_string(const Matrix& m);

/// Lightweight handle to a node on a Tape. Copying a Tensor copies the handle,
/// not the data. A Tensor is valid for as long as its Tape is alive and has not
/// been cleared.
class Tensor {
 public:
  Tensor() = default;

  bool defined() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

  const Matrix& value() const;
  /// Accumulated gradient, or zeros of the value's shape if none has reached
  /// this node.
  Matrix grad() const;
  bool has_grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  std::vector<Index> shape() const { return {rows(), cols()}; }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  double item() const;

  bool requires_grad() const;
  Op op() const;
  std::vector<Tensor> inputs() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Matrix value, bool requires_grad = true);
  Tensor constant(Matrix value) { return leaf(std::move(value), false); }
  Tensor scalar(double v, bool requires_grad = false);
  Tensor zeros(Index rows, Index cols = 1) {
    return constant(Matrix::Zero(rows, cols));
  }

  /// Propagates d(loss)/d(node) to every node that requires a gradient.
  /// Intermediate gradients are recomputed on each call; leaf gradients
  /// accumulate until zero_grad().
  void backward(const Tensor& loss);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }
  /// Drops every node. Outstanding Tensors become dangling.
  void clear() { nodes_.clear(); }

  struct Node {
    Op op = Op::kLeaf;
    std::array<int, 3> in{-1, -1, -1};
    std::uint8_t n_in = 0;
    bool requires_grad = false;
    Matrix value;
    Matrix grad;
    Matrix aux;
    double a = 0.0;
    double b = 0.0;
    Index offset = 0;
  };

  Tensor push(Op op, std::initializer_list<Tensor> inputs, Matrix value);
  Node& node(const Tensor& t) { return nodes_[static_cast<std::size_t>(t.id_)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

 private:
  Matrix& grad_slot(int id);
  void propagate(int id);

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operators. All inputs must share one Tape.

Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T b without materializing the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// w x + b.
Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b);
/// a b^T for column vectors a (n x 1) and b (m x 1).
Tensor outer(const Tensor& a, const Tensor& b);

/// Elementwise. Shapes must match, except that either side may be 1 x 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

enum class Elementwise { kAdd, kSub, kMul };
Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b);

/// scale * x + shift.
Tensor scale_shift(const Tensor& x, double scale, double shift);
inline Tensor one_minus(const Tensor& x) { return scale_shift(x, -1.0, 1.0); }

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Subgradient at 0 is 0.
Tensor relu(const Tensor& x);

enum class Activation { kSigmoid, kTanh, kRelu };
Tensor activation(Activation kind, const Tensor& x);

/// Softmax over all entries of a vector, max-subtracted.
Tensor softmax(const Tensor& x);

inline constexpr double kCosineEpsilon = 1e-8;

/// Row-wise cosine similarity of key k (D x 1) against each row of m (N x D):
/// <k, m_i> / (|k| |m_i| + eps). Zero rows or a zero key give 0.
Tensor cosine_sim(const Tensor& k, const Tensor& m, double eps = kCosineEpsilon);

/// Gumbel-Softmax relaxation of a categorical draw over a logit vector.
/// With `noise` null the Gumbel perturbation is frozen at zero. In hard mode
/// the forward value is the one-hot argmax of the relaxed sample and the
/// backward pass uses the relaxed sample's Jacobian (straight-through).
Tensor gumbel_softmax(const Tensor& logits, double tau, bool hard, Rng* noise);

/// Stacks column vectors / matrices vertically.
Tensor concat(const Tensor& a, const Tensor& b);
/// Rows [start, start + count).
Tensor slice(const Tensor& x, Index start, Index count);
Tensor transpose(const Tensor& x);
Tensor sum(const Tensor& x);
inline Tensor dot(const Tensor& a, const Tensor& b) { return matmul_tn(a, b); }
/// log(max(x, floor)); gradient is zero where the clamp is active.
Tensor log_clamped(const Tensor& x, double floor = 1e-12);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& x) { return scale_shift(x, s, 0.0); }

/// One-hot column vector of length n with a 1 at index i.
Matrix one_hot(Index n, Index i);
/// Index of the first maximal entry.
Index argmax(const Matrix& v);

}  // namespace ebmrnn
