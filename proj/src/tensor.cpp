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

#include "ebmrnn/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ebmrnn/rng.hpp"

namespace ebmrnn {

namespace {

Tape& common_tape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (!a.defined() || !b.defined()) {
    throw std::invalid_argument(std::string(what) + ": undefined tensor");
  }
  if (&a.tape() != &b.tape()) {
    throw std::invalid_argument(std::string(what) + ": operands live on different tapes");
  }
  return a.tape();
}

[[noreturn]] void shape_mismatch(std::string_view what, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << what << ": shape mismatch " << shape_string(a.value()) << " vs "
     << shape_string(b.value());
  throw DimensionError(os.str());
}

bool is_column(const Tensor& t) { return t.cols() == 1; }

void require_column(std::string_view what, const Tensor& t) {
  if (!is_column(t)) {
    throw DimensionError(std::string(what) + ": expected a column vector, got " +
                         shape_string(t.value()));
  }
}

// out += lhs * rhs. Vector shapes are routed to the outer-product and
// matrix-vector kernels; dynamic matrices would otherwise go through GEMM.
template <typename L, typename R>
void add_product(Matrix& out, const L& lhs, const R& rhs) {
  if (lhs.cols() == 1) {
    out.noalias() += lhs.col(0) * rhs.row(0);
  } else if (rhs.cols() == 1) {
    out.col(0).noalias() += lhs * rhs.col(0);
  } else {
    out.noalias() += lhs * rhs;
  }
}

template <typename L, typename R>
Matrix product(const L& lhs, const R& rhs) {
  Matrix v = Matrix::Zero(lhs.rows(), rhs.cols());
  add_product(v, lhs, rhs);
  return v;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulTN: return "matmul_tn";
    case Op::kAffine: return "affine";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScaleShift: return "scale_shift";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kCosine: return "cosine_sim";
    case Op::kGumbelSoftmax: return "gumbel_softmax";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kTranspose: return "transpose";
    case Op::kSum: return "sum";
    case Op::kLogClamped: return "log_clamped";
    case Op::kOuter: return "outer";
  }
  return "unknown";
}

std::string shape_string(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

// ---------------------------------------------------------------------------
// Tensor

const Matrix& Tensor::value() const { return tape_->node(id_).value; }

bool Tensor::has_grad() const { return tape_->node(id_).grad.size() != 0; }

Matrix Tensor::grad() const {
  const auto& n = tape_->node(id_);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

double Tensor::item() const {
  if (!is_scalar()) throw DimensionError("item: tensor is not 1x1, got " + shape_string(value()));
  return value()(0, 0);
}

bool Tensor::requires_grad() const { return tape_->node(id_).requires_grad; }

Op Tensor::op() const { return tape_->node(id_).op; }

std::vector<Tensor> Tensor::inputs() const {
  const auto& n = tape_->node(id_);
  std::vector<Tensor> out;
  for (int i = 0; i < n.n_in; ++i) out.push_back(Tensor(tape_, n.in[static_cast<std::size_t>(i)]));
  return out;
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::scalar(double v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m), requires_grad);
}

Tensor Tape::push(Op op, std::initializer_list<Tensor> inputs, Matrix value) {
  Node n;
  n.op = op;
  for (const Tensor& t : inputs) {
    n.in[n.n_in++] = t.id_;
    n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(t.id_)].requires_grad;
  }
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Matrix& Tape::grad_slot(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.resize(0, 0);
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || &loss.tape() != this) {
    throw std::invalid_argument("backward: loss does not belong to this tape");
  }
  if (!loss.is_scalar()) {
    throw DimensionError("backward: loss must be a 1x1 scalar, got " + shape_string(loss.value()));
  }
  for (auto& n : nodes_) {
    if (n.op != Op::kLeaf) n.grad.resize(0, 0);
  }
  grad_slot(loss.id())(0, 0) += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::kLeaf || !n.requires_grad || n.grad.size() == 0) continue;
    propagate(id);
  }
}

void Tape::propagate(int id) {
  // grad_slot() never resizes nodes_, so these references stay valid.
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Matrix& g = n.grad;
  auto needs = [&](int k) {
    const int in = n.in[static_cast<std::size_t>(k)];
    return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad;
  };
  auto val = [&](int k) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(n.in[static_cast<std::size_t>(k)])].value;
  };
  auto gin = [&](int k) -> Matrix& { return grad_slot(n.in[static_cast<std::size_t>(k)]); };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul:
      if (needs(0)) add_product(gin(0), g, val(1).transpose());
      if (needs(1)) add_product(gin(1), val(0).transpose(), g);
      break;
    case Op::kMatMulTN:
      if (needs(0)) add_product(gin(0), val(1), g.transpose());
      if (needs(1)) add_product(gin(1), val(0), g);
      break;
    case Op::kAffine:
      if (needs(0)) add_product(gin(0), g, val(1).transpose());
      if (needs(1)) add_product(gin(1), val(0).transpose(), g);
      if (needs(2)) gin(2) += g;
      break;
    case Op::kOuter:
      if (needs(0)) add_product(gin(0), g, val(1));
      if (needs(1)) add_product(gin(1), g.transpose(), val(0));
      break;
    case Op::kAdd:
    case Op::kSub: {
      const double sign = n.op == Op::kSub ? -1.0 : 1.0;
      const bool a_scalar = val(0).size() == 1 && g.size() != 1;
      const bool b_scalar = val(1).size() == 1 && g.size() != 1;
      if (needs(0)) {
        if (a_scalar) gin(0)(0, 0) += g.sum();
        else gin(0) += g;
      }
      if (needs(1)) {
        if (b_scalar) gin(1)(0, 0) += sign * g.sum();
        else gin(1) += sign * g;
      }
      break;
    }
    case Op::kMul: {
      const Matrix& a = val(0);
      const Matrix& b = val(1);
      const bool a_scalar = a.size() == 1 && g.size() != 1;
      const bool b_scalar = b.size() == 1 && g.size() != 1;
      if (needs(0)) {
        if (a_scalar) gin(0)(0, 0) += (g.array() * b.array()).sum();
        else if (b_scalar) gin(0) += b(0, 0) * g;
        else gin(0).array() += g.array() * b.array();
      }
      if (needs(1)) {
        if (b_scalar) gin(1)(0, 0) += (g.array() * a.array()).sum();
        else if (a_scalar) gin(1) += a(0, 0) * g;
        else gin(1).array() += g.array() * a.array();
      }
      break;
    }
    case Op::kScaleShift:
      if (needs(0)) gin(0) += n.a * g;
      break;
    case Op::kSigmoid:
      if (needs(0)) gin(0).array() += g.array() * n.value.array() * (1.0 - n.value.array());
      break;
    case Op::kTanh:
      if (needs(0)) gin(0).array() += g.array() * (1.0 - n.value.array().square());
      break;
    case Op::kRelu:
      if (needs(0)) gin(0).array() += (n.value.array() > 0.0).select(g.array(), 0.0);
      break;
    case Op::kSoftmax: {
      if (!needs(0)) break;
      const double gs = (g.array() * n.value.array()).sum();
      gin(0).array() += n.value.array() * (g.array() - gs);
      break;
    }
    case Op::kGumbelSoftmax: {
      if (!needs(0)) break;
      const Matrix& soft = n.aux;
      const double gs = (g.array() * soft.array()).sum();
      gin(0).array() += soft.array() * (g.array() - gs) / n.a;
      break;
    }
    case Op::kCosine: {
      const Matrix& k = val(0);
      const Matrix& m = val(1);
      const double eps = n.a;
      const double nk = k.norm();
      const bool dk = needs(0);
      const bool dm = needs(1);
      Matrix* gk = dk ? &gin(0) : nullptr;
      Matrix* gm = dm ? &gin(1) : nullptr;
      for (Index i = 0; i < m.rows(); ++i) {
        const double gi = g(i, 0);
        if (gi == 0.0) continue;
        const auto row = m.row(i);
        const double nm = row.norm();
        const double den = nk * nm + eps;
        const double dp = row.dot(k.col(0));
        if (dk) {
          gk->col(0) += gi * (row.transpose() / den);
          if (nk > 0.0) gk->col(0) -= gi * (dp * nm / (den * den * nk)) * k.col(0);
        }
        if (dm) {
          gm->row(i) += gi * (k.col(0).transpose() / den);
          if (nm > 0.0) gm->row(i) -= gi * (dp * nk / (den * den * nm)) * row;
        }
      }
      break;
    }
    case Op::kConcat:
      if (needs(0)) gin(0) += g.topRows(val(0).rows());
      if (needs(1)) gin(1) += g.bottomRows(val(1).rows());
      break;
    case Op::kSlice:
      if (needs(0)) gin(0).middleRows(n.offset, g.rows()) += g;
      break;
    case Op::kTranspose:
      if (needs(0)) gin(0) += g.transpose();
      break;
    case Op::kSum:
      if (needs(0)) gin(0).array() += g(0, 0);
      break;
    case Op::kLogClamped:
      if (needs(0)) {
        const Matrix& x = val(0);
        gin(0).array() += (x.array() > n.a).select(g.array() / x.array(), 0.0);
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// Operators

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "matmul");
  if (a.cols() != b.rows()) shape_mismatch("matmul: inner dimensions disagree", a, b);
  Matrix v = product(a.value(), b.value());
  return tape.push(Op::kMatMul, {a, b}, std::move(v));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "matmul_tn");
  if (a.rows() != b.rows()) shape_mismatch("matmul_tn: row counts disagree", a, b);
  Matrix v = product(a.value().transpose(), b.value());
  return tape.push(Op::kMatMulTN, {a, b}, std::move(v));
}

Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b) {
  Tape& tape = common_tape(w, x, "affine");
  common_tape(w, b, "affine");
  if (w.cols() != x.rows()) shape_mismatch("affine: inner dimensions disagree", w, x);
  if (b.rows() != w.rows() || b.cols() != x.cols()) shape_mismatch("affine: bias shape", w, b);
  Matrix v = b.value();
  add_product(v, w.value(), x.value());
  return tape.push(Op::kAffine, {w, x, b}, std::move(v));
}

Tensor outer(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "outer");
  if (!is_column(a) || !is_column(b)) shape_mismatch("outer: expected column vectors", a, b);
  Matrix v = product(a.value(), b.value().transpose());
  return tape.push(Op::kOuter, {a, b}, std::move(v));
}

namespace {

Tensor binary(Op op, const Tensor& a, const Tensor& b, std::string_view what) {
  Tape& tape = common_tape(a, b, what);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix v;
  const bool same = av.rows() == bv.rows() && av.cols() == bv.cols();
  if (same) {
    switch (op) {
      case Op::kAdd: v = av + bv; break;
      case Op::kSub: v = av - bv; break;
      default: v = av.cwiseProduct(bv); break;
    }
  } else if (av.size() == 1) {
    const double s = av(0, 0);
    switch (op) {
      case Op::kAdd: v = (s + bv.array()).matrix(); break;
      case Op::kSub: v = (s - bv.array()).matrix(); break;
      default: v = s * bv; break;
    }
  } else if (bv.size() == 1) {
    const double s = bv(0, 0);
    switch (op) {
      case Op::kAdd: v = (av.array() + s).matrix(); break;
      case Op::kSub: v = (av.array() - s).matrix(); break;
      default: v = av * s; break;
    }
  } else {
    shape_mismatch(what, a, b);
  }
  return tape.push(op, {a, b}, std::move(v));
}

Tensor unary(Op op, const Tensor& x, Matrix v) { return x.tape().push(op, {x}, std::move(v)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(Op::kAdd, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(Op::kSub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(Op::kMul, a, b, "mul"); }

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case Elementwise::kAdd: return add(a, b);
    case Elementwise::kSub: return sub(a, b);
    case Elementwise::kMul: return mul(a, b);
  }
  throw std::invalid_argument("elementwise: unknown op");
}

Tensor scale_shift(const Tensor& x, double scale, double shift) {
  Matrix v = (scale * x.value().array() + shift).matrix();
  Tensor out = unary(Op::kScaleShift, x, std::move(v));
  out.tape().node(out).a = scale;
  out.tape().node(out).b = shift;
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Matrix v = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return unary(Op::kSigmoid, x, std::move(v));
}

Tensor tanh(const Tensor& x) {
  Matrix v = x.value().array().tanh().matrix();
  return unary(Op::kTanh, x, std::move(v));
}

Tensor relu(const Tensor& x) {
  Matrix v = x.value().cwiseMax(0.0);
  return unary(Op::kRelu, x, std::move(v));
}

Tensor activation(Activation kind, const Tensor& x) {
  switch (kind) {
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kTanh: return tanh(x);
    case Activation::kRelu: return relu(x);
  }
  throw std::invalid_argument("activation: unknown kind");
}

namespace {

Matrix softmax_values(const Matrix& x) {
  const double mx = x.maxCoeff();
  // Scalar exp so that masked entries underflow to exactly 0; the vectorized
  // path clamps and leaves denormals behind.
  Matrix e = (x.array() - mx).unaryExpr([](double v) { return std::exp(v); }).matrix();
  e /= e.sum();
  return e;
}

}  // namespace

Tensor softmax(const Tensor& x) {
  require_column("softmax", x);
  if (x.rows() < 1) throw DimensionError("softmax: empty input");
  return unary(Op::kSoftmax, x, softmax_values(x.value()));
}

Tensor cosine_sim(const Tensor& k, const Tensor& m, double eps) {
  Tape& tape = common_tape(k, m, "cosine_sim");
  require_column("cosine_sim", k);
  if (m.cols() != k.rows()) shape_mismatch("cosine_sim: key width vs memory width", k, m);
  const Matrix& kv = k.value();
  const Matrix& mv = m.value();
  const double nk = kv.norm();
  Matrix v(mv.rows(), 1);
  for (Index i = 0; i < mv.rows(); ++i) {
    v(i, 0) = mv.row(i).dot(kv.col(0)) / (nk * mv.row(i).norm() + eps);
  }
  Tensor out = tape.push(Op::kCosine, {k, m}, std::move(v));
  tape.node(out).a = eps;
  return out;
}

Tensor gumbel_softmax(const Tensor& logits, double tau, bool hard, Rng* noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  require_column("gumbel_softmax", logits);
  Matrix z = logits.value();
  if (noise != nullptr) {
    for (Index i = 0; i < z.rows(); ++i) z(i, 0) -= std::log(-std::log(noise->uniform()));
  }
  z /= tau;
  Matrix soft = softmax_values(z);
  Matrix v = hard ? one_hot(soft.rows(), argmax(soft)) : soft;
  Tensor out = unary(Op::kGumbelSoftmax, logits, std::move(v));
  auto& node = logits.tape().node(out);
  node.aux = std::move(soft);
  node.a = tau;
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "concat");
  if (a.cols() != b.cols()) shape_mismatch("concat: column counts disagree", a, b);
  Matrix v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  return tape.push(Op::kConcat, {a, b}, std::move(v));
}

Tensor slice(const Tensor& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw DimensionError("slice: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         shape_string(x.value()));
  }
  Tensor out = unary(Op::kSlice, x, x.value().middleRows(start, count));
  out.tape().node(out).offset = start;
  return out;
}

Tensor transpose(const Tensor& x) {
  return unary(Op::kTranspose, x, x.value().transpose());
}

Tensor sum(const Tensor& x) {
  Matrix v(1, 1);
  v(0, 0) = x.value().sum();
  return unary(Op::kSum, x, std::move(v));
}

Tensor log_clamped(const Tensor& x, double floor) {
  Matrix v = x.value().cwiseMax(floor).array().log().matrix();
  Tensor out = unary(Op::kLogClamped, x, std::move(v));
  out.tape().node(out).a = floor;
  return out;
}

Matrix one_hot(Index n, Index i) {
  Matrix v = Matrix::Zero(n, 1);
  v(i, 0) = 1.0;
  return v;
}

Index argmax(const Matrix& v) {
  Index best = 0;
  const double* data = v.data();
  for (Index i = 1; i < v.size(); ++i) {
    if (data[i] > data[best]) best = i;
  }
  return best;
}

}  // namespace ebmrnn
