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

#include "ebmrnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "json.hpp"

namespace ebmrnn {

LossKind loss_kind_for(TaskMode mode) {
  switch (mode) {
    case TaskMode::kSequenceBinary:
    case TaskMode::kStepBinary: return LossKind::kBinary;
    case TaskMode::kSequenceMultiLabel: return LossKind::kMultilabel;
    case TaskMode::kStepMulticlass:
    case TaskMode::kSequenceMulticlass: return LossKind::kMulticlass;
  }
  return LossKind::kBinary;
}

OutputKind output_kind_for(TaskMode mode) {
  return is_multiclass(mode) ? OutputKind::kSoftmax : OutputKind::kSigmoid;
}

Tensor loss(LossKind kind, const Tensor& prediction, const Matrix& target) {
  if (prediction.cols() != 1 || target.size() != prediction.rows()) {
    throw DimensionError("loss: prediction " + shape_string(prediction.value()) + " vs target " +
                         shape_string(target));
  }
  Tape& tape = prediction.tape();
  const Matrix y = Eigen::Map<const Matrix>(target.data(), target.size(), 1);
  if (kind == LossKind::kMulticlass) {
    return scale_shift(dot(tape.constant(y), log_clamped(prediction, kLogFloor)), -1.0, 0.0);
  }
  const Matrix not_y = Matrix::Ones(y.rows(), 1) - y;
  Tensor ll = dot(tape.constant(y), log_clamped(prediction, kLogFloor)) +
              dot(tape.constant(not_y), log_clamped(one_minus(prediction), kLogFloor));
  return scale_shift(ll, -1.0 / static_cast<double>(y.rows()), 0.0);
}

Tensor sequence_loss(const SequenceRun& run, const SequenceSample& sample, TaskMode mode) {
  const LossKind kind = loss_kind_for(mode);
  if (run.outputs.empty()) throw std::invalid_argument("sequence_loss: empty run");
  if (!is_step_mode(mode)) return loss(kind, run.outputs.back(), sample.labels.row(0));
  Tape& tape = run.outputs.front().tape();
  Tensor total = tape.scalar(0.0);
  int counted = 0;
  for (std::size_t t = 0; t < run.outputs.size(); ++t) {
    const auto ti = static_cast<Index>(t);
    if (!sample.counts(ti)) continue;
    total = total + loss(kind, run.outputs[t], sample.labels.row(ti));
    ++counted;
  }
  if (counted == 0) return total;
  return scale_shift(total, 1.0 / counted, 0.0);
}

// ---------------------------------------------------------------------------
// Optimizer

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

OptimState make_optim_state(const ParameterSet& params) { return {zero_gradients(params)}; }

void sgd_momentum_step(ParameterSet& params, const Gradients& grads, OptimState& state, double lr,
                       double momentum) {
  if (grads.size() != params.size() || state.velocity.size() != params.size()) {
    throw DimensionError("sgd_momentum_step: " + std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.velocity.size()) + " velocities for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.trainable(i)) continue;
    Matrix& v = state.velocity[i];
    if (grads[i].rows() != v.rows() || grads[i].cols() != v.cols()) {
      throw DimensionError("sgd_momentum_step: gradient for " + params.name(i) + " is " +
                           shape_string(grads[i]) + ", parameter is " + shape_string(v));
    }
    v = momentum * v + grads[i];
    params.value(i) -= lr * v;
  }
}

// ---------------------------------------------------------------------------
// Metrics

double auc_roc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc_roc: " + std::to_string(scores.size()) + " scores vs " +
                                std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) so tied scores split their pairs evenly.
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0.0) {
        positive_rank_sum += rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw UndefinedMetric("auc_roc: needs at least one positive and one negative label");
  }
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

MultiLabelAuc auc_macro_micro(const Matrix& scores, const Matrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw DimensionError("auc_macro_micro: scores " + shape_string(scores) + " vs labels " +
                         shape_string(labels));
  }
  MultiLabelAuc out;
  double sum = 0.0;
  int used = 0;
  for (Index l = 0; l < scores.cols(); ++l) {
    std::vector<double> s(static_cast<std::size_t>(scores.rows()));
    std::vector<double> y(s.size());
    for (Index i = 0; i < scores.rows(); ++i) {
      s[static_cast<std::size_t>(i)] = scores(i, l);
      y[static_cast<std::size_t>(i)] = labels(i, l);
    }
    try {
      const double a = auc_roc(s, y);
      out.per_label.push_back(a);
      sum += a;
      ++used;
    } catch (const UndefinedMetric&) {
      out.per_label.push_back(std::numeric_limits<double>::quiet_NaN());
      out.skipped.push_back(static_cast<int>(l));
    }
  }
  if (used == 0) throw UndefinedMetric("auc_macro_micro: every label column has a single class");
  out.macro = sum / used;
  std::vector<double> s(static_cast<std::size_t>(scores.size()));
  std::vector<double> y(s.size());
  std::size_t k = 0;
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index l = 0; l < scores.cols(); ++l, ++k) {
      s[k] = scores(i, l);
      y[k] = labels(i, l);
    }
  }
  out.micro = auc_roc(s, y);
  return out;
}

namespace {

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["loss"] = r.loss;
  j["accuracy"] = r.accuracy;
  j["sequences"] = r.sequences;
  if (r.auc) j["auc"] = *r.auc;
  if (r.multilabel) {
    j["auc_macro"] = r.multilabel->macro;
    j["auc_micro"] = r.multilabel->micro;
    nlohmann::json per = nlohmann::json::array();
    for (double a : r.multilabel->per_label) {
      if (std::isnan(a)) per.push_back(nullptr);
      else per.push_back(a);
    }
    j["auc_per_label"] = per;
    j["skipped_labels"] = r.multilabel->skipped;
  }
  return j;
}

// Runs `work(i)` for i in [0, n) over up to `threads` workers.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& work) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto loop = [&]() {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        work(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct SampleEval {
  double loss = 0.0;
  int correct = 0;
  int total = 0;
  std::vector<double> scores;  // binary modes, counted steps
  std::vector<double> labels;
  Matrix final_scores;  // multi-label
};

SampleEval evaluate_sample(const Model& model, const SequenceSample& s, TaskMode mode) {
  Tape tape;
  BoundParameters p(tape, model.params());
  SequenceRun run = model.forward(p, s.inputs, Mode::kEval, nullptr, nullptr);
  SampleEval out;
  out.loss = sequence_loss(run, s, mode).item();
  auto score_step = [&](Index t, Index label_row) {
    const Matrix& y = run.outputs[static_cast<std::size_t>(t)].value();
    if (is_multiclass(mode)) {
      out.correct += argmax(y) == argmax(s.labels.row(label_row).transpose()) ? 1 : 0;
      out.total += 1;
      return;
    }
    for (Index l = 0; l < y.rows(); ++l) {
      const double label = s.labels(label_row, l);
      out.correct += (y(l, 0) >= 0.5) == (label != 0.0) ? 1 : 0;
      out.total += 1;
    }
    if (mode == TaskMode::kSequenceMultiLabel) {
      out.final_scores = y.transpose();
    } else {
      out.scores.push_back(y(0, 0));
      out.labels.push_back(s.labels(label_row, 0));
    }
  };
  if (is_step_mode(mode)) {
    for (Index t = 0; t < s.length(); ++t) {
      if (s.counts(t)) score_step(t, t);
    }
  } else {
    score_step(s.length() - 1, 0);
  }
  return out;
}

}  // namespace

std::string eval_report_json(const EvalReport& report) { return report_to_json(report).dump(); }

EvalReport evaluate(const Model& model, const Dataset& data, int threads) {
  std::vector<SampleEval> parts(data.samples.size());
  parallel_for(parts.size(), threads, [&](std::size_t i) {
    parts[i] = evaluate_sample(model, data.samples[i], data.mode);
  });
  EvalReport r;
  r.sequences = parts.size();
  if (parts.empty()) return r;
  int correct = 0;
  int total = 0;
  std::vector<double> scores;
  std::vector<double> labels;
  Matrix ml_scores(static_cast<Index>(parts.size()), data.label_size);
  Matrix ml_labels(ml_scores.rows(), ml_scores.cols());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    r.loss += parts[i].loss;
    correct += parts[i].correct;
    total += parts[i].total;
    scores.insert(scores.end(), parts[i].scores.begin(), parts[i].scores.end());
    labels.insert(labels.end(), parts[i].labels.begin(), parts[i].labels.end());
    if (data.mode == TaskMode::kSequenceMultiLabel) {
      ml_scores.row(static_cast<Index>(i)) = parts[i].final_scores;
      ml_labels.row(static_cast<Index>(i)) = data.samples[i].labels.row(0);
    }
  }
  r.loss /= static_cast<double>(parts.size());
  r.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
  try {
    if (data.mode == TaskMode::kSequenceBinary || data.mode == TaskMode::kStepBinary) {
      r.auc = auc_roc(scores, labels);
    } else if (data.mode == TaskMode::kSequenceMultiLabel) {
      r.multilabel = auc_macro_micro(ml_scores, ml_labels);
    }
  } catch (const UndefinedMetric&) {
    // Left unset: a split with one class has no AUC.
  }
  return r;
}

// ---------------------------------------------------------------------------
// Training loop

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train: momentum must lie in [0, 1)");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("train: clip_norm must be positive");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("train: eval_fraction must lie in [0, 1)");
  }
  if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
  if (!(target_accuracy >= 0.0 && target_accuracy <= 1.0)) {
    throw std::invalid_argument("train: target_accuracy must lie in [0, 1]");
  }
}

std::string epoch_record_json(const EpochRecord& record) {
  nlohmann::json j;
  j["epoch"] = record.epoch;
  j["loss"] = record.train_loss;
  j["max_grad_norm"] = record.max_grad_norm;
  j["clipped_batches"] = record.clipped_batches;
  if (record.eval) j["eval"] = report_to_json(*record.eval);
  return j.dump();
}

namespace {

struct SampleGrad {
  double loss = 0.0;
  Gradients grads;
};

SampleGrad sample_gradient(const Model& model, const SequenceSample& s, TaskMode mode, std::uint64_t seed) {
  Rng noise(seed);
  Rng dropout = noise.split();
  Tape tape;
  BoundParameters p(tape, model.params());
  SequenceRun run = model.forward(p, s.inputs, Mode::kTrain, &noise, &dropout);
  Tensor l = sequence_loss(run, s, mode);
  SampleGrad out;
  out.loss = l.item();
  if (std::isfinite(out.loss)) {
    tape.backward(l);
    out.grads = p.gradients();
  }
  return out;
}

}  // namespace

TrainResult train(Model& model, const Dataset& train_data, const Dataset* eval_data,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train_data.samples.empty() && config.epochs > 0) {
    throw std::invalid_argument("train: empty training set");
  }
  TrainResult result;
  OptimState optim = make_optim_state(model.params());
  Rng order_rng(mix_seed(config.seed, 0x5eed, 0));
  const std::size_t n = train_data.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.uniform_int(i)]);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    int batch = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size), ++batch) {
      const std::size_t count = std::min(n - start, static_cast<std::size_t>(config.batch_size));
      std::vector<SampleGrad> parts(count);
      parallel_for(count, config.threads, [&](std::size_t i) {
        const std::size_t idx = order[start + i];
        parts[i] = sample_gradient(model, train_data.samples[idx], train_data.mode,
                                   mix_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1, idx));
      });
      Gradients total = zero_gradients(model.params());
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(parts[i].loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(batch) + " (sequence " +
                                 train_data.samples[order[start + i]].id + ")",
                             epoch, batch);
        }
        batch_loss += parts[i].loss;
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += parts[i].grads[k];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& g : total) g *= inv;
      const double norm = global_norm(total);
      if (!std::isfinite(norm)) {
        throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch) + " batch " +
                               std::to_string(batch),
                           epoch, batch);
      }
      rec.max_grad_norm = std::max(rec.max_grad_norm, norm);
      if (config.clip) {
        clip_global_norm(total, config.clip_norm);
        if (norm > config.clip_norm) ++rec.clipped_batches;
      }
      sgd_momentum_step(model.params(), total, optim, config.learning_rate, config.momentum);
      loss_sum += batch_loss;
    }
    rec.train_loss = n > 0 ? loss_sum / static_cast<double>(n) : 0.0;
    if (eval_data != nullptr && !eval_data->samples.empty()) {
      rec.eval = evaluate(model, *eval_data, config.threads);
    }
    if (hooks.metrics != nullptr) *hooks.metrics << epoch_record_json(rec) << '\n' << std::flush;
    if (hooks.on_epoch) hooks.on_epoch(rec);
    result.history.push_back(rec);
    if (config.target_accuracy > 0.0 && rec.eval && rec.eval->accuracy >= config.target_accuracy) {
      result.reached_target = true;
      break;
    }
  }
  return result;
}

Split split_dataset(const Dataset& data, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: eval_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x5b117, 0));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
  const auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(order.size())));
  Split s;
  s.train.mode = s.eval.mode = data.mode;
  s.train.input_size = s.eval.input_size = data.input_size;
  s.train.label_size = s.eval.label_size = data.label_size;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_eval ? s.eval : s.train).samples.push_back(data.samples[order[i]]);
  }
  return s;
}

ModelConfig model_config_for(ModelConfig base, const Dataset& data) {
  base.controller.input = data.input_size;
  base.output_size = data.label_size;
  base.output = output_kind_for(data.mode);
  return base.normalized();
}

}  // namespace ebmrnn
