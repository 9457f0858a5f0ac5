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

#include "ebmrnn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ebmrnn/rng.hpp"

namespace ebmrnn {

std::string_view task_mode_name(TaskMode mode) {
  switch (mode) {
    case TaskMode::kSequenceBinary: return "sequence_binary";
    case TaskMode::kStepBinary: return "step_binary";
    case TaskMode::kSequenceMultiLabel: return "sequence_multilabel";
    case TaskMode::kStepMulticlass: return "step_multiclass";
    case TaskMode::kSequenceMulticlass: return "sequence_multiclass";
  }
  return "sequence_binary";
}

TaskMode parse_task_mode(std::string_view name) {
  for (TaskMode m : {TaskMode::kSequenceBinary, TaskMode::kStepBinary, TaskMode::kSequenceMultiLabel,
                     TaskMode::kStepMulticlass, TaskMode::kSequenceMulticlass}) {
    if (task_mode_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown task mode '" + std::string(name) + "'");
}

bool is_step_mode(TaskMode mode) {
  return mode == TaskMode::kStepBinary || mode == TaskMode::kStepMulticlass;
}

bool is_multiclass(TaskMode mode) {
  return mode == TaskMode::kStepMulticlass || mode == TaskMode::kSequenceMulticlass;
}

void Dataset::validate() const {
  if (input_size < 1) throw DataError("dataset: input size must be >= 1");
  if (label_size < 1) throw DataError("dataset: label size must be >= 1");
  if (mode == TaskMode::kSequenceBinary || mode == TaskMode::kStepBinary) {
    if (label_size != 1) throw DataError("dataset: binary modes take exactly one label column");
  }
  for (const auto& s : samples) {
    const std::string where = "sequence " + s.id;
    if (s.inputs.rows() < 1) throw DataError(where + ": empty sequence");
    if (s.inputs.cols() != input_size) {
      throw DataError(where + ": " + std::to_string(s.inputs.cols()) + " features, expected " +
                      std::to_string(input_size));
    }
    if (!s.inputs.allFinite()) throw DataError(where + ": non-finite input");
    const Index rows = is_step_mode(mode) ? s.inputs.rows() : 1;
    if (s.labels.rows() != rows || s.labels.cols() != label_size) {
      throw DataError(where + ": labels " + shape_string(s.labels) + ", expected [" +
                      std::to_string(rows) + "x" + std::to_string(label_size) + "]");
    }
    for (Index i = 0; i < s.labels.size(); ++i) {
      const double v = s.labels.data()[i];
      if (v != 0.0 && v != 1.0) throw DataError(where + ": non-binary label " + std::to_string(v));
    }
    if (s.mask.size() != 0 && (s.mask.rows() != s.inputs.rows() || s.mask.cols() != 1)) {
      throw DataError(where + ": mask " + shape_string(s.mask) + " does not match length");
    }
    if (is_multiclass(mode)) {
      for (Index t = 0; t < s.labels.rows(); ++t) {
        const bool counted = !is_step_mode(mode) || s.counts(t);
        if (counted && s.labels.row(t).sum() != 1.0) {
          throw DataError(where + ": step " + std::to_string(t) + " label row is not one-hot");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Generators

namespace {

int draw(Rng& rng, int n) { return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n))); }

// Zero-padded so that lexicographic order, which load_csv uses, is creation
// order.
std::string sample_id(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", i);
  return std::string(prefix) + buf;
}

}  // namespace

Dataset gen_copy(std::uint64_t seed, int count, int length, int alphabet) {
  if (length < 1) throw std::invalid_argument("gen_copy: length must be >= 1");
  if (alphabet < 2) throw std::invalid_argument("gen_copy: alphabet must be >= 2");
  if (count < 0) throw std::invalid_argument("gen_copy: count must be >= 0");
  Rng rng(seed);
  Dataset d;
  d.mode = TaskMode::kStepMulticlass;
  d.input_size = alphabet + 1;
  d.label_size = alphabet;
  const Index steps = 2 * length + 1;
  for (int i = 0; i < count; ++i) {
    SequenceSample s;
    s.id = sample_id("copy", i);
    s.inputs = Matrix::Zero(steps, alphabet + 1);
    s.labels = Matrix::Zero(steps, alphabet);
    s.mask = Matrix::Zero(steps, 1);
    for (int t = 0; t < length; ++t) {
      const int symbol = draw(rng, alphabet);
      s.inputs(t, symbol) = 1.0;
      s.labels(length + 1 + t, symbol) = 1.0;
      s.mask(length + 1 + t, 0) = 1.0;
    }
    s.inputs(length, alphabet) = 1.0;
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset gen_assoc_recall(std::uint64_t seed, int count, int pairs, int alphabet) {
  if (pairs < 1) throw std::invalid_argument("gen_assoc_recall: pairs must be >= 1");
  if (alphabet < 2) throw std::invalid_argument("gen_assoc_recall: alphabet must be >= 2");
  if (pairs > alphabet) {
    throw std::invalid_argument("gen_assoc_recall: pairs must not exceed the alphabet (distinct keys)");
  }
  Rng rng(seed);
  Dataset d;
  d.mode = TaskMode::kSequenceMulticlass;
  d.input_size = 2 * alphabet + 1;
  d.label_size = alphabet;
  for (int i = 0; i < count; ++i) {
    SequenceSample s;
    s.id = sample_id("recall", i);
    s.inputs = Matrix::Zero(pairs + 1, 2 * alphabet + 1);
    s.labels = Matrix::Zero(1, alphabet);
    std::vector<int> keys(static_cast<std::size_t>(alphabet));
    for (int k = 0; k < alphabet; ++k) keys[static_cast<std::size_t>(k)] = k;
    // Partial Fisher-Yates: the first `pairs` entries are distinct keys.
    for (int k = 0; k < pairs; ++k) {
      const int j = k + draw(rng, alphabet - k);
      std::swap(keys[static_cast<std::size_t>(k)], keys[static_cast<std::size_t>(j)]);
    }
    std::vector<int> values(static_cast<std::size_t>(pairs));
    for (int p = 0; p < pairs; ++p) {
      values[static_cast<std::size_t>(p)] = draw(rng, alphabet);
      s.inputs(p, keys[static_cast<std::size_t>(p)]) = 1.0;
      s.inputs(p, alphabet + values[static_cast<std::size_t>(p)]) = 1.0;
    }
    const int q = draw(rng, pairs);
    s.inputs(pairs, keys[static_cast<std::size_t>(q)]) = 1.0;
    s.inputs(pairs, 2 * alphabet) = 1.0;
    s.labels(0, values[static_cast<std::size_t>(q)]) = 1.0;
    d.samples.push_back(std::move(s));
  }
  return d;
}

namespace {

int motif_channels(const EhrParams& p) {
  switch (p.mode) {
    case TaskMode::kSequenceBinary: return 2;
    case TaskMode::kStepBinary: return 1;
    case TaskMode::kSequenceMultiLabel: return p.labels;
    default: break;
  }
  throw std::invalid_argument("gen_ehr_like: mode " + std::string(task_mode_name(p.mode)) +
                              " is not an EHR-analog mode");
}

void validate_ehr(const EhrParams& p) {
  motif_channels(p);
  if (p.length < 8) throw std::invalid_argument("gen_ehr_like: length must be >= 8");
  if (p.noise_channels < 0) throw std::invalid_argument("gen_ehr_like: noise_channels must be >= 0");
  if (!(p.background >= 0.0 && p.background < 1.0)) {
    throw std::invalid_argument("gen_ehr_like: background must lie in [0, 1)");
  }
  if (!(p.early_fraction > 0.0 && p.early_fraction <= 1.0)) {
    throw std::invalid_argument("gen_ehr_like: early_fraction must lie in (0, 1]");
  }
  if (p.window < 0) throw std::invalid_argument("gen_ehr_like: window must be >= 0");
  if (!(p.positive_rate > 0.0 && p.positive_rate < 1.0)) {
    throw std::invalid_argument("gen_ehr_like: positive_rate must lie in (0, 1)");
  }
  if (p.labels < 1) throw std::invalid_argument("gen_ehr_like: labels must be >= 1");
  if (!(p.presence >= 0.0 && p.presence <= 1.0)) {
    throw std::invalid_argument("gen_ehr_like: presence must lie in [0, 1]");
  }
}

// Motif entries are 1 and background stays below 1, so any threshold in
// between recovers the planted events exactly.
double motif_threshold(const EhrParams& p) { return 0.5 * (1.0 + p.background); }

}  // namespace

int ehr_input_size(const EhrParams& params) {
  validate_ehr(params);
  return motif_channels(params) + params.noise_channels;
}

double expected_positive_rate(double trigger_probability, int length, int window) {
  double total = 0.0;
  for (int s = 0; s < length; ++s) {
    const int span = std::min(s, window) + 1;
    total += 1.0 - std::pow(1.0 - trigger_probability, span);
  }
  return total / length;
}

double step_trigger_probability(const EhrParams& params) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (expected_positive_rate(mid, params.length, params.window) < params.positive_rate) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

Dataset gen_ehr_like(std::uint64_t seed, int count, const EhrParams& params) {
  validate_ehr(params);
  Rng rng(seed);
  const int motifs = motif_channels(params);
  const int u = motifs + params.noise_channels;
  const Index steps = params.length;
  const double trigger_p = params.mode == TaskMode::kStepBinary ? step_trigger_probability(params) : 0.0;

  Dataset d;
  d.mode = params.mode;
  d.input_size = u;
  d.label_size = params.mode == TaskMode::kSequenceMultiLabel ? params.labels : 1;
  for (int i = 0; i < count; ++i) {
    SequenceSample s;
    s.id = sample_id("ehr", i);
    s.inputs.resize(steps, u);
    for (Index k = 0; k < s.inputs.size(); ++k) s.inputs.data()[k] = params.background * rng.uniform();
    // Motif channels carry no background, so a planted event is the only
    // value at or above the threshold.
    s.inputs.leftCols(motifs).setZero();
    switch (params.mode) {
      case TaskMode::kSequenceBinary: {
        const int latest = std::max(1, static_cast<int>(std::floor(params.early_fraction * steps)));
        const int t = draw(rng, latest);
        const int kind = draw(rng, 2);
        s.inputs(t, kind) = 1.0;
        s.labels = Matrix::Constant(1, 1, static_cast<double>(kind));
        break;
      }
      case TaskMode::kStepBinary: {
        s.labels = Matrix::Zero(steps, 1);
        for (Index t = 0; t < steps; ++t) {
          if (rng.uniform() < trigger_p) {
            s.inputs(t, 0) = 1.0;
            for (Index k = t; k <= std::min<Index>(steps - 1, t + params.window); ++k) s.labels(k, 0) = 1.0;
          }
        }
        break;
      }
      case TaskMode::kSequenceMultiLabel: {
        s.labels = Matrix::Zero(1, params.labels);
        for (int l = 0; l < params.labels; ++l) {
          if (rng.uniform() < params.presence) {
            s.inputs(draw(rng, static_cast<int>(steps)), l) = 1.0;
            s.labels(0, l) = 1.0;
          }
        }
        break;
      }
      default: break;
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

Matrix ehr_oracle_scores(const SequenceSample& sample, const EhrParams& params) {
  validate_ehr(params);
  const double cut = motif_threshold(params);
  const Matrix& x = sample.inputs;
  switch (params.mode) {
    case TaskMode::kSequenceBinary: {
      for (Index t = 0; t < x.rows(); ++t) {
        if (x(t, 0) >= cut) return Matrix::Zero(1, 1);
        if (x(t, 1) >= cut) return Matrix::Ones(1, 1);
      }
      return Matrix::Zero(1, 1);
    }
    case TaskMode::kStepBinary: {
      Matrix y = Matrix::Zero(x.rows(), 1);
      Index last = -1;
      bool seen = false;
      for (Index t = 0; t < x.rows(); ++t) {
        if (x(t, 0) >= cut) {
          last = t;
          seen = true;
        }
        if (seen && t - last <= params.window) y(t, 0) = 1.0;
      }
      return y;
    }
    case TaskMode::kSequenceMultiLabel: {
      Matrix y = Matrix::Zero(1, params.labels);
      for (int l = 0; l < params.labels; ++l) {
        if (x.col(l).maxCoeff() >= cut) y(0, l) = 1.0;
      }
      return y;
    }
    default: break;
  }
  return Matrix();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    out.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse '" + s + "' as a number");
  }
}

struct Row {
  long t;
  std::vector<double> x;
  std::vector<double> y;
  double mask;
  std::size_t line;
};

struct ParsedCsv {
  int inputs = 0;
  int labels = 0;
  bool has_mask = false;
  std::map<std::string, std::vector<Row>> rows;
};

ParsedCsv parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: " + path + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "sequence_id" || header[1] != "t") {
    throw DataError("csv: header must start with sequence_id,t");
  }
  ParsedCsv out;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "x" + std::to_string(out.inputs)) {
    ++out.inputs;
    ++col;
  }
  while (col < header.size() && header[col] == "y" + std::to_string(out.labels)) {
    ++out.labels;
    ++col;
  }
  if (col < header.size() && header[col] == "mask") {
    out.has_mask = true;
    ++col;
  }
  if (col != header.size()) throw DataError("csv: unexpected header column '" + header[col] + "'");
  if (out.inputs == 0) throw DataError("csv: missing feature columns x0..");
  if (out.labels == 0) throw DataError("csv: missing label columns y0..");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = "csv line " + std::to_string(lineno);
    if (f.size() != header.size()) {
      throw DataError(where + ": " + std::to_string(f.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Row r;
    r.line = lineno;
    const double t = parse_number(f[1], where);
    if (t != std::floor(t) || t < 0) throw DataError(where + ": step index '" + f[1] + "' is not a non-negative integer");
    r.t = static_cast<long>(t);
    for (int i = 0; i < out.inputs; ++i) r.x.push_back(parse_number(f[2 + static_cast<std::size_t>(i)], where));
    for (int i = 0; i < out.labels; ++i) {
      const double v = parse_number(f[2 + static_cast<std::size_t>(out.inputs + i)], where);
      if (v != 0.0 && v != 1.0) {
        throw DataError("sequence " + f[0] + " step " + f[1] + ": non-binary label " + f[2 + static_cast<std::size_t>(out.inputs + i)]);
      }
      r.y.push_back(v);
    }
    r.mask = out.has_mask ? parse_number(f.back(), where) : 1.0;
    if (r.mask != 0.0 && r.mask != 1.0) throw DataError("sequence " + f[0] + " step " + f[1] + ": mask must be 0 or 1");
    out.rows[f[0]].push_back(std::move(r));
  }
  for (auto& [id, rows] : out.rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].t != static_cast<long>(i)) {
        if (rows[i].t < static_cast<long>(i)) {
          throw DataError("sequence " + id + ": duplicate step " + std::to_string(rows[i].t));
        }
        throw DataError("sequence " + id + ": missing step " + std::to_string(i));
      }
    }
  }
  return out;
}

bool labels_vary(const ParsedCsv& csv) {
  for (const auto& [id, rows] : csv.rows) {
    for (const Row& r : rows) {
      if (r.y != rows.front().y) return true;
    }
  }
  return false;
}

bool counted_rows_one_hot(const ParsedCsv& csv) {
  for (const auto& [id, rows] : csv.rows) {
    for (const Row& r : rows) {
      if (r.mask == 0.0) continue;
      double total = 0.0;
      for (double v : r.y) total += v;
      if (total != 1.0) return false;
    }
  }
  return true;
}

Dataset build_dataset(const ParsedCsv& csv, TaskMode mode) {
  Dataset d;
  d.mode = mode;
  d.input_size = csv.inputs;
  d.label_size = csv.labels;
  const bool step = is_step_mode(mode);
  for (const auto& [id, rows] : csv.rows) {
    SequenceSample s;
    s.id = id;
    const auto n = static_cast<Index>(rows.size());
    s.inputs.resize(n, csv.inputs);
    s.labels.resize(step ? n : 1, csv.labels);
    if (csv.has_mask) s.mask.resize(n, 1);
    for (Index t = 0; t < n; ++t) {
      const Row& r = rows[static_cast<std::size_t>(t)];
      for (int i = 0; i < csv.inputs; ++i) s.inputs(t, i) = r.x[static_cast<std::size_t>(i)];
      if (csv.has_mask) s.mask(t, 0) = r.mask;
      if (step) {
        for (int i = 0; i < csv.labels; ++i) s.labels(t, i) = r.y[static_cast<std::size_t>(i)];
      } else if (r.y != rows.front().y) {
        throw DataError("sequence " + id + " step " + std::to_string(t) +
                        ": sequence-level labels differ from step 0");
      }
    }
    if (!step) {
      for (int i = 0; i < csv.labels; ++i) s.labels(0, i) = rows.front().y[static_cast<std::size_t>(i)];
    }
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

}  // namespace

Dataset load_csv(const std::string& path, TaskMode mode) { return build_dataset(parse_csv(path), mode); }

Dataset load_csv(const std::string& path) {
  const ParsedCsv csv = parse_csv(path);
  TaskMode mode;
  if (csv.has_mask || labels_vary(csv)) {
    mode = csv.labels > 1 && counted_rows_one_hot(csv) ? TaskMode::kStepMulticlass : TaskMode::kStepBinary;
  } else {
    mode = csv.labels > 1 ? TaskMode::kSequenceMultiLabel : TaskMode::kSequenceBinary;
  }
  return build_dataset(csv, mode);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("csv: cannot write " + path);
  const bool step = is_step_mode(data.mode);
  bool has_mask = false;
  for (const auto& s : data.samples) has_mask = has_mask || s.mask.size() != 0;
  out << "sequence_id,t";
  for (int i = 0; i < data.input_size; ++i) out << ",x" << i;
  for (int i = 0; i < data.label_size; ++i) out << ",y" << i;
  if (has_mask) out << ",mask";
  out << '\n';
  char buf[32];
  for (const auto& s : data.samples) {
    for (Index t = 0; t < s.length(); ++t) {
      out << s.id << ',' << t;
      for (Index i = 0; i < s.inputs.cols(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", s.inputs(t, i));
        out << ',' << buf;
      }
      const Index row = step ? t : 0;
      for (Index i = 0; i < s.labels.cols(); ++i) out << ',' << (s.labels(row, i) != 0.0 ? 1 : 0);
      if (has_mask) out << ',' << (s.counts(t) ? 1 : 0);
      out << '\n';
    }
  }
  if (!out) throw DataError("csv: write failed for " + path);
}

}  // namespace ebmrnn
