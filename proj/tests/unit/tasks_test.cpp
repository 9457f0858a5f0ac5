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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ebmrnn/training.hpp"

namespace ebmrnn {
namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "ebmrnn_tasks_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

bool same(const Dataset& a, const Dataset& b) {
  if (a.mode != b.mode || a.input_size != b.input_size || a.label_size != b.label_size ||
      a.samples.size() != b.samples.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    if (x.id != y.id || x.inputs != y.inputs || x.labels != y.labels || x.mask != y.mask) return false;
  }
  return true;
}

int argmax_row(const Matrix& m, Index r) {
  Index j;
  m.row(r).maxCoeff(&j);
  return static_cast<int>(j);
}

TEST(Copy, SingleSymbolIsEmittedOnTheThirdStep) {
  Dataset d = gen_copy(3, 20, 1, 4);
  d.validate();
  for (const auto& s : d.samples) {
    ASSERT_EQ(s.length(), 3);
    int a = argmax_row(s.inputs, 0);
    EXPECT_EQ(s.inputs(1, 4), 1.0);  // delimiter
    EXPECT_EQ(s.inputs.row(2).sum(), 0.0);
    EXPECT_FALSE(s.counts(0));
    EXPECT_FALSE(s.counts(1));
    EXPECT_TRUE(s.counts(2));
    EXPECT_EQ(argmax_row(s.labels, 2), a);
    EXPECT_EQ(s.labels.row(2).sum(), 1.0);
  }
}

TEST(Copy, LabelsAreAFunctionOfInputs) {
  Dataset d = gen_copy(4, 30, 20, 8);
  EXPECT_EQ(d.input_size, 9);
  EXPECT_EQ(d.mode, TaskMode::kStepMulticlass);
  for (const auto& s : d.samples) {
    ASSERT_EQ(s.length(), 41);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(argmax_row(s.labels, 21 + i), argmax_row(s.inputs, i));
  }
}

TEST(Generators, SameSeedSameBytesDifferentSeedDiffers) {
  EXPECT_TRUE(same(gen_copy(7, 10, 5, 4), gen_copy(7, 10, 5, 4)));
  EXPECT_FALSE(same(gen_copy(7, 10, 5, 4), gen_copy(8, 10, 5, 4)));
  EXPECT_TRUE(same(gen_assoc_recall(7, 10, 3, 5), gen_assoc_recall(7, 10, 3, 5)));
  EhrParams p;
  p.mode = TaskMode::kStepBinary;
  EXPECT_TRUE(same(gen_ehr_like(7, 10, p), gen_ehr_like(7, 10, p)));
}

TEST(Generators, IdsSortInCreationOrder) {
  Dataset d = gen_copy(1, 120, 2, 3);
  for (std::size_t i = 1; i < d.samples.size(); ++i) EXPECT_LT(d.samples[i - 1].id, d.samples[i].id);
}

TEST(AssocRecall, SinglePairRecallsItsValue) {
  Dataset d = gen_assoc_recall(2, 20, 1, 4);
  d.validate();
  for (const auto& s : d.samples) {
    ASSERT_EQ(s.length(), 2);
    EXPECT_EQ(argmax_row(s.inputs.leftCols(4), 1), argmax_row(s.inputs.leftCols(4), 0));
    EXPECT_EQ(argmax_row(s.labels, 0), argmax_row(s.inputs.middleCols(4, 4), 0));
  }
}

TEST(AssocRecall, QueryKeyDeterminesTheLabel) {
  Dataset d = gen_assoc_recall(5, 200, 4, 6);
  for (const auto& s : d.samples) {
    int q = argmax_row(s.inputs.leftCols(6), 4);
    int hits = 0;
    for (Index p = 0; p < 4; ++p) {
      if (s.inputs(p, q) != 1.0) continue;
      ++hits;
      EXPECT_EQ(argmax_row(s.labels, 0), argmax_row(s.inputs.middleCols(6, 6), p));
    }
    EXPECT_EQ(hits, 1);
  }
  EXPECT_THROW(gen_assoc_recall(1, 1, 7, 6), std::invalid_argument);
}

TEST(Ehr, WindowLabelsFollowATrigger) {
  EhrParams p;
  p.mode = TaskMode::kStepBinary;
  p.length = 12;
  p.window = 5;
  SequenceSample s;
  s.inputs = Matrix::Zero(12, ehr_input_size(p));
  s.inputs(3, 0) = 1.0;
  Matrix y = ehr_oracle_scores(s, p);
  for (Index t = 0; t < 12; ++t) EXPECT_EQ(y(t, 0), (t >= 3 && t <= 8) ? 1.0 : 0.0) << "t=" << t;
}

TEST(Ehr, NoTriggerMeansNoPositiveSteps) {
  EhrParams p;
  p.mode = TaskMode::kStepBinary;
  SequenceSample s;
  s.inputs = Matrix::Zero(p.length, ehr_input_size(p));
  EXPECT_EQ(ehr_oracle_scores(s, p).sum(), 0.0);
}

TEST(Ehr, GeneratedLabelsEqualTheOracleInEveryMode) {
  for (TaskMode mode : {TaskMode::kSequenceBinary, TaskMode::kStepBinary, TaskMode::kSequenceMultiLabel}) {
    EhrParams p;
    p.mode = mode;
    Dataset d = gen_ehr_like(11, 200, p);
    d.validate();
    EXPECT_EQ(d.mode, mode);
    for (const auto& s : d.samples) EXPECT_EQ(ehr_oracle_scores(s, p), s.labels) << task_mode_name(mode);
  }
}

TEST(Ehr, OracleAucIsOne) {
  for (TaskMode mode : {TaskMode::kSequenceBinary, TaskMode::kStepBinary, TaskMode::kSequenceMultiLabel}) {
    EhrParams p;
    p.mode = mode;
    Dataset d = gen_ehr_like(13, 300, p);
    std::vector<Matrix> scores, labels;
    Index rows = 0;
    for (const auto& s : d.samples) {
      scores.push_back(ehr_oracle_scores(s, p));
      labels.push_back(s.labels);
      rows += s.labels.rows();
    }
    Matrix S(rows, d.label_size), Y(rows, d.label_size);
    Index r = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      S.middleRows(r, scores[i].rows()) = scores[i];
      Y.middleRows(r, labels[i].rows()) = labels[i];
      r += scores[i].rows();
    }
    if (mode == TaskMode::kSequenceMultiLabel) {
      MultiLabelAuc a = auc_macro_micro(S, Y);
      EXPECT_EQ(a.macro, 1.0);
      EXPECT_EQ(a.micro, 1.0);
    } else {
      std::vector<double> s(S.data(), S.data() + S.size()), y(Y.data(), Y.data() + Y.size());
      EXPECT_EQ(auc_roc(s, y), 1.0);
    }
  }
}

TEST(Ehr, StepBinaryRateMatchesRequest) {
  for (double rate : {0.05, 0.2, 0.5}) {
    EhrParams p;
    p.mode = TaskMode::kStepBinary;
    p.positive_rate = rate;
    p.length = 20;
    p.window = 6;
    Dataset d = gen_ehr_like(17, 10000, p);
    double pos = 0, steps = 0;
    for (const auto& s : d.samples) {
      pos += s.labels.sum();
      steps += static_cast<double>(s.labels.rows());
    }
    EXPECT_NEAR(pos / steps, rate, 0.02) << "rate " << rate;
  }
}

TEST(Ehr, ShortSequencesAreRejected) {
  EhrParams p;
  p.length = 7;
  EXPECT_THROW(gen_ehr_like(1, 1, p), std::invalid_argument);
}

TEST(Csv, TwoStepSequence) {
  std::string path = temp_path("two.csv");
  write_file(path, "sequence_id,t,x0,x1,y0\nA,0,0.5,1,1\nA,1,0.25,0,1\n");
  Dataset d = load_csv(path, TaskMode::kSequenceBinary);
  ASSERT_EQ(d.samples.size(), 1u);
  EXPECT_EQ(d.samples[0].length(), 2);
  EXPECT_EQ(d.samples[0].inputs(1, 0), 0.25);
  EXPECT_EQ(d.samples[0].labels.rows(), 1);
  EXPECT_EQ(load_csv(path).mode, TaskMode::kSequenceBinary);
}

TEST(Csv, ShuffledRowsGiveTheSameDataset) {
  std::string a = temp_path("ordered.csv"), b = temp_path("shuffled.csv");
  write_file(a, "sequence_id,t,x0,y0\ns1,0,1,0\ns1,1,2,1\ns1,2,3,0\ns2,0,4,1\ns2,1,5,1\n");
  write_file(b, "sequence_id,t,x0,y0\ns2,1,5,1\ns1,2,3,0\ns1,0,1,0\ns2,0,4,1\ns1,1,2,1\n");
  Dataset da = load_csv(a, TaskMode::kStepBinary), db = load_csv(b, TaskMode::kStepBinary);
  EXPECT_TRUE(same(da, db));
  EXPECT_EQ(da.samples[0].id, "s1");
  EXPECT_EQ(load_csv(b).mode, TaskMode::kStepBinary);
}

TEST(Csv, GapInTimeNamesSequenceAndStep) {
  std::string path = temp_path("gap.csv");
  write_file(path, "sequence_id,t,x0,y0\npatient7,0,1,0\npatient7,2,1,0\n");
  try {
    load_csv(path, TaskMode::kStepBinary);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("patient7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
  }
}

TEST(Csv, NonBinaryLabelAndMissingColumnsAreErrors) {
  std::string path = temp_path("bad.csv");
  write_file(path, "sequence_id,t,x0,y0\nA,0,1,0.5\n");
  EXPECT_THROW(load_csv(path, TaskMode::kStepBinary), DataError);
  write_file(path, "sequence_id,x0,y0\nA,1,0\n");
  EXPECT_THROW(load_csv(path, TaskMode::kStepBinary), DataError);
  write_file(path, "sequence_id,t,x0,y0\nA,0,1\n");
  EXPECT_THROW(load_csv(path, TaskMode::kStepBinary), DataError);
  EXPECT_THROW(load_csv(temp_path("missing.csv"), TaskMode::kStepBinary), DataError);
}

TEST(Csv, WriteThenLoadRoundTrips) {
  for (TaskMode mode : {TaskMode::kSequenceBinary, TaskMode::kStepBinary, TaskMode::kSequenceMultiLabel}) {
    EhrParams p;
    p.mode = mode;
    p.length = 10;
    p.window = 3;
    Dataset d = gen_ehr_like(3, 5, p);
    std::string path = temp_path(std::string(task_mode_name(mode)) + ".csv");
    write_csv(d, path);
    EXPECT_TRUE(same(load_csv(path, mode), d)) << task_mode_name(mode);
  }
  Dataset copy = gen_copy(2, 4, 3, 3);
  std::string path = temp_path("copy.csv");
  write_csv(copy, path);
  Dataset back = load_csv(path);
  EXPECT_EQ(back.mode, TaskMode::kStepMulticlass);
  EXPECT_TRUE(same(back, copy));
}

}  // namespace
}  // namespace ebmrnn
