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

#include "ebmrnn/trace.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "ebmrnn/model.hpp"
#include "ebmrnn/tasks.hpp"

namespace ebmrnn {
namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "ebmrnn_trace_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Runs a model on one copy sequence and records every step.
TraceLog traced_run(int slots, int hops, int length, std::uint64_t seed) {
  Dataset data = gen_copy(seed, 1, length, 4);
  ModelConfig mc;
  mc.controller.hidden = 8;
  mc.controller.input = data.input_size;
  mc.cell.slot_width = 4;
  mc.cell.explicit_slots = slots;
  mc.cell.blurred_slots = 4;
  mc.cell.hops = hops;
  mc.output_size = data.label_size;
  Model model(mc, seed);
  Tape tape;
  BoundParameters p(tape, model.params());
  SequenceRun run = model.forward(p, data.samples[0].inputs, Mode::kEval, nullptr, nullptr, true);
  TraceLog log(slots, hops);
  for (std::size_t t = 0; t < run.records.size(); ++t) {
    log.record_step(run.records[t].trace, run.records[t].slot_time, static_cast<int>(t));
  }
  return log;
}

TraceStep step(int t, std::vector<int> slot_time, std::vector<double> gates, WriteKind w = WriteKind::kNone,
               int slot = -1) {
  TraceStep s;
  s.t = t;
  s.slot_time = std::move(slot_time);
  s.gates = std::move(gates);
  s.write = w;
  s.slot = slot;
  return s;
}

TEST(TraceLog, FirstRecordAtZero) {
  TraceLog log(2, 1);
  log.record_step(step(0, {0, -1}, {0.5}, WriteKind::kAppend, 0));
  EXPECT_EQ(log.steps().size(), 1u);
}

TEST(TraceLog, RepeatedOrDecreasingTimeIsRejected) {
  TraceLog log(2, 1);
  log.record_step(step(0, {0, -1}, {0.5}, WriteKind::kAppend, 0));
  EXPECT_THROW(log.record_step(step(0, {0, -1}, {0.5})), TraceError);
  log.record_step(step(1, {0, 1}, {0.5}, WriteKind::kAppend, 1));
  EXPECT_THROW(log.record_step(step(0, {0, 1}, {0.5})), TraceError);
}

TEST(TraceLog, InvalidRecordsAreRejected) {
  TraceLog log(2, 1);
  EXPECT_THROW(log.record_step(step(0, {0, -1}, {1.5}, WriteKind::kAppend, 0)), TraceError);
  EXPECT_THROW(log.record_step(step(0, {0, 0}, {0.5}, WriteKind::kAppend, 0)), TraceError);
  EXPECT_THROW(log.record_step(step(0, {-1, -1}, {0.5}, WriteKind::kAppend, 0)), TraceError);
  EXPECT_THROW(log.record_step(step(0, {0}, {0.5}, WriteKind::kAppend, 0)), TraceError);
  EXPECT_TRUE(log.empty());
}

TEST(TraceLog, AppendsFillTheBankInOrder) {
  TraceLog log = traced_run(5, 2, 2, 1);  // 5 steps, 5 slots
  const auto& last = log.steps().back().slot_time;
  EXPECT_EQ(last, (std::vector<int>{0, 1, 2, 3, 4}));
  for (const TraceStep& s : log.steps()) EXPECT_EQ(s.write, WriteKind::kAppend);
}

TEST(TraceLog, ReconstructionMatchesTheFinalBank) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TraceLog log = traced_run(3, 2, 4, seed);  // 9 steps, 6 replacements
    EXPECT_EQ(reconstruct_annotations(log), log.steps().back().slot_time) << "seed " << seed;
    int replaced = 0;
    for (const TraceStep& s : log.steps()) replaced += s.write == WriteKind::kReplace;
    EXPECT_EQ(replaced, 6);
  }
}

TEST(Export, SingleStepWritesTwoFilesWithHeaders) {
  TraceLog log(2, 2);
  log.record_step(step(0, {0, -1}, {0.25, 1.0}, WriteKind::kAppend, 0));
  std::string dir = temp_dir("single");
  TraceFiles files = export_trace(log, TraceFormat::kCsv, dir);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 2);
  EXPECT_EQ(read_file(files.slots), "# trace-v1 slots=2 hops=2\nt,slot,stored_time_index\n0,0,0\n");
  EXPECT_EQ(read_file(files.gates), "# trace-v1 slots=2 hops=2\nt,hop,g\n0,1,0.25\n0,2,1\n");
  TraceFiles json = export_trace(log, TraceFormat::kJson, temp_dir("single_json"));
  EXPECT_NE(read_file(json.slots).find("\"version\":\"trace-v1\""), std::string::npos);
  EXPECT_NE(read_file(json.gates).find("[\"t\",\"hop\",\"g\"]"), std::string::npos);
}

TEST(Export, RoundTripIsLossless) {
  TraceLog log = traced_run(3, 3, 4, 5);
  for (TraceFormat f : {TraceFormat::kCsv, TraceFormat::kJson}) {
    std::string dir = temp_dir(f == TraceFormat::kCsv ? "rt_csv" : "rt_json");
    export_trace(log, f, dir);
    TraceLog back = import_trace(dir, f);
    EXPECT_EQ(back, log);
  }
}

TEST(Export, BytesAreDeterministic) {
  TraceLog log = traced_run(3, 2, 3, 9);
  std::string a = temp_dir("det_a"), b = temp_dir("det_b");
  TraceFiles fa = export_trace(log, TraceFormat::kCsv, a);
  TraceFiles fb = export_trace(traced_run(3, 2, 3, 9), TraceFormat::kCsv, b);
  EXPECT_EQ(read_file(fa.slots), read_file(fb.slots));
  EXPECT_EQ(read_file(fa.gates), read_file(fb.gates));
}

TEST(Export, EmptyLogIsAnError) {
  TraceLog log(2, 2);
  EXPECT_THROW(export_trace(log, TraceFormat::kCsv, temp_dir("empty")), TraceError);
}

TEST(Import, RejectsWrongVersion) {
  std::string dir = temp_dir("badversion");
  std::ofstream(dir + "/slots.csv") << "# trace-v0 slots=1 hops=1\nt,slot,stored_time_index\n";
  std::ofstream(dir + "/gates.csv") << "# trace-v1 slots=1 hops=1\nt,hop,g\n";
  EXPECT_THROW(import_trace(dir, TraceFormat::kCsv), TraceError);
}

TEST(Render, EightSlotsFourHops) {
  TraceLog log = traced_run(8, 4, 6, 2);
  std::string map = render_slot_map(log);
  std::string lines = render_gate_lines(log);
  EXPECT_EQ(count(map, "class=\"slot-row\""), 8u);
  EXPECT_EQ(count(lines, "<polyline"), 4u);
  EXPECT_EQ(map.rfind("<svg", 0), 0u);
  EXPECT_EQ(count(map, "href"), 0u);
}

TEST(Render, ConstantGateIsAFlatTopLine) {
  TraceLog log(1, 1);
  for (int t = 0; t < 5; ++t) log.record_step(step(t, {t}, {1.0}, WriteKind::kReplace, 0));
  std::string svg = render_gate_lines(log);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("points=\"([^\"]*)\"")));
  std::istringstream pts(m[1].str());
  std::string pt;
  std::set<std::string> ys;
  while (pts >> pt) ys.insert(pt.substr(pt.find(',') + 1));
  ASSERT_EQ(ys.size(), 1u);
  EXPECT_EQ(*ys.begin(), "30.00");  // top of the plot area
}

TEST(Render, Deterministic) {
  EXPECT_EQ(render_slot_map(traced_run(4, 2, 3, 3)), render_slot_map(traced_run(4, 2, 3, 3)));
  EXPECT_EQ(render_gate_lines(traced_run(4, 2, 3, 3)), render_gate_lines(traced_run(4, 2, 3, 3)));
}

TEST(Render, EmptyLogIsAnError) {
  TraceLog log(2, 2);
  EXPECT_THROW(render_slot_map(log), TraceError);
  EXPECT_THROW(render_gate_lines(log), TraceError);
}

}  // namespace
}  // namespace ebmrnn
