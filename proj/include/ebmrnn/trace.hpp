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

// Forward-value traces of the explicit bank and the read gates, their
// trace-v1 file format, and SVG charts.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ebmrnn/memory_cell.hpp"
#include "ebmrnn/model.hpp"

namespace ebmrnn {

inline constexpr char kTraceVersion[] = "trace-v1";

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceStep {
  int t = 0;
  /// Stored time index per slot, -1 for an empty slot.
  std::vector<int> slot_time;
  std::vector<double> gates;  // one per hop
  WriteKind write = WriteKind::kNone;
  int slot = -1;
  int evicted_time = -1;

  bool operator==(const TraceStep&) const = default;
};

class TraceLog {
 public:
  TraceLog(int slots, int hops);

  /// Appends one step. `slot_time` is the bank annotation after the step's
  /// write. Throws TraceError when t does not increase, a gate leaves [0, 1],
  /// an annotation repeats, or the written slot is not stamped with t.
  void record_step(const StepTrace& trace, const std::vector<int>& slot_time, int t);
  /// Same, for a step already in TraceStep form.
  void record_step(TraceStep step);

  const std::vector<TraceStep>& steps() const { return steps_; }
  int slots() const { return slots_; }
  int hops() const { return hops_; }
  bool empty() const { return steps_.empty(); }

  bool operator==(const TraceLog&) const = default;

 private:
  int slots_;
  int hops_;
  std::vector<TraceStep> steps_;
};

/// Runs `inputs` through a memory model in eval mode (no noise) and records
/// every step with t = 0, 1, ...
TraceLog trace_sequence(const Model& model, const Matrix& inputs);

/// Replays the write events from an empty bank and returns the final
/// annotation map. Equals the last step's slot_time for a faithful trace.
std::vector<int> reconstruct_annotations(const TraceLog& log);

enum class TraceFormat { kCsv, kJson };

TraceFormat parse_trace_format(const std::string& name);

struct TraceFiles {
  std::string slots;
  std::string gates;
};

TraceFiles trace_paths(const std::string& dir, TraceFormat format);

/// Writes the slots file (t, slot, stored_time_index) and the gates file
/// (t, hop, g) into `dir`.
TraceFiles export_trace(const TraceLog& log, TraceFormat format, const std::string& dir);

/// Reads the two files back. Write events are rebuilt from the annotation
/// changes between consecutive steps.
TraceLog import_trace(const std::string& dir, TraceFormat format);

/// Slot-on-y, time-on-x grid labelled with stored time indices.
std::string render_slot_map(const TraceLog& log);
/// One polyline per hop of g over t.
std::string render_gate_lines(const TraceLog& log);

}  // namespace ebmrnn
