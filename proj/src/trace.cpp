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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ebmrnn {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }
std::string f2(double v) { return fmt("%.2f", v); }

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceError(where + ": expected an integer, got '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceError(where + ": expected a number, got '" + s + "'");
  }
}

void apply_write(std::vector<int>& annotation, const TraceStep& step) {
  if (step.write == WriteKind::kNone) return;
  if (step.slot < 0 || step.slot >= static_cast<int>(annotation.size())) {
    throw TraceError("trace: t=" + std::to_string(step.t) + " writes slot " +
                     std::to_string(step.slot) + " outside the bank");
  }
  annotation[static_cast<std::size_t>(step.slot)] = step.t;
}

// Header line of a CSV trace file: "# trace-v1 slots=N hops=K".
std::string csv_meta(const TraceLog& log) {
  return std::string("# ") + kTraceVersion + " slots=" + std::to_string(log.slots()) +
         " hops=" + std::to_string(log.hops());
}

std::pair<int, int> parse_csv_meta(const std::string& line, const std::string& path) {
  std::istringstream in(line);
  std::string hash, version, slots, hops;
  in >> hash >> version >> slots >> hops;
  if (hash != "#" || version != kTraceVersion || slots.rfind("slots=", 0) != 0 ||
      hops.rfind("hops=", 0) != 0) {
    throw TraceError(path + ": first line must be '# " + std::string(kTraceVersion) +
                     " slots=N hops=K'");
  }
  return {static_cast<int>(parse_int(slots.substr(6), path)),
          static_cast<int>(parse_int(hops.substr(5), path))};
}

struct Rows {
  int slots = 0;
  int hops = 0;
  std::vector<std::vector<double>> slot_rows;  // t, slot, stored_time_index
  std::vector<std::vector<double>> gate_rows;  // t, hop, g
};

std::vector<std::vector<double>> read_csv_rows(const std::string& path,
                                               const std::vector<std::string>& header,
                                               int& slots, int& hops) {
  std::ifstream in(path);
  if (!in) throw TraceError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw TraceError(path + ": empty file");
  std::tie(slots, hops) = parse_csv_meta(line, path);
  if (!std::getline(in, line) || split(line) != header) {
    throw TraceError(path + ": expected header '" + header[0] + "," + header[1] + "," +
                     header[2] + "'");
  }
  std::vector<std::vector<double>> rows;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line);
    std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != 3) throw TraceError(where + ": expected 3 columns");
    rows.push_back({static_cast<double>(parse_int(cells[0], where)),
                    static_cast<double>(parse_int(cells[1], where)),
                    header[2] == "g" ? parse_double(cells[2], where)
                                     : static_cast<double>(parse_int(cells[2], where))});
  }
  return rows;
}

std::vector<std::vector<double>> read_json_rows(const std::string& path,
                                                const std::vector<std::string>& columns,
                                                int& slots, int& hops) {
  std::ifstream in(path);
  if (!in) throw TraceError(path + ": cannot open");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw TraceError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("version", "") != kTraceVersion) {
    throw TraceError(path + ": missing version \"" + std::string(kTraceVersion) + "\"");
  }
  try {
    if (doc.at("columns").get<std::vector<std::string>>() != columns) {
      throw TraceError(path + ": unexpected columns");
    }
    slots = doc.at("slots").get<int>();
    hops = doc.at("hops").get<int>();
    std::vector<std::vector<double>> rows;
    for (const auto& r : doc.at("rows")) {
      if (!r.is_array() || r.size() != 3) throw TraceError(path + ": rows must have 3 entries");
      rows.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>()});
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw TraceError(path + ": " + e.what());
  }
}

const std::vector<std::string> kSlotColumns{"t", "slot", "stored_time_index"};
const std::vector<std::string> kGateColumns{"t", "hop", "g"};

}  // namespace

TraceLog::TraceLog(int slots, int hops) : slots_(slots), hops_(hops) {
  if (slots < 1 || hops < 1) throw TraceError("trace: slots and hops must be >= 1");
}

void TraceLog::record_step(const StepTrace& trace, const std::vector<int>& slot_time, int t) {
  TraceStep step;
  step.t = t;
  step.slot_time = slot_time;
  step.gates = trace.gates;
  step.write = trace.write;
  step.slot = trace.slot;
  step.evicted_time = trace.evicted_time;
  record_step(std::move(step));
}

void TraceLog::record_step(TraceStep step) {
  const std::string at = "trace: t=" + std::to_string(step.t);
  if (!steps_.empty() && step.t <= steps_.back().t) {
    throw TraceError(at + " does not follow t=" + std::to_string(steps_.back().t));
  }
  if (static_cast<int>(step.slot_time.size()) != slots_) {
    throw TraceError(at + ": " + std::to_string(step.slot_time.size()) +
                     " slot annotations for " + std::to_string(slots_) + " slots");
  }
  if (static_cast<int>(step.gates.size()) != hops_) {
    throw TraceError(at + ": " + std::to_string(step.gates.size()) + " gates for " +
                     std::to_string(hops_) + " hops");
  }
  for (double g : step.gates) {
    if (!(g >= 0.0 && g <= 1.0)) throw TraceError(at + ": gate " + g17(g) + " outside [0, 1]");
  }
  std::set<int> seen;
  for (int s : step.slot_time) {
    if (s < -1 || s > step.t) throw TraceError(at + ": annotation " + std::to_string(s) + " out of range");
    if (s >= 0 && !seen.insert(s).second) {
      throw TraceError(at + ": annotation " + std::to_string(s) + " appears twice");
    }
  }
  if (step.write != WriteKind::kNone) {
    if (step.slot < 0 || step.slot >= slots_ ||
        step.slot_time[static_cast<std::size_t>(step.slot)] != step.t) {
      throw TraceError(at + ": written slot " + std::to_string(step.slot) +
                       " is not annotated with t");
    }
  }
  steps_.push_back(std::move(step));
}

TraceLog trace_sequence(const Model& model, const Matrix& inputs) {
  if (!model.config().use_memory) throw TraceError("trace: the model has no memory banks to trace");
  Tape tape;
  BoundParameters p(tape, model.params());
  SequenceRun run = model.forward(p, inputs, Mode::kEval, nullptr, nullptr, true);
  TraceLog log(model.config().cell.explicit_slots, model.config().cell.hops);
  for (std::size_t t = 0; t < run.records.size(); ++t) {
    log.record_step(run.records[t].trace, run.records[t].slot_time, static_cast<int>(t));
  }
  return log;
}

std::vector<int> reconstruct_annotations(const TraceLog& log) {
  std::vector<int> annotation(static_cast<std::size_t>(log.slots()), -1);
  for (const TraceStep& step : log.steps()) apply_write(annotation, step);
  return annotation;
}

TraceFormat parse_trace_format(const std::string& name) {
  if (name == "csv") return TraceFormat::kCsv;
  if (name == "json") return TraceFormat::kJson;
  throw TraceError("trace: unknown format '" + name + "' (expected csv or json)");
}

TraceFiles trace_paths(const std::string& dir, TraceFormat format) {
  const std::string ext = format == TraceFormat::kCsv ? ".csv" : ".json";
  std::filesystem::path base(dir);
  return {(base / ("slots" + ext)).string(), (base / ("gates" + ext)).string()};
}

TraceFiles export_trace(const TraceLog& log, TraceFormat format, const std::string& dir) {
  if (log.empty()) throw TraceError("trace: nothing to export, the log is empty");
  std::filesystem::create_directories(dir);
  TraceFiles files = trace_paths(dir, format);
  std::ofstream slots(files.slots);
  std::ofstream gates(files.gates);
  if (!slots || !gates) throw TraceError("trace: cannot write into " + dir);

  if (format == TraceFormat::kCsv) {
    slots << csv_meta(log) << "\nt,slot,stored_time_index\n";
    gates << csv_meta(log) << "\nt,hop,g\n";
    for (const TraceStep& step : log.steps()) {
      for (std::size_t j = 0; j < step.slot_time.size(); ++j) {
        if (step.slot_time[j] < 0) continue;
        slots << step.t << ',' << j << ',' << step.slot_time[j] << '\n';
      }
      for (std::size_t k = 0; k < step.gates.size(); ++k) {
        gates << step.t << ',' << k + 1 << ',' << g17(step.gates[k]) << '\n';
      }
    }
  } else {
    // Rows are built by hand so that gates keep 17 significant digits.
    auto head = [&](std::ostream& out, const std::vector<std::string>& cols) {
      out << "{\"version\":\"" << kTraceVersion << "\",\"slots\":" << log.slots()
          << ",\"hops\":" << log.hops() << ",\"columns\":" << nlohmann::json(cols).dump()
          << ",\"rows\":[";
    };
    head(slots, kSlotColumns);
    head(gates, kGateColumns);
    bool first_s = true, first_g = true;
    for (const TraceStep& step : log.steps()) {
      for (std::size_t j = 0; j < step.slot_time.size(); ++j) {
        if (step.slot_time[j] < 0) continue;
        slots << (first_s ? "\n" : ",\n") << '[' << step.t << ',' << j << ','
              << step.slot_time[j] << ']';
        first_s = false;
      }
      for (std::size_t k = 0; k < step.gates.size(); ++k) {
        gates << (first_g ? "\n" : ",\n") << '[' << step.t << ',' << k + 1 << ','
              << g17(step.gates[k]) << ']';
        first_g = false;
      }
    }
    slots << "\n]}\n";
    gates << "\n]}\n";
  }
  if (!slots || !gates) throw TraceError("trace: write failed in " + dir);
  return files;
}

TraceLog import_trace(const std::string& dir, TraceFormat format) {
  TraceFiles files = trace_paths(dir, format);
  int slots_a = 0, hops_a = 0, slots_b = 0, hops_b = 0;
  std::vector<std::vector<double>> slot_rows, gate_rows;
  if (format == TraceFormat::kCsv) {
    slot_rows = read_csv_rows(files.slots, kSlotColumns, slots_a, hops_a);
    gate_rows = read_csv_rows(files.gates, kGateColumns, slots_b, hops_b);
  } else {
    slot_rows = read_json_rows(files.slots, kSlotColumns, slots_a, hops_a);
    gate_rows = read_json_rows(files.gates, kGateColumns, slots_b, hops_b);
  }
  if (slots_a != slots_b || hops_a != hops_b) {
    throw TraceError("trace: slots and gates files disagree on bank shape");
  }

  // Gates define the step set; every recorded step has all hops.
  std::map<int, TraceStep> steps;
  for (const auto& r : gate_rows) {
    int t = static_cast<int>(r[0]);
    int hop = static_cast<int>(r[1]);
    if (hop < 1 || hop > hops_a) throw TraceError("trace: hop " + std::to_string(hop) + " out of range");
    TraceStep& step = steps[t];
    if (step.gates.empty()) {
      step.t = t;
      step.gates.assign(static_cast<std::size_t>(hops_a), std::nan(""));
      step.slot_time.assign(static_cast<std::size_t>(slots_a), -1);
    }
    step.gates[static_cast<std::size_t>(hop - 1)] = r[2];
  }
  for (const auto& r : slot_rows) {
    int t = static_cast<int>(r[0]);
    int slot = static_cast<int>(r[1]);
    auto it = steps.find(t);
    if (it == steps.end()) throw TraceError("trace: slot row for t=" + std::to_string(t) + " has no gates");
    if (slot < 0 || slot >= slots_a) throw TraceError("trace: slot " + std::to_string(slot) + " out of range");
    it->second.slot_time[static_cast<std::size_t>(slot)] = static_cast<int>(r[2]);
  }

  TraceLog log(slots_a, hops_a);
  std::vector<int> previous(static_cast<std::size_t>(slots_a), -1);
  for (auto& [t, step] : steps) {
    for (std::size_t j = 0; j < step.slot_time.size(); ++j) {
      if (step.slot_time[j] != t) continue;
      step.slot = static_cast<int>(j);
      step.write = previous[j] < 0 ? WriteKind::kAppend : WriteKind::kReplace;
      step.evicted_time = previous[j] < 0 ? -1 : previous[j];
    }
    previous = step.slot_time;
    log.record_step(std::move(step));
  }
  return log;
}

namespace {

constexpr double kLeft = 60, kTop = 30, kRight = 20, kBottom = 40;

// Deterministic palette: hue walks the golden angle per stored time index.
std::string slot_colour(int time) {
  double hue = std::fmod(time * 137.508, 360.0);
  char buf[48];
  std::snprintf(buf, sizeof buf, "hsl(%.1f,60%%,70%%)", hue);
  return buf;
}

std::string svg_open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(w) + "\" height=\"" + f2(h) +
         "\" viewBox=\"0 0 " + f2(w) + " " + f2(h) + "\" font-family=\"monospace\" font-size=\"10\">\n";
}

}  // namespace

std::string render_slot_map(const TraceLog& log) {
  if (log.empty()) throw TraceError("trace: nothing to render, the log is empty");
  const double cell_w = 18, cell_h = 16;
  const std::size_t steps = log.steps().size();
  const double width = kLeft + cell_w * static_cast<double>(steps) + kRight;
  const double height = kTop + cell_h * log.slots() + kBottom;
  std::ostringstream out;
  out << svg_open(width, height);
  out << "<text x=\"" << f2(kLeft) << "\" y=\"15\">explicit slots</text>\n";
  for (int j = 0; j < log.slots(); ++j) {
    double y = kTop + cell_h * j;
    out << "<g class=\"slot-row\" data-slot=\"" << j << "\">\n";
    out << "<text x=\"5\" y=\"" << f2(y + cell_h * 0.75) << "\">slot " << j << "</text>\n";
    for (std::size_t i = 0; i < steps; ++i) {
      int stored = log.steps()[i].slot_time[static_cast<std::size_t>(j)];
      double x = kLeft + cell_w * static_cast<double>(i);
      out << "<rect x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" width=\"" << f2(cell_w)
          << "\" height=\"" << f2(cell_h) << "\" fill=\""
          << (stored < 0 ? std::string("#eeeeee") : slot_colour(stored)) << "\" stroke=\"#ffffff\"/>";
      if (stored >= 0) {
        out << "<text x=\"" << f2(x + 2) << "\" y=\"" << f2(y + cell_h * 0.75) << "\">" << stored
            << "</text>";
      }
      out << '\n';
    }
    out << "</g>\n";
  }
  double axis_y = kTop + cell_h * log.slots();
  for (std::size_t i = 0; i < steps; ++i) {
    out << "<text x=\"" << f2(kLeft + cell_w * static_cast<double>(i) + 2) << "\" y=\""
        << f2(axis_y + 14) << "\">" << log.steps()[i].t << "</text>\n";
  }
  out << "<text x=\"" << f2(kLeft) << "\" y=\"" << f2(axis_y + 32) << "\">t</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_gate_lines(const TraceLog& log) {
  if (log.empty()) throw TraceError("trace: nothing to render, the log is empty");
  const double plot_w = 480, plot_h = 200;
  const double width = kLeft + plot_w + kRight + 60;
  const double height = kTop + plot_h + kBottom;
  const std::size_t steps = log.steps().size();
  auto x_of = [&](std::size_t i) {
    return kLeft + (steps > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(steps - 1) : 0.0);
  };
  auto y_of = [&](double g) { return kTop + plot_h * (1.0 - g); };

  std::ostringstream out;
  out << svg_open(width, height);
  out << "<text x=\"" << f2(kLeft) << "\" y=\"15\">read gate g per hop</text>\n";
  out << "<line class=\"axis\" x1=\"" << f2(kLeft) << "\" y1=\"" << f2(y_of(0)) << "\" x2=\""
      << f2(kLeft + plot_w) << "\" y2=\"" << f2(y_of(0)) << "\" stroke=\"#000000\"/>\n";
  out << "<line class=\"axis\" x1=\"" << f2(kLeft) << "\" y1=\"" << f2(y_of(0)) << "\" x2=\""
      << f2(kLeft) << "\" y2=\"" << f2(y_of(1)) << "\" stroke=\"#000000\"/>\n";
  for (double g : {0.0, 0.5, 1.0}) {
    out << "<text x=\"" << f2(kLeft - 30) << "\" y=\"" << f2(y_of(g) + 3) << "\">" << fmt("%.1f", g)
        << "</text>\n";
  }
  if (steps > 0) {
    out << "<text x=\"" << f2(kLeft) << "\" y=\"" << f2(y_of(0) + 14) << "\">" << log.steps().front().t
        << "</text>\n";
    out << "<text x=\"" << f2(kLeft + plot_w - 10) << "\" y=\"" << f2(y_of(0) + 14) << "\">"
        << log.steps().back().t << "</text>\n";
  }
  for (int k = 0; k < log.hops(); ++k) {
    std::string colour = slot_colour(k * 3 + 1);
    out << "<polyline class=\"gate-line\" data-hop=\"" << k + 1 << "\" fill=\"none\" stroke=\""
        << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < steps; ++i) {
      if (i) out << ' ';
      out << f2(x_of(i)) << ',' << f2(y_of(log.steps()[i].gates[static_cast<std::size_t>(k)]));
    }
    out << "\"/>\n";
    out << "<text x=\"" << f2(kLeft + plot_w + 8) << "\" y=\"" << f2(kTop + 12.0 * (k + 1))
        << "\" fill=\"" << colour << "\">hop " << k + 1 << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ebmrnn
