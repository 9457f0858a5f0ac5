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

#include "ebmrnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ebmrnn/config.hpp"

namespace ebmrnn {

namespace {

constexpr std::size_t kMagicSize = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double get_f64(const std::string& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string checkpoint_bytes(const Model& model) {
  const ParameterSet& params = model.params();
  nlohmann::json manifest;
  manifest["format"] = "ebmrnn-checkpoint";
  manifest["version"] = 1;
  manifest["seed"] = model.seed();
  manifest["model"] = model_config_to_json(model.config());
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = params.value(i);
    entries.push_back({{"name", params.name(i)},
                       {"rows", v.rows()},
                       {"cols", v.cols()},
                       {"offset", offset},
                       {"trainable", params.trainable(i)}});
    offset += static_cast<std::size_t>(v.size()) * 8;
  }
  manifest["parameters"] = entries;
  manifest["payload_bytes"] = offset;
  const std::string text = manifest.dump();

  std::string out(kCheckpointMagic, kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + offset);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = params.value(i);
    for (Index k = 0; k < v.size(); ++k) put_f64(out, v.data()[k]);
  }
  return out;
}

Model checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < kMagicSize + 4 || bytes.compare(0, kMagicSize, kCheckpointMagic) != 0) {
    throw CheckpointError("checkpoint: missing EBMRNN01 header");
  }
  const std::size_t len = get_u32(bytes, kMagicSize);
  const std::size_t payload = kMagicSize + 4 + len;
  if (payload > bytes.size()) throw CheckpointError("checkpoint: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(kMagicSize + 4, len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad manifest: ") + e.what());
  }
  try {
    const ModelConfig config = model_config_from_json(manifest.at("model"));
    const auto seed = manifest.at("seed").get<std::uint64_t>();
    ParameterSet values;
    for (const auto& e : manifest.at("parameters")) {
      const auto rows = e.at("rows").get<Index>();
      const auto cols = e.at("cols").get<Index>();
      const auto offset = e.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 || payload + offset + static_cast<std::size_t>(rows * cols) * 8 > bytes.size()) {
        throw CheckpointError("checkpoint: parameter " + e.at("name").get<std::string>() + " runs past the end of the file");
      }
      Matrix m(rows, cols);
      for (Index k = 0; k < m.size(); ++k) m.data()[k] = get_f64(bytes, payload + offset + static_cast<std::size_t>(k) * 8);
      values.add(e.at("name").get<std::string>(), std::move(m), e.at("trainable").get<bool>());
    }
    return Model(config, seed, values);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: bad model section: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Model& model) {
  const std::string bytes = checkpoint_bytes(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

}  // namespace ebmrnn
