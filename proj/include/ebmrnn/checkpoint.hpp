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

// Binary checkpoint files.
//
// Layout: the 8 bytes "EBMRNN01", a little-endian uint32 manifest length, the
// UTF-8 JSON manifest, then every parameter as raw little-endian binary64 in
// manifest order (row-major). Manifest offsets count bytes from the start of
// the payload.

#pragma once

#include <stdexcept>
#include <string>

#include "ebmrnn/model.hpp"

namespace ebmrnn {

inline constexpr char kCheckpointMagic[] = "EBMRNN01";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string checkpoint_bytes(const Model& model);
Model checkpoint_from_bytes(const std::string& bytes);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace ebmrnn
