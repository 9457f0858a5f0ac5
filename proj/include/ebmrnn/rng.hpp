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

#pragma once

#include <cstdint>

namespace ebmrnn {

/// Deterministic 64-bit generator: xoshiro256** whose state is expanded from
/// the seed with splitmix64. Output depends only on the seed and the number of
/// draws, so runs are bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one draw consumes two uniforms).
  double normal();

  /// Child generator seeded from this stream. Each call advances the parent
  /// and yields an independent stream.
  Rng split();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t splits() const { return splits_; }

 private:
  std::uint64_t seed_;
  std::uint64_t splits_ = 0;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for an independent stream keyed by (a, b, c).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace ebmrnn
