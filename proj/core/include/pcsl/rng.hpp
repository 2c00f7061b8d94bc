/*
 *   Copyright 2026 The pcsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>

namespace pcsl {

using Rng = std::mt19937_64;

/// Independent, reproducible generator for one consumer of randomness.
/// Separate streams keep e.g. batch sampling unaffected by how many draws
/// positive selection makes.
inline Rng make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream,
                    0x9e3779b9u};
  return Rng(seq);
}

namespace stream {
inline constexpr std::uint32_t kInit = 1;
inline constexpr std::uint32_t kIntraSampler = 2;
inline constexpr std::uint32_t kInterSampler = 3;
inline constexpr std::uint32_t kMining = 4;
inline constexpr std::uint32_t kSynthetic = 5;
}  // namespace stream

/// Uniform integer in [0, n).
inline int uniform_index(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace pcsl
