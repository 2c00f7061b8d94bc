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

#include <filesystem>

#include "pcsl/buffer.hpp"
#include "pcsl/embed.hpp"

namespace pcsl {

/// Everything needed to resume or evaluate a run.
struct Checkpoint {
  EmbeddingModel model;
  ClassifierHead head;
  Optimizer optimizer;
  OptimizerState state;
  PersonBuffer buffer;
  int epoch = 0;

  bool operator==(const Checkpoint& o) const;
};

inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pcsl
