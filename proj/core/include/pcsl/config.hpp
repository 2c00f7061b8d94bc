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
#include <string>

#include <nlohmann/json.hpp>

#include "pcsl/embed.hpp"
#include "pcsl/losses.hpp"

namespace pcsl {

enum class InterMode { classification, discrimination, both };  // "C", "D", "C+D"
enum class MiningMode { hard, random };

std::string to_string(InterMode m);
std::string to_string(WeightingMode m);
std::string to_string(MiningMode m);
std::string to_string(PositiveSampling m);

/// Every training hyperparameter. Defaults are the reference setup
/// (N_P=32, N_K=4, m=0.3, lambda=1, k=6, 300 epochs with 100 warm-up
/// epochs, rates 0.1/0.01 decayed by 0.1 at epoch 200, 64-image
/// classification batches split evenly across cameras).
struct TrainConfig {
  int n_p = 32;
  int n_k = 4;
  double margin = 0.3;
  double lambda = 1.0;
  int k = 6;
  int epochs = 300;
  int warmup_epochs = 100;
  // Wide enough for a C-class soft-label classifier; at 16 dimensions the
  // weighted cross-entropy degrades the embedding.
  int hidden_dim = 128;
  int embed_dim = 64;
  Optimizer optimizer;
  int classification_budget = 64;
  InterMode inter_mode = InterMode::discrimination;
  WeightingMode weighting_mode = WeightingMode::average;
  MiningMode mining_mode = MiningMode::hard;
  bool mask_same_camera = true;
  PositiveSampling positive_sampling = PositiveSampling::random_knn;
  /// Off: the plain soft target, zero on the sample's own class. On: the
  /// own class enters each row with the kernel's self-similarity 1 before
  /// normalisation. Affects the classification term only.
  bool self_class_target = false;
  /// Validation cadence in epochs; 0 evaluates only after the last epoch.
  int eval_every = 10;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const;
};

nlohmann::json to_json(const TrainConfig& config);

/// Applies the keys of `j` on top of `base`. Unknown keys and ill-typed
/// values raise ConfigError naming the key.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// `value` is parsed as JSON when possible, otherwise taken as a string.
void apply_override(TrainConfig& config, const std::string& key, const std::string& value);

}  // namespace pcsl
