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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsl/config.hpp"
#include "pcsl/dataset.hpp"
#include "pcsl/evalmetrics.hpp"
#include "pcsl/trainer.hpp"

namespace pcsl {

enum class AblationAxis {
  inter_mode,
  mining_mode,
  mask_same_camera,
  positive_sampling,
  weighting_mode,
  lambda_sweep,
  k_sweep,
};

std::string to_string(AblationAxis axis);
AblationAxis axis_from_string(const std::string& name);

struct AblationSetting {
  std::string label;
  TrainConfig config;
};

/// The settings compared along one axis, each differing from `base` in that
/// single variable. The inter_mode axis starts with the lambda = 0
/// intra-only baseline.
std::vector<AblationSetting> ablation_settings(const TrainConfig& base, AblationAxis axis);

struct AblationRow {
  std::string label;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<RetrievalResult> results;
  std::vector<TrainLog> logs;

  double median_map() const;
  double median_rank1() const;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::inter_mode;
  std::vector<AblationRow> rows;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

double median(std::vector<double> values);

/// Seeds of the committed synthetic benchmark. Each seed draws its own corpus
/// from benchmark_spec(seed) and also seeds training, so settings compared on
/// one seed see the same data and the same initial weights.
inline constexpr std::array<std::uint64_t, 5> kBenchmarkSeeds{0, 1, 2, 3, 4};

/// SynthSpec defaults with the given seed.
SynthSpec benchmark_spec(std::uint64_t seed);

/// Trains every setting on the axis once per seed (the seed overrides the
/// config seed, so settings are paired) and evaluates on query/gallery.
AblationTable run_ablation(const Dataset& train_set, const Dataset& query, const Dataset& gallery,
                           const TrainConfig& base, AblationAxis axis,
                           std::span<const std::uint64_t> seeds);

}  // namespace pcsl
