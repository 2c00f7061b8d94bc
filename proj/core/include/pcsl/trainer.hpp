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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsl/affinity.hpp"
#include "pcsl/buffer.hpp"
#include "pcsl/checkpoint.hpp"
#include "pcsl/config.hpp"
#include "pcsl/dataset.hpp"
#include "pcsl/embed.hpp"
#include "pcsl/rng.hpp"

namespace pcsl {

/// Sample ids of one single-camera P x K batch, grouped person by person.
struct PkBatch {
  int camera = 0;
  std::vector<int> samples;
  std::vector<int> person;  // class index per entry of `samples`
};

/// Cameras that can feed the intra-camera sampler (>= 2 persons with samples).
std::vector<int> eligible_cameras(const Dataset& dataset,
                                  const std::vector<std::vector<int>>& by_class);

/// N_P persons of `camera` without replacement (all of them when the camera
/// has fewer), then N_K samples of each, with replacement only when a
/// person has fewer than N_K samples.
PkBatch pk_sampler(const Dataset& dataset, const std::vector<std::vector<int>>& by_class,
                   int camera, int n_p, int n_k, Rng& rng);

/// floor(budget / n_cameras) images per camera; throws ConfigError if zero.
int classification_per_camera(int n_cameras, int budget = 64);

/// The same number of uniformly drawn samples from every camera.
std::vector<int> classification_sampler(const Dataset& dataset, Rng& rng, int budget = 64);

struct EpochRecord {
  int epoch = 0;
  bool joint = false;
  double intra_loss = 0.0;  // mean over iterations of the per-anchor mean
  double inter_loss = 0.0;  // mean over iterations, before the lambda factor
  std::optional<double> affinity_map;
  std::optional<double> sigma_sq;
  std::optional<double> val_map;
  std::optional<double> val_rank1;
  long skipped_anchors = 0;
  long degenerate_rows = 0;
  long clamped_logs = 0;
  long own_class_zero = 0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;
  int affinity_builds = 0;
  int excluded_cameras = 0;

  /// Everything except wall-clock time, for determinism checks.
  bool same_outcome(const TrainLog& other) const;
};

inline constexpr int kTrainLogSchemaVersion = 1;
/// Fixed CSV column order of the metrics export.
const std::vector<std::string>& trainlog_columns();
std::string trainlog_to_csv(const TrainLog& log);
nlohmann::json trainlog_to_json(const TrainLog& log);
TrainLog trainlog_from_json(const nlohmann::json& j);

struct TrainState {
  EmbeddingModel model;
  ClassifierHead head;
  OptimizerState optimizer_state;
  PersonBuffer buffer;
  int epoch = 0;

  Checkpoint checkpoint(const Optimizer& optimizer) const;
};

struct Validation {
  const Dataset* query = nullptr;
  const Dataset* gallery = nullptr;
};

struct TrainHooks {
  std::function<void(const TrainState&, const EpochRecord&)> on_epoch_end;
  bool record_wall_time = true;
};

struct TrainResult {
  TrainState state;
  TrainLog log;
  std::optional<AffinityMatrix> last_affinity;
};

/// Warm-up epochs optimise the intra-camera triplet loss only; afterwards
/// each epoch first rebuilds the affinity matrix from a buffer snapshot and
/// then optimises intra + lambda * inter. Deterministic given the seed.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  std::optional<Validation> validation = std::nullopt,
                  const TrainHooks& hooks = {});

}  // namespace pcsl
