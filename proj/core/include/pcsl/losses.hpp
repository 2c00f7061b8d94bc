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

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pcsl/affinity.hpp"
#include "pcsl/rng.hpp"

namespace pcsl {

/// Embeddings of one single-camera P x K batch, one column per sample.
/// `person[i]` is the class index of column i.
struct TripletBatch {
  Eigen::MatrixXd embeddings;  // d x N
  std::vector<int> person;
  int camera = 0;

  int size() const { return static_cast<int>(embeddings.cols()); }
};

struct LossValue {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // same shape as the differentiated input
  int active = 0;        // anchors / samples with a nonzero hinge or loss
  int skipped = 0;       // anchors that could not be formed
  int clamped = 0;       // log-probabilities that hit the floor
  int own_class_zero = 0;
};

inline constexpr double kLogProbabilityFloor = 1e-12;

/// Batch-hard triplet loss: for every anchor, hinge of margin + farthest
/// same-person distance - nearest other-person distance, summed over
/// anchors. Requires >= 2 persons with the same number (>= 2) of samples.
LossValue intra_triplet_loss(const TripletBatch& batch, double margin);

/// Same hinge with the positive and negative of each anchor drawn at random
/// instead of mined.
LossValue random_triplet_loss(const TripletBatch& batch, double margin, Rng& rng);

/// Numerically stable softmax.
Eigen::VectorXd softmax_probs(const Eigen::VectorXd& scores);

/// -sum_c W(c) log P(c|x). The returned gradient is with respect to the
/// scores that produced `probs` (probs - W).
LossValue weighted_cross_entropy(const Eigen::VectorXd& probs, const SoftLabelRow& row);

enum class WeightingMode { average, affinity };         // "AW" and "W"
enum class PositiveSampling { random_knn, nearest };

struct PositiveDraw {
  int class_index = 0;
  int sample_index = 0;
  double weight = 0.0;
};

/// Picks N_K neighbour persons of `anchor_class` from the nonzero entries of
/// its affinity row and one random sample of each. Returns nullopt when the
/// row has no usable neighbour.
std::optional<std::vector<PositiveDraw>> select_positives(
    int anchor_class, const AffinityMatrix& affinity,
    const std::vector<std::vector<int>>& samples_by_class, int n_k, WeightingMode weighting,
    PositiveSampling sampling, Rng& rng);

/// Column of the closest sample in `batch` that belongs to another person.
std::optional<int> select_hardest_negative(const Eigen::VectorXd& anchor,
                                           const TripletBatch& batch, int anchor_person);
std::optional<int> select_random_negative(const TripletBatch& batch, int anchor_person,
                                          Rng& rng);

/// [sum_p w_p D(a, p) - D(a, n) + margin]_+. Gradient columns are ordered
/// anchor, positives..., negative.
LossValue weighted_triplet_loss(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& positives,
                                const std::vector<double>& weights,
                                const Eigen::VectorXd& negative, double margin);

}  // namespace pcsl
