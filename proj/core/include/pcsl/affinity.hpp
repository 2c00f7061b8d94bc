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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcsl/buffer.hpp"
#include "pcsl/dataset.hpp"

namespace pcsl {

/// Gaussian-kernel similarities between person features, restricted to each
/// row's k nearest candidates. With the camera mask on (the default) only
/// persons seen by a different camera are candidates, so same-camera entries
/// and the diagonal are always zero. Rows are not symmetrised.
struct AffinityMatrix {
  Eigen::MatrixXd values;  // C x C
  double sigma_sq = 0.0;
  int k = 0;
  int epoch_built = 0;
  bool mask_same_camera = true;
  /// Set when every candidate distance was zero and kept entries were set
  /// to the kernel's limit value 1.
  bool sigma_degenerate = false;

  int classes() const { return static_cast<int>(values.rows()); }
  int nonzeros_in_row(int row) const;
};

AffinityMatrix build_affinity(const PersonBuffer& buffer, const PersonIndex& index, int k,
                              bool mask_same_camera = true, int epoch = 0);

/// Normalised affinity row W_z used as a soft target for class z.
struct SoftLabelRow {
  int class_index = 0;
  std::vector<std::pair<int, double>> weights;  // (class, weight), ascending class
  bool degenerate = false;

  double weight_of(int c) const;
  Eigen::VectorXd dense(int classes) const;
};

/// With `include_self`, the row's own class enters the normalisation with
/// the kernel's self-similarity exp(0) = 1 before the other entries.
std::vector<SoftLabelRow> soft_label_rows(const AffinityMatrix& affinity,
                                          bool include_self = false);

/// Mean average precision of each row's ranking of cross-camera persons
/// (descending affinity, ties by class index) against hidden identities.
/// `class_truth[c]` is the identity of class c, or -1 if unknown. Rows with
/// no cross-camera true match are left out.
double affinity_quality_map(const AffinityMatrix& affinity, const PersonIndex& index,
                            std::span<const int> class_truth);

/// Sparse (row, col, value) dump of the nonzero entries.
std::string affinity_triplets(const AffinityMatrix& affinity);

}  // namespace pcsl
