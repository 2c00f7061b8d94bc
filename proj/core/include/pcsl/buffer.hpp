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

#include <vector>

#include <Eigen/Dense>

namespace pcsl {

/// Per-person feature memory, one column per class. A column is refreshed
/// as p <- (p + mean of the batch features of that person) / 2 every time
/// the person shows up in a batch; the first visit stores the batch mean.
class PersonBuffer {
 public:
  PersonBuffer() = default;
  PersonBuffer(int dim, int classes);

  int dim() const { return static_cast<int>(features_.rows()); }
  int classes() const { return static_cast<int>(features_.cols()); }

  /// `batch_features` is d x N_K; columns are the person's embeddings in
  /// the current batch. The mean is taken over the columns in lexicographic
  /// order so the result does not depend on their arrangement.
  void update_person(int class_index, const Eigen::MatrixXd& batch_features);

  /// Overwrites a column and marks it initialised.
  void set_person(int class_index, const Eigen::VectorXd& feature);

  bool initialized(int class_index) const;
  std::vector<int> uninitialized() const;
  bool all_initialized() const;

  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<char>& flags() const { return flags_; }
  long iteration() const { return iteration_; }
  void advance_iteration() { ++iteration_; }

  /// Restores a buffer from persisted state (checkpoint loading).
  static PersonBuffer restore(Eigen::MatrixXd features, std::vector<char> flags, long iteration);

  bool operator==(const PersonBuffer&) const;

 private:
  Eigen::MatrixXd features_;
  std::vector<char> flags_;
  long iteration_ = 0;
};

}  // namespace pcsl
