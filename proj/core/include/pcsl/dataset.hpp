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
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pcsl {

/// One observation: a raw input vector seen by a given camera, labelled only
/// with a person id that is meaningful inside that camera.
struct Sample {
  std::vector<double> raw_feature;
  int camera_id = 0;
  int local_person_id = 0;
  /// Global identity; hidden from training, used only for evaluation.
  std::optional<int> truth_identity;

  bool operator==(const Sample&) const = default;
};

/// Maps (camera, local person) pairs onto global class indices. Classes of
/// camera i occupy the contiguous block [offset(i), offset(i) + count(i)).
class PersonIndex {
 public:
  PersonIndex() = default;
  explicit PersonIndex(std::vector<int> persons_per_camera);

  int n_cameras() const { return static_cast<int>(counts_.size()); }
  int total() const { return total_; }
  int count(int camera) const;
  int offset(int camera) const;
  const std::vector<int>& counts() const { return counts_; }

  int class_index(int camera, int local_person) const;
  int camera_of(int class_index) const;
  std::pair<int, int> person_of(int class_index) const;

  bool operator==(const PersonIndex&) const = default;

 private:
  std::vector<int> counts_;
  std::vector<int> offsets_;
  std::vector<int> camera_of_class_;
  int total_ = 0;
};

enum class Split { train, query, gallery };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  Split split = Split::train;
  int d_in = 0;
  PersonIndex index;
  std::vector<Sample> samples;

  int n_cameras() const { return index.n_cameras(); }
  int size() const { return static_cast<int>(samples.size()); }
  int class_of(int sample) const;

  /// Throws ContractError on the first broken invariant.
  void validate() const;

  /// Sample indices grouped by class index.
  std::vector<std::vector<int>> samples_by_class() const;
  /// Hidden identity for every class, -1 when unknown.
  std::vector<int> class_truth() const;
  /// All raw features as a d_in x N matrix.
  Eigen::MatrixXd feature_matrix() const;

  bool operator==(const Dataset&) const = default;
};

/// Knobs of the synthetic multi-camera generator. Identities are drawn as
/// latent vectors; each camera applies its own affine distortion plus noise.
struct SynthSpec {
  int n_identities = 200;       // training identities
  int n_test_identities = 100;  // disjoint identities for query/gallery
  int n_cameras = 4;
  int d_latent = 8;
  int d_in = 32;
  int images_per_person = 4;
  // Every identity under every camera: three true cross-camera matches per
  // person, close to real multi-camera corpora. Sparser coverage leaves the
  // k = 6 neighbour lists mostly wrong.
  double camera_appearance_prob = 1.0;
  // Camera distortion larger than identity spread, so cross-camera matching
  // is the hard part. At 1.0 and above batch-hard mining collapses.
  double camera_transform_scale = 0.8;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCorpus {
  Dataset train;
  Dataset query;
  Dataset gallery;
};

SyntheticCorpus generate_synthetic(const SynthSpec& spec);

inline constexpr int kDatasetFormatVersion = 1;

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace pcsl
