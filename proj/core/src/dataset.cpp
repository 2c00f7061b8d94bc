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

#include "pcsl/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "pcsl/error.hpp"
#include "pcsl/rng.hpp"
#include "textio.hpp"

namespace pcsl {

PersonIndex::PersonIndex(std::vector<int> persons_per_camera)
    : counts_(std::move(persons_per_camera)) {
  offsets_.reserve(counts_.size());
  for (std::size_t cam = 0; cam < counts_.size(); ++cam) {
    if (counts_[cam] < 0) {
      throw ContractError("negative person count for camera " + std::to_string(cam));
    }
    offsets_.push_back(total_);
    total_ += counts_[cam];
    camera_of_class_.insert(camera_of_class_.end(), counts_[cam], static_cast<int>(cam));
  }
}

int PersonIndex::count(int camera) const {
  if (camera < 0 || camera >= n_cameras()) {
    throw ContractError("camera id " + std::to_string(camera) + " out of range");
  }
  return counts_[camera];
}

int PersonIndex::offset(int camera) const {
  if (camera < 0 || camera >= n_cameras()) {
    throw ContractError("camera id " + std::to_string(camera) + " out of range");
  }
  return offsets_[camera];
}

int PersonIndex::class_index(int camera, int local_person) const {
  if (local_person < 0 || local_person >= count(camera)) {
    throw ContractError("person " + std::to_string(local_person) +
                        " is not registered under camera " + std::to_string(camera));
  }
  return offsets_[camera] + local_person;
}

int PersonIndex::camera_of(int class_index) const {
  if (class_index < 0 || class_index >= total_) {
    throw ContractError("class index " + std::to_string(class_index) + " out of range");
  }
  return camera_of_class_[class_index];
}

std::pair<int, int> PersonIndex::person_of(int class_index) const {
  const int cam = camera_of(class_index);
  return {cam, class_index - offsets_[cam]};
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::query: return "query";
    case Split::gallery: return "gallery";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "query") return Split::query;
  if (name == "gallery") return Split::gallery;
  throw ParseError("unknown split '" + name + "'");
}

int Dataset::class_of(int sample) const {
  const auto& s = samples.at(sample);
  return index.class_index(s.camera_id, s.local_person_id);
}

void Dataset::validate() const {
  std::vector<int> truth(index.total(), -2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string where = "sample " + std::to_string(i);
    if (static_cast<int>(s.raw_feature.size()) != d_in) {
      throw DimensionError(where + ": feature length " +
                           std::to_string(s.raw_feature.size()) +
                           " != d_in " + std::to_string(d_in));
    }
    int cls = 0;
    try {
      cls = index.class_index(s.camera_id, s.local_person_id);
    } catch (const ContractError& e) {
      throw ContractError(where + ": " + e.what());
    }
    const int t = s.truth_identity.value_or(-1);
    if (truth[cls] == -2) {
      truth[cls] = t;
    } else if (truth[cls] != t) {
      throw ContractError(where + ": truth identity disagrees with other samples of its person");
    }
  }
}

std::vector<std::vector<int>> Dataset::samples_by_class() const {
  std::vector<std::vector<int>> groups(index.total());
  for (int i = 0; i < size(); ++i) groups[class_of(i)].push_back(i);
  return groups;
}

std::vector<int> Dataset::class_truth() const {
  std::vector<int> truth(index.total(), -1);
  for (int i = 0; i < size(); ++i) {
    if (samples[i].truth_identity) truth[class_of(i)] = *samples[i].truth_identity;
  }
  return truth;
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd x(d_in, size());
  for (int i = 0; i < size(); ++i) {
    x.col(i) = Eigen::Map<const Eigen::VectorXd>(samples[i].raw_feature.data(), d_in);
  }
  return x;
}

void SynthSpec::validate() const {
  if (n_cameras < 2) {
    throw ConfigError("n_cameras must be >= 2 for cross-camera learning, got " +
                      std::to_string(n_cameras));
  }
  if (images_per_person < 2) {
    throw ConfigError("images_per_person must be >= 2 to form positive pairs, got " +
                      std::to_string(images_per_person));
  }
  if (n_identities < 1) throw ConfigError("n_identities must be positive");
  if (n_test_identities < 0) throw ConfigError("n_test_identities must be nonnegative");
  if (d_latent < 1 || d_in < 1) throw ConfigError("d_latent and d_in must be positive");
  if (!(camera_appearance_prob >= 0.0 && camera_appearance_prob <= 1.0)) {
    throw ConfigError("camera_appearance_prob must lie in [0, 1]");
  }
  if (camera_appearance_prob == 0.0) {
    throw ConfigError("camera_appearance_prob must be > 0 so every identity can appear");
  }
  if (!(camera_transform_scale >= 0.0) || !(noise_sigma >= 0.0)) {
    throw ConfigError("camera_transform_scale and noise_sigma must be nonnegative");
  }
}

namespace {

struct CameraTransform {
  Eigen::MatrixXd linear;  // d_in x d_latent
  Eigen::VectorXd shift;   // d_in
};

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  // Fill in a fixed order so the stream consumption is explicit.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

std::vector<bool> draw_cameras(Rng& rng, const SynthSpec& spec, int min_cameras) {
  std::bernoulli_distribution appears(spec.camera_appearance_prob);
  std::vector<bool> present(spec.n_cameras);
  while (true) {
    int n = 0;
    for (int cam = 0; cam < spec.n_cameras; ++cam) {
      present[cam] = appears(rng);
      n += present[cam] ? 1 : 0;
    }
    if (n >= min_cameras) return present;
  }
}

// Assigns shuffled local ids per camera so local numbering carries no
// information about the hidden identity.
std::vector<std::vector<int>> assign_local_ids(
    Rng& rng, const std::vector<std::vector<bool>>& presence, int n_cameras,
    std::vector<int>& counts) {
  const int n_ids = static_cast<int>(presence.size());
  std::vector<std::vector<int>> local(n_ids, std::vector<int>(n_cameras, -1));
  counts.assign(n_cameras, 0);
  for (int cam = 0; cam < n_cameras; ++cam) {
    std::vector<int> members;
    for (int g = 0; g < n_ids; ++g)
      if (presence[g][cam]) members.push_back(g);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t slot = 0; slot < members.size(); ++slot) {
      local[members[slot]][cam] = static_cast<int>(slot);
    }
    counts[cam] = static_cast<int>(members.size());
  }
  return local;
}

Sample emit(Rng& rng, const SynthSpec& spec, const CameraTransform& t,
            const Eigen::VectorXd& latent, int cam, int local, int truth) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd x = t.linear * latent + t.shift;
  Sample s;
  s.raw_feature.resize(spec.d_in);
  for (int i = 0; i < spec.d_in; ++i) {
    const double eps = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
    s.raw_feature[i] = x(i) + eps;
  }
  s.camera_id = cam;
  s.local_person_id = local;
  s.truth_identity = truth;
  return s;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, stream::kSynthetic);

  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(spec.d_latent));
  const Eigen::MatrixXd base = gaussian_matrix(rng, spec.d_in, spec.d_latent, proj_scale);
  std::vector<CameraTransform> cams;
  for (int cam = 0; cam < spec.n_cameras; ++cam) {
    Eigen::MatrixXd r = gaussian_matrix(rng, spec.d_in, spec.d_latent, proj_scale);
    Eigen::MatrixXd b = gaussian_matrix(rng, spec.d_in, 1, 1.0);
    cams.push_back({base + spec.camera_transform_scale * r,
                    spec.camera_transform_scale * b.col(0)});
  }

  const int n_train = spec.n_identities;
  const int n_test = spec.n_test_identities;
  const Eigen::MatrixXd latents = gaussian_matrix(rng, spec.d_latent, n_train + n_test, 1.0);

  std::vector<std::vector<bool>> train_presence, test_presence;
  for (int g = 0; g < n_train; ++g) train_presence.push_back(draw_cameras(rng, spec, 1));
  // Test identities need a second camera so every query has a cross-camera match.
  for (int g = 0; g < n_test; ++g) test_presence.push_back(draw_cameras(rng, spec, 2));

  std::vector<int> train_counts, test_counts;
  const auto train_local = assign_local_ids(rng, train_presence, spec.n_cameras, train_counts);
  const auto test_local = assign_local_ids(rng, test_presence, spec.n_cameras, test_counts);

  SyntheticCorpus out;
  out.train.split = Split::train;
  out.query.split = Split::query;
  out.gallery.split = Split::gallery;
  out.train.d_in = out.query.d_in = out.gallery.d_in = spec.d_in;
  out.train.index = PersonIndex(train_counts);
  out.query.index = PersonIndex(test_counts);
  out.gallery.index = PersonIndex(test_counts);

  // Emit camera by camera, local id by local id, for a stable sample order.
  for (int cam = 0; cam < spec.n_cameras; ++cam) {
    std::vector<int> by_local(train_counts[cam]);
    for (int g = 0; g < n_train; ++g)
      if (train_local[g][cam] >= 0) by_local[train_local[g][cam]] = g;
    for (int local = 0; local < train_counts[cam]; ++local) {
      const int g = by_local[local];
      for (int img = 0; img < spec.images_per_person; ++img) {
        out.train.samples.push_back(emit(rng, spec, cams[cam], latents.col(g), cam, local, g));
      }
    }
  }
  for (int cam = 0; cam < spec.n_cameras; ++cam) {
    std::vector<int> by_local(test_counts[cam]);
    for (int g = 0; g < n_test; ++g)
      if (test_local[g][cam] >= 0) by_local[test_local[g][cam]] = g;
    for (int local = 0; local < test_counts[cam]; ++local) {
      const int g = by_local[local];
      const int truth = n_train + g;
      for (int img = 0; img < spec.images_per_person; ++img) {
        Sample s = emit(rng, spec, cams[cam], latents.col(n_train + g), cam, local, truth);
        (img == 0 ? out.query : out.gallery).samples.push_back(std::move(s));
      }
    }
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  textio::write_atomically(path, [&](std::ostream& out) {
    out << "pcsl-dataset " << kDatasetFormatVersion << '\n';
    out << "split " << to_string(dataset.split) << '\n';
    out << "d_in " << dataset.d_in << '\n';
    out << "cameras " << dataset.n_cameras();
    for (int c : dataset.index.counts()) out << ' ' << c;
    out << '\n';
    out << "samples " << dataset.size() << '\n';
    for (const auto& s : dataset.samples) {
      out << "s " << s.camera_id << ' ' << s.local_person_id << ' ';
      if (s.truth_identity) {
        out << *s.truth_identity;
      } else {
        out << '-';
      }
      for (double v : s.raw_feature) out << ' ' << textio::format_double(v);
      out << '\n';
    }
    out << "end\n";
  });
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  textio::LineReader reader(in, path.string());

  reader.require_next("header");
  reader.expect("pcsl-dataset", 1);
  const auto version = reader.int_at(1);
  if (version != kDatasetFormatVersion) {
    throw VersionError(reader.where() + ": dataset format version " +
                       std::to_string(version) + " is not supported (expected " +
                       std::to_string(kDatasetFormatVersion) + ")");
  }

  Dataset ds;
  reader.require_next("split");
  reader.expect("split", 1);
  try {
    ds.split = split_from_string(reader.tokens()[1]);
  } catch (const ParseError& e) {
    throw ParseError(reader.where() + ": " + e.what());
  }

  reader.require_next("d_in");
  reader.expect("d_in", 1);
  ds.d_in = static_cast<int>(reader.int_at(1));
  if (ds.d_in < 0) throw ParseError(reader.where() + ": negative d_in");

  reader.require_next("cameras");
  reader.expect_min("cameras", 1);
  const auto n_cams = reader.int_at(1);
  if (n_cams < 0) throw ParseError(reader.where() + ": negative camera count");
  reader.expect("cameras", static_cast<std::size_t>(n_cams) + 1);
  std::vector<int> counts;
  for (long long c = 0; c < n_cams; ++c) {
    const auto v = reader.int_at(c + 2);
    if (v < 0) throw ParseError(reader.where() + ": negative person count");
    counts.push_back(static_cast<int>(v));
  }
  ds.index = PersonIndex(counts);

  reader.require_next("samples");
  reader.expect("samples", 1);
  const auto n = reader.int_at(1);
  if (n < 0) throw ParseError(reader.where() + ": negative sample count");

  ds.samples.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    reader.require_next("sample record " + std::to_string(i));
    reader.expect("s", static_cast<std::size_t>(ds.d_in) + 3);
    Sample s;
    s.camera_id = static_cast<int>(reader.int_at(1));
    s.local_person_id = static_cast<int>(reader.int_at(2));
    if (reader.tokens()[3] != "-") s.truth_identity = static_cast<int>(reader.int_at(3));
    s.raw_feature.resize(ds.d_in);
    for (int k = 0; k < ds.d_in; ++k) s.raw_feature[k] = reader.double_at(k + 4);
    ds.samples.push_back(std::move(s));
  }
  reader.require_next("end marker");
  reader.expect("end", 0);

  try {
    ds.validate();
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace pcsl
