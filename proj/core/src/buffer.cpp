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

#include "pcsl/buffer.hpp"

#include <algorithm>
#include <numeric>

#include "pcsl/error.hpp"

namespace pcsl {

PersonBuffer::PersonBuffer(int dim, int classes) {
  if (dim < 1 || classes < 0) throw ContractError("invalid buffer shape");
  features_ = Eigen::MatrixXd::Zero(dim, classes);
  flags_.assign(classes, 0);
}

void PersonBuffer::update_person(int class_index, const Eigen::MatrixXd& batch_features) {
  if (class_index < 0 || class_index >= classes()) {
    throw ContractError("buffer update for unknown class " + std::to_string(class_index));
  }
  if (batch_features.cols() == 0) {
    throw ContractError("buffer update for class " + std::to_string(class_index) +
                        " with no features");
  }
  if (batch_features.rows() != dim()) {
    throw DimensionError("buffer holds " + std::to_string(dim()) +
                         "-d features, update has " + std::to_string(batch_features.rows()));
  }

  std::vector<Eigen::Index> order(batch_features.cols());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ca = batch_features.col(a);
    const auto cb = batch_features.col(b);
    return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
  });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  for (auto idx : order) sum += batch_features.col(idx);
  const Eigen::VectorXd mean = sum / static_cast<double>(batch_features.cols());

  if (flags_[class_index]) {
    features_.col(class_index) = 0.5 * (features_.col(class_index) + mean);
  } else {
    features_.col(class_index) = mean;
    flags_[class_index] = 1;
  }
}

void PersonBuffer::set_person(int class_index, const Eigen::VectorXd& feature) {
  if (class_index < 0 || class_index >= classes()) {
    throw ContractError("buffer write for unknown class " + std::to_string(class_index));
  }
  if (feature.size() != dim()) throw DimensionError("buffer feature has wrong dimension");
  features_.col(class_index) = feature;
  flags_[class_index] = 1;
}

bool PersonBuffer::initialized(int class_index) const {
  if (class_index < 0 || class_index >= classes()) {
    throw ContractError("unknown class " + std::to_string(class_index));
  }
  return flags_[class_index] != 0;
}

std::vector<int> PersonBuffer::uninitialized() const {
  std::vector<int> out;
  for (int i = 0; i < classes(); ++i)
    if (!flags_[i]) out.push_back(i);
  return out;
}

bool PersonBuffer::all_initialized() const {
  return std::all_of(flags_.begin(), flags_.end(), [](char f) { return f != 0; });
}

PersonBuffer PersonBuffer::restore(Eigen::MatrixXd features, std::vector<char> flags,
                                   long iteration) {
  if (static_cast<Eigen::Index>(flags.size()) != features.cols()) {
    throw ContractError("buffer flags do not match feature columns");
  }
  PersonBuffer b;
  b.features_ = std::move(features);
  b.flags_ = std::move(flags);
  b.iteration_ = iteration;
  return b;
}

bool PersonBuffer::operator==(const PersonBuffer& o) const {
  return features_.rows() == o.features_.rows() && features_.cols() == o.features_.cols() &&
         features_ == o.features_ && flags_ == o.flags_ && iteration_ == o.iteration_;
}

}  // namespace pcsl
