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

#include "pcsl/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "pcsl/error.hpp"
#include "pcsl/ranking.hpp"
#include "textio.hpp"

namespace pcsl {

int AffinityMatrix::nonzeros_in_row(int row) const {
  int n = 0;
  for (Eigen::Index j = 0; j < values.cols(); ++j) n += values(row, j) != 0.0 ? 1 : 0;
  return n;
}

AffinityMatrix build_affinity(const PersonBuffer& buffer, const PersonIndex& index, int k,
                              bool mask_same_camera, int epoch) {
  const int n = index.total();
  if (buffer.classes() != n) {
    throw DimensionError("buffer has " + std::to_string(buffer.classes()) +
                         " columns but the index has " + std::to_string(n) + " persons");
  }
  if (k < 1) throw ContractError("k must be >= 1");

  int populated_cameras = 0;
  for (int c : index.counts()) populated_cameras += c > 0 ? 1 : 0;
  if (populated_cameras < 2) {
    throw ContractError("affinity needs persons from at least two cameras; found " +
                        std::to_string(populated_cameras));
  }

  if (const auto missing = buffer.uninitialized(); !missing.empty()) {
    std::ostringstream msg;
    msg << "buffer columns not initialised:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
    if (missing.size() > 20) msg << " ... (" << missing.size() << " total)";
    throw ContractError(msg.str());
  }

  const Eigen::MatrixXd& p = buffer.features();
  std::vector<int> camera(n);
  for (int i = 0; i < n; ++i) camera[i] = index.camera_of(i);
  auto is_candidate = [&](int i, int j) {
    return i != j && (!mask_same_camera || camera[i] != camera[j]);
  };

  Eigen::MatrixXd dist_sq = Eigen::MatrixXd::Zero(n, n);
  double total = 0.0;
  long pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!is_candidate(i, j)) continue;
      const double d = (p.col(i) - p.col(j)).squaredNorm();
      dist_sq(i, j) = d;
      total += d;
      ++pairs;
    }
  }

  AffinityMatrix a;
  a.values = Eigen::MatrixXd::Zero(n, n);
  a.k = k;
  a.epoch_built = epoch;
  a.mask_same_camera = mask_same_camera;
  a.sigma_sq = total / static_cast<double>(pairs);
  a.sigma_degenerate = !(a.sigma_sq > 0.0);

  std::vector<int> cand;
  cand.reserve(n);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j)
      if (is_candidate(i, j)) cand.push_back(j);
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      [&](int x, int y) {
                        if (dist_sq(i, x) != dist_sq(i, y)) return dist_sq(i, x) < dist_sq(i, y);
                        return x < y;
                      });
    for (std::size_t r = 0; r < keep; ++r) {
      const int j = cand[r];
      a.values(i, j) = a.sigma_degenerate ? 1.0 : std::exp(-dist_sq(i, j) / a.sigma_sq);
    }
  }
  return a;
}

double SoftLabelRow::weight_of(int c) const {
  auto it = std::lower_bound(weights.begin(), weights.end(), c,
                             [](const auto& w, int v) { return w.first < v; });
  return it != weights.end() && it->first == c ? it->second : 0.0;
}

Eigen::VectorXd SoftLabelRow::dense(int classes) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(classes);
  for (const auto& [c, v] : weights) w(c) = v;
  return w;
}

std::vector<SoftLabelRow> soft_label_rows(const AffinityMatrix& affinity, bool include_self) {
  const int n = affinity.classes();
  std::vector<SoftLabelRow> rows(n);
  for (int i = 0; i < n; ++i) {
    auto& row = rows[i];
    row.class_index = i;
    auto value = [&](int j) {
      return include_self && j == i ? 1.0 : affinity.values(i, j);
    };
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += value(j);
    if (!(sum > 0.0)) {
      row.degenerate = true;
      continue;
    }
    for (int j = 0; j < n; ++j) {
      if (value(j) != 0.0) row.weights.emplace_back(j, value(j) / sum);
    }
  }
  return rows;
}

double affinity_quality_map(const AffinityMatrix& affinity, const PersonIndex& index,
                            std::span<const int> class_truth) {
  const int n = affinity.classes();
  if (index.total() != n || static_cast<int>(class_truth.size()) != n) {
    throw DimensionError("affinity, index and truth table disagree on the person count");
  }
  double sum = 0.0;
  int rows = 0;
  std::vector<int> order;
  std::vector<char> relevant;
  for (int i = 0; i < n; ++i) {
    if (class_truth[i] < 0) continue;
    order.clear();
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (index.camera_of(j) == index.camera_of(i) || class_truth[j] < 0) continue;
      order.push_back(j);
      any = any || class_truth[j] == class_truth[i];
    }
    if (!any) continue;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return affinity.values(i, x) > affinity.values(i, y);
    });
    relevant.assign(order.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r)
      relevant[r] = class_truth[order[r]] == class_truth[i] ? 1 : 0;
    sum += average_precision(relevant);
    ++rows;
  }
  if (rows == 0) throw ContractError("no person has a cross-camera true match");
  return sum / rows;
}

std::string affinity_triplets(const AffinityMatrix& affinity) {
  std::ostringstream out;
  out << "# row col value\n";
  for (int i = 0; i < affinity.classes(); ++i)
    for (int j = 0; j < affinity.classes(); ++j)
      if (affinity.values(i, j) != 0.0)
        out << i << ' ' << j << ' ' << textio::format_double(affinity.values(i, j)) << '\n';
  return out.str();
}

}  // namespace pcsl
