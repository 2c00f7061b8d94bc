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

#include "pcsl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pcsl/error.hpp"

namespace pcsl {

namespace {

// d/da ||a - b||, taken as zero where the norm vanishes.
Eigen::VectorXd distance_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dist) {
  if (dist > 0.0) return (a - b) / dist;
  return Eigen::VectorXd::Zero(a.size());
}

void check_pk_shape(const TripletBatch& batch) {
  if (static_cast<int>(batch.person.size()) != batch.size()) {
    throw ContractError("triplet batch has " + std::to_string(batch.person.size()) +
                        " labels for " + std::to_string(batch.size()) + " embeddings");
  }
  std::map<int, int> per_person;
  for (int p : batch.person) ++per_person[p];
  if (per_person.size() < 2) throw ContractError("triplet batch needs at least two persons");
  const int k = per_person.begin()->second;
  for (const auto& [p, n] : per_person) {
    if (n != k) throw ContractError("triplet batch persons have unequal sample counts");
  }
  if (k < 2) throw ContractError("triplet batch needs at least two samples per person");
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& e) {
  const auto n = e.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (e.col(i) - e.col(j)).norm();
  return d;
}

void add_triplet(LossValue& out, const TripletBatch& batch, const Eigen::MatrixXd& dist,
                 int a, int p, int n, double margin) {
  const double hinge = margin + dist(a, p) - dist(a, n);
  if (!(hinge > 0.0)) return;
  out.loss += hinge;
  ++out.active;
  const Eigen::VectorXd va = batch.embeddings.col(a);
  const Eigen::VectorXd gp = distance_grad(va, batch.embeddings.col(p), dist(a, p));
  const Eigen::VectorXd gn = distance_grad(va, batch.embeddings.col(n), dist(a, n));
  out.grad.col(a) += gp - gn;
  out.grad.col(p) -= gp;
  out.grad.col(n) += gn;
}

}  // namespace

LossValue intra_triplet_loss(const TripletBatch& batch, double margin) {
  check_pk_shape(batch);
  const int n = batch.size();
  const Eigen::MatrixXd dist = pairwise_distances(batch.embeddings);
  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(batch.embeddings.rows(), n);
  for (int a = 0; a < n; ++a) {
    int pos = -1;
    int neg = -1;
    for (int j = 0; j < n; ++j) {
      if (batch.person[j] == batch.person[a]) {
        if (pos < 0 || dist(a, j) > dist(a, pos)) pos = j;
      } else if (neg < 0 || dist(a, j) < dist(a, neg)) {
        neg = j;
      }
    }
    add_triplet(out, batch, dist, a, pos, neg, margin);
  }
  return out;
}

LossValue random_triplet_loss(const TripletBatch& batch, double margin, Rng& rng) {
  check_pk_shape(batch);
  const int n = batch.size();
  const Eigen::MatrixXd dist = pairwise_distances(batch.embeddings);
  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(batch.embeddings.rows(), n);
  std::vector<int> same, other;
  for (int a = 0; a < n; ++a) {
    same.clear();
    other.clear();
    for (int j = 0; j < n; ++j) {
      if (batch.person[j] != batch.person[a]) {
        other.push_back(j);
      } else if (j != a) {
        same.push_back(j);
      }
    }
    const int pos = same[uniform_index(rng, static_cast<int>(same.size()))];
    const int neg = other[uniform_index(rng, static_cast<int>(other.size()))];
    add_triplet(out, batch, dist, a, pos, neg, margin);
  }
  return out;
}

Eigen::VectorXd softmax_probs(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) return scores;
  const Eigen::ArrayXd shifted = (scores.array() - scores.maxCoeff()).exp();
  return (shifted / shifted.sum()).matrix();
}

LossValue weighted_cross_entropy(const Eigen::VectorXd& probs, const SoftLabelRow& row) {
  if (row.degenerate) {
    throw ContractError("weighted cross-entropy on degenerate soft-label row " +
                        std::to_string(row.class_index));
  }
  LossValue out;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(probs.size());
  for (const auto& [c, w] : row.weights) {
    if (c < 0 || c >= probs.size()) throw DimensionError("soft-label class outside score range");
    target(c) = w;
    double p = probs(c);
    if (p < kLogProbabilityFloor) {
      p = kLogProbabilityFloor;
      ++out.clamped;
    }
    out.loss -= w * std::log(p);
  }
  if (row.class_index >= 0 && row.class_index < probs.size() && target(row.class_index) == 0.0) {
    ++out.own_class_zero;
  }
  out.grad = probs - target;
  out.active = 1;
  return out;
}

std::optional<std::vector<PositiveDraw>> select_positives(
    int anchor_class, const AffinityMatrix& affinity,
    const std::vector<std::vector<int>>& samples_by_class, int n_k, WeightingMode weighting,
    PositiveSampling sampling, Rng& rng) {
  if (n_k < 1) throw ContractError("n_k must be positive");
  if (anchor_class < 0 || anchor_class >= affinity.classes()) {
    throw ContractError("anchor class " + std::to_string(anchor_class) + " out of range");
  }
  std::vector<int> neighbours;
  for (int j = 0; j < affinity.classes(); ++j) {
    if (affinity.values(anchor_class, j) != 0.0 && j < static_cast<int>(samples_by_class.size()) &&
        !samples_by_class[j].empty()) {
      neighbours.push_back(j);
    }
  }
  if (neighbours.empty()) return std::nullopt;

  std::vector<int> chosen;
  const int available = static_cast<int>(neighbours.size());
  if (sampling == PositiveSampling::nearest) {
    std::stable_sort(neighbours.begin(), neighbours.end(), [&](int x, int y) {
      return affinity.values(anchor_class, x) > affinity.values(anchor_class, y);
    });
    for (int i = 0; i < n_k; ++i) chosen.push_back(neighbours[i % available]);
  } else if (available >= n_k) {
    for (int i = 0; i < n_k; ++i) {
      const int pick = i + uniform_index(rng, available - i);
      std::swap(neighbours[i], neighbours[pick]);
      chosen.push_back(neighbours[i]);
    }
  } else {
    for (int i = 0; i < n_k; ++i) chosen.push_back(neighbours[uniform_index(rng, available)]);
  }

  std::vector<PositiveDraw> draws;
  double total = 0.0;
  for (int c : chosen) {
    const auto& pool = samples_by_class[c];
    const int s = pool[uniform_index(rng, static_cast<int>(pool.size()))];
    const double a = affinity.values(anchor_class, c);
    draws.push_back({c, s, a});
    total += a;
  }
  for (auto& d : draws) {
    d.weight = weighting == WeightingMode::average ? 1.0 / n_k : d.weight / total;
  }
  return draws;
}

std::optional<int> select_hardest_negative(const Eigen::VectorXd& anchor,
                                           const TripletBatch& batch, int anchor_person) {
  if (anchor.size() != batch.embeddings.rows()) {
    throw DimensionError("anchor dimension does not match batch embeddings");
  }
  std::optional<int> best;
  double best_dist = 0.0;
  for (int j = 0; j < batch.size(); ++j) {
    if (batch.person[j] == anchor_person) continue;
    const double d = (batch.embeddings.col(j) - anchor).norm();
    if (!best || d < best_dist) {
      best = j;
      best_dist = d;
    }
  }
  return best;
}

std::optional<int> select_random_negative(const TripletBatch& batch, int anchor_person,
                                          Rng& rng) {
  std::vector<int> other;
  for (int j = 0; j < batch.size(); ++j)
    if (batch.person[j] != anchor_person) other.push_back(j);
  if (other.empty()) return std::nullopt;
  return other[uniform_index(rng, static_cast<int>(other.size()))];
}

LossValue weighted_triplet_loss(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& positives,
                                const std::vector<double>& weights,
                                const Eigen::VectorXd& negative, double margin) {
  const auto n_pos = positives.cols();
  if (static_cast<Eigen::Index>(weights.size()) != n_pos || n_pos == 0) {
    throw ContractError("weighted triplet needs one weight per positive");
  }
  if (positives.rows() != anchor.size() || negative.size() != anchor.size()) {
    throw DimensionError("weighted triplet embeddings disagree in dimension");
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-9) throw ContractError("positive weights must sum to 1");

  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(anchor.size(), n_pos + 2);
  std::vector<double> dist(n_pos);
  double weighted = 0.0;
  for (Eigen::Index p = 0; p < n_pos; ++p) {
    dist[p] = (anchor - positives.col(p)).norm();
    weighted += weights[p] * dist[p];
  }
  const double dn = (anchor - negative).norm();
  const double hinge = weighted - dn + margin;
  if (!(hinge > 0.0)) return out;

  out.loss = hinge;
  out.active = 1;
  for (Eigen::Index p = 0; p < n_pos; ++p) {
    const Eigen::VectorXd g = weights[p] * distance_grad(anchor, positives.col(p), dist[p]);
    out.grad.col(0) += g;
    out.grad.col(p + 1) -= g;
  }
  const Eigen::VectorXd gn = distance_grad(anchor, negative, dn);
  out.grad.col(0) -= gn;
  out.grad.col(n_pos + 1) += gn;
  return out;
}

}  // namespace pcsl
