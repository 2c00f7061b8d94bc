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

// Independent reference implementations. They enumerate instead of
// optimise and share no code with the library beyond its data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "pcsl/evalmetrics.hpp"

namespace oracle {

inline double euclid(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a(i) - b(i)) * (a(i) - b(i));
  return std::sqrt(s);
}

/// Enumerates every (anchor, positive, negative) triple; per anchor keeps the
/// largest positive distance and the smallest negative distance.
inline double batch_hard_triplet(const Eigen::MatrixXd& emb, const std::vector<int>& person,
                                 double margin) {
  double total = 0.0;
  const int n = static_cast<int>(emb.cols());
  for (int a = 0; a < n; ++a) {
    double worst_pos = -1.0;
    double best_neg = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) {
        if (person[p] != person[a] || person[q] == person[a]) continue;
        worst_pos = std::max(worst_pos, euclid(emb.col(a), emb.col(p)));
        best_neg = std::min(best_neg, euclid(emb.col(a), emb.col(q)));
      }
    }
    total += std::max(0.0, margin + worst_pos - best_neg);
  }
  return total;
}

/// Linear scan; first minimum wins.
inline int hardest_negative(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& emb,
                            const std::vector<int>& person, int anchor_person) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(emb.cols()); ++j) {
    if (person[j] == anchor_person) continue;
    const double d = euclid(anchor, emb.col(j));
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

/// Dense affinity by enumeration: full candidate list per row, sorted by
/// (distance, index), first k kept.
inline Eigen::MatrixXd affinity(const Eigen::MatrixXd& p, const std::vector<int>& camera, int k,
                                bool mask, double* sigma_sq_out = nullptr) {
  const int n = static_cast<int>(p.cols());
  auto candidate = [&](int i, int j) { return i != j && (!mask || camera[i] != camera[j]); };
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (candidate(i, j)) {
        sum += std::pow(euclid(p.col(i), p.col(j)), 2);
        ++count;
      }
  const double sigma_sq = sum / count;
  if (sigma_sq_out) *sigma_sq_out = sigma_sq;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cands;
    for (int j = 0; j < n; ++j)
      if (candidate(i, j)) cands.emplace_back(std::pow(euclid(p.col(i), p.col(j)), 2), j);
    std::sort(cands.begin(), cands.end());
    for (int r = 0; r < k && r < static_cast<int>(cands.size()); ++r) {
      a(i, cands[r].second) = sigma_sq > 0 ? std::exp(-cands[r].first / sigma_sq) : 1.0;
    }
  }
  return a;
}

/// AP from the definition: mean over relevant ranks r of (hits in top r) / r.
inline double average_precision(const std::vector<char>& relevant) {
  double sum = 0.0;
  int hits_total = 0;
  for (std::size_t r = 0; r < relevant.size(); ++r) {
    if (!relevant[r]) continue;
    int hits = 0;
    for (std::size_t q = 0; q <= r; ++q) hits += relevant[q] ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    ++hits_total;
  }
  return hits_total ? sum / hits_total : 0.0;
}

/// Central difference of f along one coordinate of a parameter slot.
inline double central_difference(const std::function<double()>& f, double& slot, double step) {
  const double saved = slot;
  slot = saved + step;
  const double up = f();
  slot = saved - step;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * step);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

struct RetrievalScores {
  double map = 0.0;
  std::array<double, 4> cmc{};
  int evaluated = 0;
};

// Ranks by counting, for every eligible gallery item, how many others beat it.
inline RetrievalScores evaluate(const Eigen::MatrixXd& qe, const pcsl::Dataset& q,
                                const Eigen::MatrixXd& ge, const pcsl::Dataset& g) {
  RetrievalScores o;
  for (int i = 0; i < q.size(); ++i) {
    std::vector<int> eligible;
    for (int j = 0; j < g.size(); ++j) {
      const bool junk = g.samples[j].truth_identity == q.samples[i].truth_identity &&
                        g.samples[j].camera_id == q.samples[i].camera_id;
      if (!junk) eligible.push_back(j);
    }
    std::vector<char> relevant(eligible.size(), 0);
    for (int j : eligible) {
      const double dj = (qe.col(i) - ge.col(j)).squaredNorm();
      std::size_t rank = 0;
      for (int l : eligible) {
        const double dl = (qe.col(i) - ge.col(l)).squaredNorm();
        if (dl < dj || (dl == dj && l < j)) ++rank;
      }
      relevant[rank] = g.samples[j].truth_identity == q.samples[i].truth_identity;
    }
    const auto first = std::find(relevant.begin(), relevant.end(), 1);
    if (first == relevant.end()) continue;
    ++o.evaluated;
    o.map += average_precision(relevant);
    const auto pos = first - relevant.begin();
    for (int r = 0; r < 4; ++r) o.cmc[r] += pos < pcsl::RetrievalResult::kRanks[r] ? 1.0 : 0.0;
  }
  o.map /= o.evaluated;
  for (auto& c : o.cmc) c /= o.evaluated;
  return o;
}

}  // namespace oracle
