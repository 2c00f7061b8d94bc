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

// Finite-difference checks of every loss composed with the embedding model
// (and, for the cross-entropy, the classifier head).

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pcsl/affinity.hpp"
#include "pcsl/embed.hpp"
#include "pcsl/losses.hpp"
#include "pcsl/rng.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;
inline constexpr int kCoordinates = 20;

struct Outcome {
  double max_relative_error = 0.0;
  int coordinates = 0;
  int excused = 0;                     // over tolerance but inside the roundoff band
  double largest_excused_gradient = 0.0;  // largest |analytic| among them
};

struct Slot {
  double* value;
  double analytic;
};

inline void collect(std::vector<Slot>& out, Eigen::MatrixXd& p, const Eigen::MatrixXd& g) {
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back({p.data() + i, g.data()[i]});
}
inline void collect(std::vector<Slot>& out, Eigen::VectorXd& p, const Eigen::VectorXd& g) {
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back({p.data() + i, g.data()[i]});
}

// A difference quotient cannot resolve anything below the rounding error of
// the two loss evaluations, about 2 eps |L| / step. Disagreements inside that
// band are excused when they exceed the tolerance; this matters for
// coordinates whose true gradient is exactly zero, such as the output bias
// under a translation-invariant loss. Every other coordinate is judged on its
// relative error.
inline double roundoff_band(double loss_value) {
  return 2.0 * std::numeric_limits<double>::epsilon() * std::abs(loss_value) / kStep;
}

inline Outcome compare(std::vector<Slot>& slots, const std::function<double()>& loss,
                       pcsl::Rng& rng) {
  Outcome o;
  const double band = roundoff_band(loss());
  for (int c = 0; c < kCoordinates; ++c) {
    Slot& s = slots[static_cast<std::size_t>(pcsl::uniform_index(rng, static_cast<int>(slots.size())))];
    const double numeric = oracle::central_difference(loss, *s.value, kStep);
    const double err = oracle::relative_error(s.analytic, numeric);
    if (err > kTolerance && std::abs(s.analytic - numeric) <= band) {
      ++o.excused;
      o.largest_excused_gradient = std::max(o.largest_excused_gradient, std::abs(s.analytic));
    } else {
      o.max_relative_error = std::max(o.max_relative_error, err);
    }
    ++o.coordinates;
  }
  return o;
}

inline Eigen::MatrixXd random_matrix(int r, int c, pcsl::Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Batch-hard intra-camera triplet loss through the MLP.
inline Outcome intra_triplet(std::uint64_t seed) {
  pcsl::Rng rng(seed);
  auto model = pcsl::EmbeddingModel::he_init(6, 9, 4, rng);
  const Eigen::MatrixXd x = random_matrix(6, 8, rng);
  const std::vector<int> person{0, 0, 1, 1, 2, 2, 3, 3};
  const double margin = 2.0;  // keeps most hinges active
  auto loss = [&] {
    return pcsl::intra_triplet_loss({pcsl::embed(model, x), person, 0}, margin).loss;
  };
  const auto cache = pcsl::forward_batch(model, x);
  const auto lv = pcsl::intra_triplet_loss({cache.output, person, 0}, margin);
  const auto g = pcsl::backward(model, cache, lv.grad).params;
  std::vector<Slot> slots;
  collect(slots, model.w1, g.w1);
  collect(slots, model.b1, g.b1);
  collect(slots, model.w2, g.w2);
  collect(slots, model.b2, g.b2);
  return compare(slots, loss, rng);
}

/// Weighted cross-entropy through the MLP and the classifier head.
inline Outcome weighted_cross_entropy(std::uint64_t seed) {
  pcsl::Rng rng(seed);
  const int classes = 6;
  auto model = pcsl::EmbeddingModel::he_init(5, 8, 4, rng);
  auto head = pcsl::ClassifierHead::he_init(classes, 4, rng);
  const Eigen::MatrixXd x = random_matrix(5, 3, rng);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<pcsl::SoftLabelRow> rows(3);
  for (int b = 0; b < 3; ++b) {
    rows[b].class_index = b;
    double sum = 0.0;
    std::vector<double> w(classes, 0.0);
    for (int c = 0; c < classes; ++c) {
      if (c == b || c % 2 == b % 2) continue;  // own class and a few others stay zero
      w[c] = u(rng);
      sum += w[c];
    }
    for (int c = 0; c < classes; ++c)
      if (w[c] > 0) rows[b].weights.emplace_back(c, w[c] / sum);
  }
  auto loss = [&] {
    const Eigen::MatrixXd s = head.scores(pcsl::embed(model, x));
    double total = 0.0;
    for (int b = 0; b < 3; ++b)
      total += pcsl::weighted_cross_entropy(pcsl::softmax_probs(s.col(b)), rows[b]).loss;
    return total;
  };
  const auto cache = pcsl::forward_batch(model, x);
  const Eigen::MatrixXd scores = head.scores(cache.output);
  Eigen::MatrixXd score_grads(classes, 3);
  for (int b = 0; b < 3; ++b)
    score_grads.col(b) = pcsl::weighted_cross_entropy(pcsl::softmax_probs(scores.col(b)), rows[b]).grad;
  const auto hb = pcsl::head_backward(head, cache.output, score_grads);
  const auto g = pcsl::backward(model, cache, hb.embedding_grads).params;
  std::vector<Slot> slots;
  collect(slots, model.w1, g.w1);
  collect(slots, model.b1, g.b1);
  collect(slots, model.w2, g.w2);
  collect(slots, model.b2, g.b2);
  collect(slots, head.weight, hb.params.weight);
  collect(slots, head.bias, hb.params.bias);
  return compare(slots, loss, rng);
}

/// Weighted triplet loss (anchor, three weighted positives, negative)
/// through the MLP.
inline Outcome weighted_triplet(std::uint64_t seed) {
  pcsl::Rng rng(seed);
  auto model = pcsl::EmbeddingModel::he_init(5, 8, 4, rng);
  const Eigen::MatrixXd x = random_matrix(5, 5, rng);  // anchor, 3 positives, negative
  const std::vector<double> w{0.5, 0.3, 0.2};
  const double margin = 3.0;
  auto eval = [&](const Eigen::MatrixXd& v) {
    return pcsl::weighted_triplet_loss(v.col(0), v.middleCols(1, 3), w, v.col(4), margin);
  };
  auto loss = [&] { return eval(pcsl::embed(model, x)).loss; };
  const auto cache = pcsl::forward_batch(model, x);
  const auto lv = eval(cache.output);
  const auto g = pcsl::backward(model, cache, lv.grad).params;
  std::vector<Slot> slots;
  collect(slots, model.w1, g.w1);
  collect(slots, model.b1, g.b1);
  collect(slots, model.w2, g.w2);
  collect(slots, model.b2, g.b2);
  return compare(slots, loss, rng);
}

inline const std::vector<std::uint64_t>& seeds() {
  static const std::vector<std::uint64_t> s{11, 23, 37, 41, 53};
  return s;
}

}  // namespace gradcheck
