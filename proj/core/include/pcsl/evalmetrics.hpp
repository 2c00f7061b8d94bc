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

#include <array>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pcsl/dataset.hpp"
#include "pcsl/embed.hpp"

namespace pcsl {

/// Single-query retrieval scores.
struct RetrievalResult {
  static constexpr std::array<int, 4> kRanks{1, 5, 10, 20};

  double mean_ap = 0.0;
  std::array<double, 4> cmc{};  // Rank-1/5/10/20
  int n_evaluated = 0;
  int n_skipped = 0;

  double rank1() const { return cmc[0]; }
};

/// Ranks the gallery for every query by ascending Euclidean distance (ties
/// by gallery order). Gallery items showing the query's identity under the
/// query's own camera are excluded. Queries without any remaining true
/// match are skipped and counted.
RetrievalResult evaluate(const EmbeddingModel& model, const Dataset& query, const Dataset& gallery);

/// Same protocol on precomputed embeddings (one column per sample).
RetrievalResult evaluate_embeddings(const Eigen::MatrixXd& query_embeddings, const Dataset& query,
                                    const Eigen::MatrixXd& gallery_embeddings,
                                    const Dataset& gallery);

nlohmann::json to_json(const RetrievalResult& r);
std::string to_text(const RetrievalResult& r);

}  // namespace pcsl
