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

#include "pcsl/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pcsl/error.hpp"
#include "pcsl/ranking.hpp"

namespace pcsl {

RetrievalResult evaluate(const EmbeddingModel& model, const Dataset& query, const Dataset& gallery) {
  if (query.d_in != gallery.d_in) {
    throw DimensionError("query and gallery feature lengths differ (" +
                         std::to_string(query.d_in) + " vs " + std::to_string(gallery.d_in) + ")");
  }
  return evaluate_embeddings(embed(model, query.feature_matrix()), query,
                             embed(model, gallery.feature_matrix()), gallery);
}

RetrievalResult evaluate_embeddings(const Eigen::MatrixXd& query_embeddings, const Dataset& query,
                                    const Eigen::MatrixXd& gallery_embeddings,
                                    const Dataset& gallery) {
  if (query_embeddings.cols() != query.size() || gallery_embeddings.cols() != gallery.size()) {
    throw DimensionError("embedding count does not match sample count");
  }
  if (query_embeddings.rows() != gallery_embeddings.rows()) {
    throw DimensionError("query and gallery embeddings differ in dimension");
  }
  for (const auto* ds : {&query, &gallery}) {
    for (const auto& s : ds->samples) {
      if (!s.truth_identity) throw ContractError("evaluation needs truth identities on every sample");
    }
  }

  RetrievalResult result;
  std::vector<int> order;
  std::vector<double> dist(gallery.size());
  std::vector<char> relevant;
  for (int q = 0; q < query.size(); ++q) {
    const auto& qs = query.samples[q];
    order.clear();
    for (int g = 0; g < gallery.size(); ++g) {
      const auto& gs = gallery.samples[g];
      if (gs.truth_identity == qs.truth_identity && gs.camera_id == qs.camera_id) continue;
      dist[g] = (gallery_embeddings.col(g) - query_embeddings.col(q)).squaredNorm();
      order.push_back(g);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
    relevant.assign(order.size(), 0);
    int first_hit = -1;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery.samples[order[r]].truth_identity == qs.truth_identity) {
        relevant[r] = 1;
        if (first_hit < 0) first_hit = static_cast<int>(r);
      }
    }
    if (first_hit < 0) {
      ++result.n_skipped;
      continue;
    }
    ++result.n_evaluated;
    result.mean_ap += average_precision(relevant);
    for (std::size_t i = 0; i < RetrievalResult::kRanks.size(); ++i) {
      if (first_hit < RetrievalResult::kRanks[i]) result.cmc[i] += 1.0;
    }
  }
  if (result.n_evaluated == 0) throw ContractError("no query has an eligible true match in the gallery");
  result.mean_ap /= result.n_evaluated;
  for (auto& c : result.cmc) c /= result.n_evaluated;
  return result;
}

nlohmann::json to_json(const RetrievalResult& r) {
  return {{"mAP", r.mean_ap},
          {"rank1", r.cmc[0]},
          {"rank5", r.cmc[1]},
          {"rank10", r.cmc[2]},
          {"rank20", r.cmc[3]},
          {"n_queries", r.n_evaluated},
          {"n_skipped", r.n_skipped}};
}

std::string to_text(const RetrievalResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-8s %-8s %-8s %-8s %-8s %-9s %-9s\n%-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-9d %-9d\n",
                "mAP", "rank1", "rank5", "rank10", "rank20", "queries", "skipped", r.mean_ap,
                r.cmc[0], r.cmc[1], r.cmc[2], r.cmc[3], r.n_evaluated, r.n_skipped);
  return buf;
}

}  // namespace pcsl
