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

#include "pcsl/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pcsl/error.hpp"

namespace pcsl {

namespace {

const std::vector<std::pair<AblationAxis, std::string>>& axis_names() {
  static const std::vector<std::pair<AblationAxis, std::string>> names = {
      {AblationAxis::inter_mode, "inter_mode"},
      {AblationAxis::mining_mode, "mining_mode"},
      {AblationAxis::mask_same_camera, "mask_same_camera"},
      {AblationAxis::positive_sampling, "positive_sampling"},
      {AblationAxis::weighting_mode, "weighting_mode"},
      {AblationAxis::lambda_sweep, "lambda_sweep"},
      {AblationAxis::k_sweep, "k_sweep"},
  };
  return names;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::string to_string(AblationAxis axis) {
  for (const auto& [a, n] : axis_names())
    if (a == axis) return n;
  return "inter_mode";
}

AblationAxis axis_from_string(const std::string& name) {
  for (const auto& [a, n] : axis_names())
    if (n == name) return a;
  throw ConfigError("unknown ablation axis '" + name + "'");
}

std::vector<AblationSetting> ablation_settings(const TrainConfig& base, AblationAxis axis) {
  std::vector<AblationSetting> out;
  auto with = [&](std::string label, auto&& mutate) {
    TrainConfig c = base;
    mutate(c);
    out.push_back({std::move(label), c});
  };
  switch (axis) {
    case AblationAxis::inter_mode:
      with("only-intra (lambda=0)", [](TrainConfig& c) { c.lambda = 0.0; });
      with("C", [](TrainConfig& c) { c.inter_mode = InterMode::classification; });
      with("D", [](TrainConfig& c) { c.inter_mode = InterMode::discrimination; });
      with("C+D", [](TrainConfig& c) { c.inter_mode = InterMode::both; });
      break;
    case AblationAxis::mining_mode:
      with("hard", [](TrainConfig& c) { c.mining_mode = MiningMode::hard; });
      with("random", [](TrainConfig& c) { c.mining_mode = MiningMode::random; });
      break;
    case AblationAxis::mask_same_camera:
      with("mask same-camera (w/o IDs-SC)", [](TrainConfig& c) { c.mask_same_camera = true; });
      with("no mask (w IDs-SC)", [](TrainConfig& c) { c.mask_same_camera = false; });
      break;
    case AblationAxis::positive_sampling:
      with("random from kNN", [](TrainConfig& c) { c.positive_sampling = PositiveSampling::random_knn; });
      with("nearest", [](TrainConfig& c) { c.positive_sampling = PositiveSampling::nearest; });
      break;
    case AblationAxis::weighting_mode:
      with("AW", [](TrainConfig& c) { c.weighting_mode = WeightingMode::average; });
      with("W", [](TrainConfig& c) { c.weighting_mode = WeightingMode::affinity; });
      break;
    case AblationAxis::lambda_sweep:
      for (double l : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        with("lambda=" + format_number(l), [l](TrainConfig& c) { c.lambda = l; });
      }
      break;
    case AblationAxis::k_sweep:
      for (int k : {1, 2, 4, 6, 8, 12}) {
        with("k=" + std::to_string(k), [k](TrainConfig& c) { c.k = k; });
      }
      break;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty list");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SynthSpec benchmark_spec(std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  return s;
}

double AblationRow::median_map() const {
  std::vector<double> v;
  for (const auto& r : results) v.push_back(r.mean_ap);
  return median(v);
}

double AblationRow::median_rank1() const {
  std::vector<double> v;
  for (const auto& r : results) v.push_back(r.rank1());
  return median(v);
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  out << "axis: " << pcsl::to_string(axis) << '\n';
  char line[256];
  std::snprintf(line, sizeof(line), "%-32s %10s %12s %6s\n", "setting", "median_mAP",
                "median_rank1", "seeds");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-32s %10.4f %12.4f %6zu\n", r.label.c_str(), r.median_map(),
                  r.median_rank1(), r.seeds.size());
    out << line;
  }
  return out.str();
}

nlohmann::json AblationTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < r.results.size(); ++i) {
      runs.push_back({{"seed", r.seeds[i]}, {"result", pcsl::to_json(r.results[i])}});
    }
    rows_json.push_back({{"label", r.label},
                         {"config", pcsl::to_json(r.config)},
                         {"median_mAP", r.median_map()},
                         {"median_rank1", r.median_rank1()},
                         {"runs", runs}});
  }
  return {{"axis", pcsl::to_string(axis)}, {"rows", rows_json}};
}

AblationTable run_ablation(const Dataset& train_set, const Dataset& query, const Dataset& gallery,
                           const TrainConfig& base, AblationAxis axis,
                           std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  AblationTable table;
  table.axis = axis;
  for (const auto& setting : ablation_settings(base, axis)) {
    AblationRow row;
    row.label = setting.label;
    row.config = setting.config;
    for (const auto seed : seeds) {
      TrainConfig cfg = setting.config;
      cfg.seed = seed;
      TrainHooks hooks;
      hooks.record_wall_time = true;
      auto trained = train(train_set, cfg, Validation{&query, &gallery}, hooks);
      row.seeds.push_back(seed);
      row.results.push_back(evaluate(trained.state.model, query, gallery));
      row.logs.push_back(std::move(trained.log));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace pcsl
