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

#include "pcsl/config.hpp"

#include <functional>
#include <map>

#include "pcsl/error.hpp"

namespace pcsl {

std::string to_string(InterMode m) {
  switch (m) {
    case InterMode::classification: return "C";
    case InterMode::discrimination: return "D";
    case InterMode::both: return "C+D";
  }
  return "D";
}

std::string to_string(WeightingMode m) {
  return m == WeightingMode::average ? "AW" : "W";
}

std::string to_string(MiningMode m) { return m == MiningMode::hard ? "hard" : "random"; }

std::string to_string(PositiveSampling m) {
  return m == PositiveSampling::random_knn ? "random" : "nearest";
}

void TrainConfig::validate() const {
  if (n_p < 2) throw ConfigError("n_p must be >= 2");
  if (n_k < 2) throw ConfigError("n_k must be >= 2");
  if (!(margin >= 0.0)) throw ConfigError("margin must be nonnegative");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > epochs) {
    throw ConfigError("warmup_epochs must lie in [0, epochs]");
  }
  if (hidden_dim < 1 || embed_dim < 1) throw ConfigError("hidden_dim and embed_dim must be >= 1");
  if (classification_budget < 1) throw ConfigError("classification_budget must be >= 1");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  optimizer.validate();
}

bool TrainConfig::operator==(const TrainConfig& o) const { return to_json(*this) == to_json(o); }

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"n_p", c.n_p},
      {"n_k", c.n_k},
      {"margin", c.margin},
      {"lambda", c.lambda},
      {"k", c.k},
      {"epochs", c.epochs},
      {"warmup_epochs", c.warmup_epochs},
      {"hidden_dim", c.hidden_dim},
      {"embed_dim", c.embed_dim},
      {"lr_pretrained", c.optimizer.learning_rate_pretrained},
      {"lr_new", c.optimizer.learning_rate_new},
      {"momentum", c.optimizer.momentum},
      {"weight_decay", c.optimizer.weight_decay},
      {"decay_epoch", c.optimizer.decay_epoch},
      {"decay_factor", c.optimizer.decay_factor},
      {"classification_budget", c.classification_budget},
      {"inter_mode", to_string(c.inter_mode)},
      {"weighting_mode", to_string(c.weighting_mode)},
      {"mining_mode", to_string(c.mining_mode)},
      {"mask_same_camera", c.mask_same_camera},
      {"positive_sampling", to_string(c.positive_sampling)},
      {"self_class_target", c.self_class_target},
      {"eval_every", c.eval_every},
      {"seed", c.seed},
  };
}

namespace {

using Setter = std::function<void(TrainConfig&, const nlohmann::json&)>;

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError("key '" + key + "' expects true/false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError("key '" + key + "' expects an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
        throw ConfigError("key '" + key + "' expects a nonnegative integer");
      }
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError("key '" + key + "' expects a number");
  } else {
    if (!v.is_string()) throw ConfigError("key '" + key + "' expects a string");
  }
  return v.get<T>();
}

template <typename E>
E parse_enum(const nlohmann::json& v, const std::string& key,
             const std::map<std::string, E>& names) {
  const auto s = get_as<std::string>(v, key);
  const auto it = names.find(s);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ConfigError("key '" + key + "' has invalid value '" + s + "' (allowed: " + allowed + ")");
  }
  return it->second;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_p", [](TrainConfig& c, const auto& v) { c.n_p = get_as<int>(v, "n_p"); }},
      {"n_k", [](TrainConfig& c, const auto& v) { c.n_k = get_as<int>(v, "n_k"); }},
      {"margin", [](TrainConfig& c, const auto& v) { c.margin = get_as<double>(v, "margin"); }},
      {"lambda", [](TrainConfig& c, const auto& v) { c.lambda = get_as<double>(v, "lambda"); }},
      {"k", [](TrainConfig& c, const auto& v) { c.k = get_as<int>(v, "k"); }},
      {"epochs", [](TrainConfig& c, const auto& v) { c.epochs = get_as<int>(v, "epochs"); }},
      {"warmup_epochs",
       [](TrainConfig& c, const auto& v) { c.warmup_epochs = get_as<int>(v, "warmup_epochs"); }},
      {"hidden_dim",
       [](TrainConfig& c, const auto& v) { c.hidden_dim = get_as<int>(v, "hidden_dim"); }},
      {"embed_dim",
       [](TrainConfig& c, const auto& v) { c.embed_dim = get_as<int>(v, "embed_dim"); }},
      {"lr_pretrained",
       [](TrainConfig& c, const auto& v) {
         c.optimizer.learning_rate_pretrained = get_as<double>(v, "lr_pretrained");
       }},
      {"lr_new",
       [](TrainConfig& c, const auto& v) {
         c.optimizer.learning_rate_new = get_as<double>(v, "lr_new");
       }},
      {"momentum",
       [](TrainConfig& c, const auto& v) { c.optimizer.momentum = get_as<double>(v, "momentum"); }},
      {"weight_decay",
       [](TrainConfig& c, const auto& v) {
         c.optimizer.weight_decay = get_as<double>(v, "weight_decay");
       }},
      {"decay_epoch",
       [](TrainConfig& c, const auto& v) { c.optimizer.decay_epoch = get_as<int>(v, "decay_epoch"); }},
      {"decay_factor",
       [](TrainConfig& c, const auto& v) {
         c.optimizer.decay_factor = get_as<double>(v, "decay_factor");
       }},
      {"classification_budget",
       [](TrainConfig& c, const auto& v) {
         c.classification_budget = get_as<int>(v, "classification_budget");
       }},
      {"inter_mode",
       [](TrainConfig& c, const auto& v) {
         c.inter_mode = parse_enum<InterMode>(v, "inter_mode",
                                              {{"C", InterMode::classification},
                                               {"D", InterMode::discrimination},
                                               {"C+D", InterMode::both}});
       }},
      {"weighting_mode",
       [](TrainConfig& c, const auto& v) {
         c.weighting_mode = parse_enum<WeightingMode>(
             v, "weighting_mode", {{"AW", WeightingMode::average}, {"W", WeightingMode::affinity}});
       }},
      {"mining_mode",
       [](TrainConfig& c, const auto& v) {
         c.mining_mode = parse_enum<MiningMode>(
             v, "mining_mode", {{"hard", MiningMode::hard}, {"random", MiningMode::random}});
       }},
      {"mask_same_camera",
       [](TrainConfig& c, const auto& v) {
         c.mask_same_camera = get_as<bool>(v, "mask_same_camera");
       }},
      {"positive_sampling",
       [](TrainConfig& c, const auto& v) {
         c.positive_sampling = parse_enum<PositiveSampling>(
             v, "positive_sampling",
             {{"random", PositiveSampling::random_knn}, {"nearest", PositiveSampling::nearest}});
       }},
      {"self_class_target",
       [](TrainConfig& c, const auto& v) {
         c.self_class_target = get_as<bool>(v, "self_class_target");
       }},
      {"eval_every",
       [](TrainConfig& c, const auto& v) { c.eval_every = get_as<int>(v, "eval_every"); }},
      {"seed", [](TrainConfig& c, const auto& v) { c.seed = get_as<std::uint64_t>(v, "seed"); }},
  };
  return table;
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
    try {
      it->second(base, value);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("key '" + key + "' has a value of the wrong type");
    }
  }
  return base;
}

void apply_override(TrainConfig& config, const std::string& key, const std::string& value) {
  nlohmann::json v;
  try {
    v = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  config = config_from_json(nlohmann::json{{key, v}}, config);
}

}  // namespace pcsl
