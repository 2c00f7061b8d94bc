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

#include "pcsl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "pcsl/error.hpp"
#include "pcsl/evalmetrics.hpp"
#include "pcsl/losses.hpp"
#include "textio.hpp"

namespace pcsl {

std::vector<int> eligible_cameras(const Dataset& dataset,
                                  const std::vector<std::vector<int>>& by_class) {
  std::vector<int> cams;
  for (int cam = 0; cam < dataset.n_cameras(); ++cam) {
    int persons = 0;
    const int begin = dataset.index.offset(cam);
    for (int c = begin; c < begin + dataset.index.count(cam); ++c) {
      persons += by_class[c].empty() ? 0 : 1;
    }
    if (persons >= 2) cams.push_back(cam);
  }
  return cams;
}

PkBatch pk_sampler(const Dataset& dataset, const std::vector<std::vector<int>>& by_class,
                   int camera, int n_p, int n_k, Rng& rng) {
  std::vector<int> persons;
  const int begin = dataset.index.offset(camera);
  for (int c = begin; c < begin + dataset.index.count(camera); ++c) {
    if (!by_class[c].empty()) persons.push_back(c);
  }
  if (persons.size() < 2) {
    throw ContractError("camera " + std::to_string(camera) + " has fewer than two persons");
  }
  const int take = std::min<int>(n_p, static_cast<int>(persons.size()));
  for (int i = 0; i < take; ++i) {
    const int pick = i + uniform_index(rng, static_cast<int>(persons.size()) - i);
    std::swap(persons[i], persons[pick]);
  }

  PkBatch batch;
  batch.camera = camera;
  std::vector<int> pool;
  for (int i = 0; i < take; ++i) {
    const int person = persons[i];
    pool = by_class[person];
    const int avail = static_cast<int>(pool.size());
    for (int j = 0; j < n_k; ++j) {
      int s;
      if (avail >= n_k) {
        const int pick = j + uniform_index(rng, avail - j);
        std::swap(pool[j], pool[pick]);
        s = pool[j];
      } else {
        s = pool[uniform_index(rng, avail)];
      }
      batch.samples.push_back(s);
      batch.person.push_back(person);
    }
  }
  return batch;
}

int classification_per_camera(int n_cameras, int budget) {
  if (n_cameras < 1) throw ContractError("classification batch needs at least one camera");
  const int per = budget / n_cameras;
  if (per < 1) {
    throw ConfigError("classification batch of " + std::to_string(budget) + " images over " +
                      std::to_string(n_cameras) + " cameras leaves zero images per camera");
  }
  return per;
}

std::vector<int> classification_sampler(const Dataset& dataset, Rng& rng, int budget) {
  const int per = classification_per_camera(dataset.n_cameras(), budget);
  std::vector<std::vector<int>> by_camera(dataset.n_cameras());
  for (int i = 0; i < dataset.size(); ++i) by_camera[dataset.samples[i].camera_id].push_back(i);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(per) * by_camera.size());
  for (int cam = 0; cam < dataset.n_cameras(); ++cam) {
    auto& pool = by_camera[cam];
    if (pool.empty()) {
      throw ContractError("camera " + std::to_string(cam) + " has no samples");
    }
    const int avail = static_cast<int>(pool.size());
    for (int j = 0; j < per; ++j) {
      if (avail >= per) {
        const int pick = j + uniform_index(rng, avail - j);
        std::swap(pool[j], pool[pick]);
        out.push_back(pool[j]);
      } else {
        out.push_back(pool[uniform_index(rng, avail)]);
      }
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<int>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(cols[i]);
  return out;
}

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b || (std::isnan(*a) && std::isnan(*b));
}

// Affinity input: the current buffer, with persons never seen by the intra
// sampler filled in from a full pass over their samples. The live buffer is
// left untouched.
PersonBuffer affinity_snapshot(const PersonBuffer& buffer, const EmbeddingModel& model,
                               const Eigen::MatrixXd& features,
                               const std::vector<std::vector<int>>& by_class) {
  PersonBuffer snap = buffer;
  for (int c : buffer.uninitialized()) {
    if (by_class[c].empty()) continue;
    const Eigen::MatrixXd e = embed(model, gather(features, by_class[c]));
    snap.set_person(c, e.rowwise().mean());
  }
  return snap;
}

struct InterTerms {
  double loss = 0.0;  // already divided by the batch size
  long skipped = 0;
  long clamped = 0;
  long own_class_zero = 0;
};

class Trainer {
 public:
  Trainer(const Dataset& dataset, const TrainConfig& config) : ds_(dataset), cfg_(config) {}

  TrainResult run(std::optional<Validation> validation, const TrainHooks& hooks);

 private:
  void discrimination_term(const PkBatch& pk, const ForwardCache& cache, Eigen::MatrixXd& grad_emb,
                           ModelGrads& body, InterTerms& terms, double scale);
  void classification_term(ModelGrads& body, HeadGrads& head, InterTerms& terms, double scale);

  const Dataset& ds_;
  const TrainConfig& cfg_;
  Eigen::MatrixXd features_;
  std::vector<std::vector<int>> by_class_;
  std::vector<int> class_truth_;

  TrainState state_;
  std::optional<AffinityMatrix> affinity_;
  std::vector<SoftLabelRow> rows_;

  Rng intra_rng_;
  Rng inter_rng_;
  Rng mining_rng_;
};

void Trainer::discrimination_term(const PkBatch& pk, const ForwardCache& cache,
                                  Eigen::MatrixXd& grad_emb, ModelGrads& body, InterTerms& terms,
                                  double scale) {
  const TripletBatch batch{cache.output, pk.person, pk.camera};
  struct Anchor {
    int column;
    int negative;
    std::vector<PositiveDraw> positives;
    std::size_t first_positive;
  };
  std::vector<Anchor> anchors;
  std::vector<int> positive_samples;
  for (int a = 0; a < batch.size(); ++a) {
    const int z = pk.person[a];
    auto draws = select_positives(z, *affinity_, by_class_, cfg_.n_k, cfg_.weighting_mode,
                                  cfg_.positive_sampling, inter_rng_);
    if (!draws) {
      ++terms.skipped;
      continue;
    }
    const Eigen::VectorXd anchor = batch.embeddings.col(a);
    const auto neg = cfg_.mining_mode == MiningMode::hard
                         ? select_hardest_negative(anchor, batch, z)
                         : select_random_negative(batch, z, mining_rng_);
    if (!neg) {
      ++terms.skipped;
      continue;
    }
    anchors.push_back({a, *neg, std::move(*draws), positive_samples.size()});
    for (const auto& d : anchors.back().positives) positive_samples.push_back(d.sample_index);
  }
  if (anchors.empty()) return;

  const ForwardCache pos_cache = forward_batch(state_.model, gather(features_, positive_samples));
  Eigen::MatrixXd grad_pos = Eigen::MatrixXd::Zero(pos_cache.output.rows(), pos_cache.output.cols());
  for (const auto& an : anchors) {
    const auto n_pos = static_cast<Eigen::Index>(an.positives.size());
    const auto first = static_cast<Eigen::Index>(an.first_positive);
    std::vector<double> weights;
    for (const auto& d : an.positives) weights.push_back(d.weight);
    const LossValue lv =
        weighted_triplet_loss(batch.embeddings.col(an.column), pos_cache.output.middleCols(first, n_pos),
                              weights, batch.embeddings.col(an.negative), cfg_.margin);
    if (lv.active == 0) continue;
    terms.loss += lv.loss * scale;
    grad_emb.col(an.column) += cfg_.lambda * scale * lv.grad.col(0);
    grad_pos.middleCols(first, n_pos) += cfg_.lambda * scale * lv.grad.middleCols(1, n_pos);
    grad_emb.col(an.negative) += cfg_.lambda * scale * lv.grad.col(n_pos + 1);
  }
  body += backward(state_.model, pos_cache, grad_pos).params;
}

void Trainer::classification_term(ModelGrads& body, HeadGrads& head, InterTerms& terms,
                                  double scale) {
  const auto picks = classification_sampler(ds_, inter_rng_, cfg_.classification_budget);
  const ForwardCache cache = forward_batch(state_.model, gather(features_, picks));
  const Eigen::MatrixXd scores = state_.head.scores(cache.output);
  Eigen::MatrixXd score_grads = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
  const double batch_scale = scale / static_cast<double>(picks.size());
  for (std::size_t b = 0; b < picks.size(); ++b) {
    const int z = ds_.class_of(picks[b]);
    if (rows_[z].degenerate) {
      ++terms.skipped;
      continue;
    }
    const auto col = static_cast<Eigen::Index>(b);
    const LossValue lv = weighted_cross_entropy(softmax_probs(scores.col(col)), rows_[z]);
    terms.loss += lv.loss * batch_scale;
    terms.clamped += lv.clamped;
    terms.own_class_zero += lv.own_class_zero;
    score_grads.col(col) = cfg_.lambda * batch_scale * lv.grad;
  }
  const HeadBackwardResult hb = head_backward(state_.head, cache.output, score_grads);
  head += hb.params;
  body += backward(state_.model, cache, hb.embedding_grads).params;
}

TrainResult Trainer::run(std::optional<Validation> validation, const TrainHooks& hooks) {
  cfg_.validate();
  ds_.validate();
  if (ds_.size() == 0) throw ContractError("training set is empty");
  if (ds_.split != Split::train) throw ContractError("train() expects a training split");

  features_ = ds_.feature_matrix();
  by_class_ = ds_.samples_by_class();
  class_truth_ = ds_.class_truth();
  const bool uses_classification = cfg_.inter_mode != InterMode::discrimination;
  const bool uses_discrimination = cfg_.inter_mode != InterMode::classification;
  if (uses_classification) classification_per_camera(ds_.n_cameras(), cfg_.classification_budget);

  const auto cameras = eligible_cameras(ds_, by_class_);
  if (cameras.empty()) throw ContractError("no camera has two or more persons to form triplets");

  Rng init_rng = make_stream(cfg_.seed, stream::kInit);
  intra_rng_ = make_stream(cfg_.seed, stream::kIntraSampler);
  inter_rng_ = make_stream(cfg_.seed, stream::kInterSampler);
  mining_rng_ = make_stream(cfg_.seed, stream::kMining);

  state_.model = EmbeddingModel::he_init(ds_.d_in, cfg_.hidden_dim, cfg_.embed_dim, init_rng);
  state_.head = ClassifierHead::he_init(ds_.index.total(), cfg_.embed_dim, init_rng);
  state_.optimizer_state = OptimizerState::zeros_like(state_.model, state_.head);
  state_.buffer = PersonBuffer(cfg_.embed_dim, ds_.index.total());

  TrainLog log;
  log.excluded_cameras = ds_.n_cameras() - static_cast<int>(cameras.size());
  const int batch_size = cfg_.n_p * cfg_.n_k;
  const int iterations = (ds_.size() + batch_size - 1) / batch_size;
  long global_iter = 0;
  const bool has_truth = std::any_of(class_truth_.begin(), class_truth_.end(),
                                     [](int t) { return t >= 0; });

  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.joint = epoch > cfg_.warmup_epochs;

    if (rec.joint) {
      affinity_ = build_affinity(affinity_snapshot(state_.buffer, state_.model, features_, by_class_),
                                 ds_.index, cfg_.k, cfg_.mask_same_camera, epoch);
      rows_ = soft_label_rows(*affinity_, cfg_.self_class_target);
      ++log.affinity_builds;
      rec.sigma_sq = affinity_->sigma_sq;
      rec.degenerate_rows = std::count_if(rows_.begin(), rows_.end(),
                                          [](const SoftLabelRow& r) { return r.degenerate; });
      if (has_truth) {
        try {
          rec.affinity_map = affinity_quality_map(*affinity_, ds_.index, class_truth_);
        } catch (const ContractError&) {
          // No cross-camera true matches: quality is undefined.
        }
      }
    }
    const bool inter_active = rec.joint && cfg_.lambda != 0.0;

    for (int it = 0; it < iterations; ++it, ++global_iter) {
      const int camera = cameras[static_cast<std::size_t>(global_iter % static_cast<long>(cameras.size()))];
      const PkBatch pk = pk_sampler(ds_, by_class_, camera, cfg_.n_p, cfg_.n_k, intra_rng_);
      const ForwardCache cache = forward_batch(state_.model, gather(features_, pk.samples));
      const TripletBatch batch{cache.output, pk.person, camera};
      const double scale = 1.0 / static_cast<double>(batch.size());

      const LossValue intra = cfg_.mining_mode == MiningMode::hard
                                  ? intra_triplet_loss(batch, cfg_.margin)
                                  : random_triplet_loss(batch, cfg_.margin, mining_rng_);
      Eigen::MatrixXd grad_emb = intra.grad * scale;
      ModelGrads body = ModelGrads::zeros_like(state_.model);
      HeadGrads head = HeadGrads::zeros_like(state_.head);

      InterTerms terms;
      if (inter_active) {
        if (uses_discrimination) discrimination_term(pk, cache, grad_emb, body, terms, scale);
        if (uses_classification) classification_term(body, head, terms, 1.0);
      }
      body += backward(state_.model, cache, grad_emb).params;

      const double intra_mean = intra.loss * scale;
      if (!std::isfinite(intra_mean) || !std::isfinite(terms.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", iteration " +
                           std::to_string(it));
      }
      try {
        sgd_step(state_.model, state_.head, body, head, cfg_.optimizer, state_.optimizer_state,
                 epoch);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", iteration " + std::to_string(it));
      }

      for (std::size_t start = 0; start < pk.person.size(); start += static_cast<std::size_t>(cfg_.n_k)) {
        state_.buffer.update_person(
            pk.person[start],
            cache.output.middleCols(static_cast<Eigen::Index>(start), cfg_.n_k));
      }
      state_.buffer.advance_iteration();

      rec.intra_loss += intra_mean;
      rec.inter_loss += terms.loss;
      rec.skipped_anchors += terms.skipped;
      rec.clamped_logs += terms.clamped;
      rec.own_class_zero += terms.own_class_zero;
    }
    rec.intra_loss /= iterations;
    rec.inter_loss /= iterations;
    state_.epoch = epoch;

    const bool eval_now = epoch == cfg_.epochs || (cfg_.eval_every > 0 && epoch % cfg_.eval_every == 0);
    if (validation && validation->query && validation->gallery && eval_now) {
      const RetrievalResult r = evaluate(state_.model, *validation->query, *validation->gallery);
      rec.val_map = r.mean_ap;
      rec.val_rank1 = r.rank1();
    }
    if (hooks.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    }
    log.records.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(state_, log.records.back());
  }

  TrainResult result;
  result.state = std::move(state_);
  result.log = std::move(log);
  result.last_affinity = std::move(affinity_);
  return result;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? textio::format_double(*v) : std::string();
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

bool TrainLog::same_outcome(const TrainLog& o) const {
  if (affinity_builds != o.affinity_builds || excluded_cameras != o.excluded_cameras ||
      records.size() != o.records.size()) {
    return false;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = o.records[i];
    if (a.epoch != b.epoch || a.joint != b.joint || a.intra_loss != b.intra_loss ||
        a.inter_loss != b.inter_loss || !same_opt(a.affinity_map, b.affinity_map) ||
        !same_opt(a.sigma_sq, b.sigma_sq) || !same_opt(a.val_map, b.val_map) ||
        !same_opt(a.val_rank1, b.val_rank1) || a.skipped_anchors != b.skipped_anchors ||
        a.degenerate_rows != b.degenerate_rows || a.clamped_logs != b.clamped_logs ||
        a.own_class_zero != b.own_class_zero) {
      return false;
    }
  }
  return true;
}

const std::vector<std::string>& trainlog_columns() {
  static const std::vector<std::string> cols = {
      "epoch",     "phase",     "intra_loss",      "inter_loss",      "affinity_map",
      "sigma_sq",  "val_map",   "val_rank1",       "skipped_anchors", "degenerate_rows",
      "clamped_logs", "own_class_zero", "wall_ms"};
  return cols;
}

std::string trainlog_to_csv(const TrainLog& log) {
  std::ostringstream out;
  const auto& cols = trainlog_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : log.records) {
    out << r.epoch << ',' << (r.joint ? "joint" : "warmup") << ','
        << textio::format_double(r.intra_loss) << ',' << textio::format_double(r.inter_loss) << ','
        << optional_cell(r.affinity_map) << ',' << optional_cell(r.sigma_sq) << ','
        << optional_cell(r.val_map) << ',' << optional_cell(r.val_rank1) << ','
        << r.skipped_anchors << ',' << r.degenerate_rows << ',' << r.clamped_logs << ','
        << r.own_class_zero << ',' << textio::format_double(r.wall_ms) << '\n';
  }
  return out.str();
}

nlohmann::json trainlog_to_json(const TrainLog& log) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : log.records) {
    records.push_back({{"epoch", r.epoch},
                       {"phase", r.joint ? "joint" : "warmup"},
                       {"intra_loss", r.intra_loss},
                       {"inter_loss", r.inter_loss},
                       {"affinity_map", optional_json(r.affinity_map)},
                       {"sigma_sq", optional_json(r.sigma_sq)},
                       {"val_map", optional_json(r.val_map)},
                       {"val_rank1", optional_json(r.val_rank1)},
                       {"skipped_anchors", r.skipped_anchors},
                       {"degenerate_rows", r.degenerate_rows},
                       {"clamped_logs", r.clamped_logs},
                       {"own_class_zero", r.own_class_zero},
                       {"wall_ms", r.wall_ms}});
  }
  return {{"schema_version", kTrainLogSchemaVersion},
          {"affinity_builds", log.affinity_builds},
          {"excluded_cameras", log.excluded_cameras},
          {"records", records}};
}

TrainLog trainlog_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kTrainLogSchemaVersion) {
      throw VersionError("train log schema version " + j.at("schema_version").dump() +
                         " is not supported");
    }
    TrainLog log;
    log.affinity_builds = j.at("affinity_builds").get<int>();
    log.excluded_cameras = j.at("excluded_cameras").get<int>();
    for (const auto& r : j.at("records")) {
      EpochRecord rec;
      rec.epoch = r.at("epoch").get<int>();
      rec.joint = r.at("phase").get<std::string>() == "joint";
      rec.intra_loss = r.at("intra_loss").get<double>();
      rec.inter_loss = r.at("inter_loss").get<double>();
      rec.affinity_map = optional_from(r, "affinity_map");
      rec.sigma_sq = optional_from(r, "sigma_sq");
      rec.val_map = optional_from(r, "val_map");
      rec.val_rank1 = optional_from(r, "val_rank1");
      rec.skipped_anchors = r.at("skipped_anchors").get<long>();
      rec.degenerate_rows = r.at("degenerate_rows").get<long>();
      rec.clamped_logs = r.at("clamped_logs").get<long>();
      rec.own_class_zero = r.at("own_class_zero").get<long>();
      rec.wall_ms = r.at("wall_ms").get<double>();
      log.records.push_back(rec);
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed train log: ") + e.what());
  }
}

Checkpoint TrainState::checkpoint(const Optimizer& optimizer) const {
  return {model, head, optimizer, optimizer_state, buffer, epoch};
}

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  std::optional<Validation> validation, const TrainHooks& hooks) {
  Trainer trainer(dataset, config);
  return trainer.run(validation, hooks);
}

}  // namespace pcsl
