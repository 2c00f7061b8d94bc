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

#include <doctest.h>

#include <map>
#include <set>

#include "../support/tempdir.hpp"
#include "pcsl/ablation.hpp"
#include "pcsl/error.hpp"
#include "pcsl/trainer.hpp"

using namespace pcsl;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

SyntheticCorpus tiny_corpus(std::uint64_t seed = 1) {
  SynthSpec s;
  s.n_identities = 24;
  s.n_test_identities = 12;
  s.n_cameras = 3;
  s.d_in = 8;
  s.d_latent = 4;
  s.noise_sigma = 0.3;
  s.camera_transform_scale = 0.5;
  s.seed = seed;
  return generate_synthetic(s);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.n_p = 4;
  c.n_k = 2;
  c.epochs = 6;
  c.warmup_epochs = 3;
  c.hidden_dim = 12;
  c.embed_dim = 4;
  c.k = 3;
  c.eval_every = 2;
  c.optimizer.decay_epoch = 5;
  return c;
}

Dataset camera_dataset(const std::vector<int>& persons_per_camera, int per_person) {
  Dataset ds;
  ds.d_in = 2;
  ds.index = PersonIndex(persons_per_camera);
  for (int cam = 0; cam < static_cast<int>(persons_per_camera.size()); ++cam)
    for (int p = 0; p < persons_per_camera[cam]; ++p)
      for (int i = 0; i < per_person; ++i)
        ds.samples.push_back({{static_cast<double>(p), static_cast<double>(i)}, cam, p, std::nullopt});
  return ds;
}

}  // namespace

TEST_CASE("classification batch size per camera") {
  CHECK(classification_per_camera(6) == 10);
  CHECK(classification_per_camera(64) == 1);
  CHECK_THROWS_AS(classification_per_camera(65), ConfigError);
}

TEST_CASE("classification sampler draws the same count from every camera") {
  const auto ds = camera_dataset({3, 5, 2}, 4);
  Rng rng(1);
  const auto picks = classification_sampler(ds, rng);
  REQUIRE(picks.size() == 63);
  std::map<int, int> per_camera;
  for (int s : picks) ++per_camera[ds.samples[s].camera_id];
  for (auto [cam, n] : per_camera) CHECK(n == 21);
}

TEST_CASE("PK sampler") {
  SUBCASE("a camera of exactly N_P persons with N_K samples is taken whole") {
    const auto ds = camera_dataset({4}, 2);
    Rng rng(2);
    const auto b = pk_sampler(ds, ds.samples_by_class(), 0, 4, 2, rng);
    CHECK(std::multiset<int>(b.samples.begin(), b.samples.end()) ==
          std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7});
  }
  SUBCASE("a person with one sample repeats it") {
    const auto ds = camera_dataset({2}, 1);
    Rng rng(3);
    const auto b = pk_sampler(ds, ds.samples_by_class(), 0, 2, 4, rng);
    CHECK(std::multiset<int>(b.samples.begin(), b.samples.end()) ==
          std::multiset<int>{0, 0, 0, 0, 1, 1, 1, 1});
    CHECK(b.samples == b.person);  // sample s is the only sample of class s
  }
  SUBCASE("persons are distinct and samples belong to them") {
    const auto ds = camera_dataset({10}, 6);
    const auto by_class = ds.samples_by_class();
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const auto b = pk_sampler(ds, by_class, 0, 4, 3, rng);
      std::set<int> persons(b.person.begin(), b.person.end());
      CHECK(persons.size() == 4);
      std::set<int> samples(b.samples.begin(), b.samples.end());
      CHECK(samples.size() == 12);
      for (std::size_t i = 0; i < b.samples.size(); ++i) CHECK(ds.class_of(b.samples[i]) == b.person[i]);
    }
  }
  SUBCASE("fixed seed, fixed sequence") {
    const auto ds = camera_dataset({10}, 6);
    const auto by_class = ds.samples_by_class();
    Rng a(5), b(5);
    for (int t = 0; t < 5; ++t) {
      CHECK(pk_sampler(ds, by_class, 0, 4, 3, a).samples == pk_sampler(ds, by_class, 0, 4, 3, b).samples);
    }
  }
  SUBCASE("cameras with a single person are left out") {
    const auto ds = camera_dataset({1, 3, 2}, 2);
    CHECK(eligible_cameras(ds, ds.samples_by_class()) == std::vector<int>{1, 2});
  }
}

TEST_CASE("training loop bookkeeping") {
  const auto c = tiny_corpus();
  const auto cfg = tiny_config();
  const auto r = train(c.train, cfg, Validation{&c.query, &c.gallery});
  REQUIRE(r.log.records.size() == 6);
  CHECK(r.log.affinity_builds == 3);
  for (const auto& rec : r.log.records) {
    CHECK(rec.joint == (rec.epoch > 3));
    CHECK(rec.sigma_sq.has_value() == rec.joint);
    CHECK(rec.affinity_map.has_value() == rec.joint);
    CHECK(rec.val_map.has_value() == (rec.epoch % 2 == 0));
  }
  CHECK(r.state.epoch == 6);
  CHECK(r.state.buffer.all_initialized());
  CHECK(r.last_affinity.has_value());
  CHECK(r.state.model.all_finite());
}

TEST_CASE("no affinity is built during warm-up") {
  const auto c = tiny_corpus();
  auto cfg = tiny_config();
  cfg.warmup_epochs = cfg.epochs;
  const auto r = train(c.train, cfg);
  CHECK(r.log.affinity_builds == 0);
  CHECK_FALSE(r.last_affinity.has_value());
}

TEST_CASE("lambda = 0 reproduces the warm-up-only path bitwise") {
  const auto c = tiny_corpus();
  for (auto mode : {InterMode::classification, InterMode::discrimination, InterMode::both}) {
    auto joint = tiny_config();
    joint.lambda = 0.0;
    joint.inter_mode = mode;
    auto warm = tiny_config();
    warm.warmup_epochs = warm.epochs;
    const auto a = train(c.train, joint);
    const auto b = train(c.train, warm);
    CHECK(a.state.checkpoint(joint.optimizer) == b.state.checkpoint(warm.optimizer));
    for (std::size_t e = 0; e < a.log.records.size(); ++e) {
      CHECK(a.log.records[e].intra_loss == b.log.records[e].intra_loss);
      CHECK(a.log.records[e].inter_loss == 0.0);
    }
  }
}

TEST_CASE("identical config and seed give identical logs and checkpoints") {
  TempDir dir;
  const auto c = tiny_corpus();
  for (auto mode : {InterMode::classification, InterMode::discrimination, InterMode::both}) {
    auto cfg = tiny_config();
    cfg.inter_mode = mode;
    const auto a = train(c.train, cfg, Validation{&c.query, &c.gallery});
    const auto b = train(c.train, cfg, Validation{&c.query, &c.gallery});
    CHECK(a.log.same_outcome(b.log));
    save_checkpoint(a.state.checkpoint(cfg.optimizer), dir / "a.txt");
    save_checkpoint(b.state.checkpoint(cfg.optimizer), dir / "b.txt");
    CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
  }
  auto other = tiny_config();
  other.seed = 99;
  const auto x = train(c.train, tiny_config());
  const auto y = train(c.train, other);
  CHECK_FALSE(x.state.model == y.state.model);
}

TEST_CASE("a single-camera dataset is rejected when the affinity is first built") {
  const auto ds = camera_dataset({6}, 3);
  auto cfg = tiny_config();
  CHECK_THROWS_AS(train(ds, cfg), ContractError);
  cfg.warmup_epochs = cfg.epochs;
  CHECK_NOTHROW(train(ds, cfg));
}

TEST_CASE("too many cameras for the classification budget is a config error") {
  auto ds = camera_dataset(std::vector<int>(65, 2), 2);
  auto cfg = tiny_config();
  cfg.inter_mode = InterMode::classification;
  CHECK_THROWS_AS(train(ds, cfg), ConfigError);
}

TEST_CASE("zero-distortion data is retrieved perfectly after warm-up alone") {
  SynthSpec s;
  s.n_identities = 30;
  s.n_test_identities = 20;
  s.noise_sigma = 0.0;
  s.camera_transform_scale = 0.0;
  s.seed = 4;
  const auto c = generate_synthetic(s);
  auto cfg = tiny_config();
  cfg.warmup_epochs = cfg.epochs;
  const auto r = train(c.train, cfg, Validation{&c.query, &c.gallery});
  CHECK(*r.log.records.back().val_rank1 == 1.0);
}

TEST_CASE("train log export") {
  const auto c = tiny_corpus();
  const auto r = train(c.train, tiny_config(), Validation{&c.query, &c.gallery});
  const std::string csv = trainlog_to_csv(r.log);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "epoch,phase,intra_loss,inter_loss,affinity_map,sigma_sq,val_map,val_rank1,"
        "skipped_anchors,degenerate_rows,clamped_logs,own_class_zero,wall_ms");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  const auto back = trainlog_from_json(trainlog_to_json(r.log));
  CHECK(back.same_outcome(r.log));
  CHECK(trainlog_to_json(r.log).at("schema_version") == kTrainLogSchemaVersion);
}

TEST_CASE("ablation harness") {
  const auto c = tiny_corpus();
  const auto cfg = tiny_config();
  const auto settings = ablation_settings(cfg, AblationAxis::inter_mode);
  REQUIRE(settings.size() == 4);
  CHECK(settings[0].config.lambda == 0.0);
  CHECK(ablation_settings(cfg, AblationAxis::mining_mode).size() == 2);
  CHECK(ablation_settings(cfg, AblationAxis::mining_mode)[1].config.mining_mode == MiningMode::random);
  CHECK(axis_from_string(to_string(AblationAxis::k_sweep)) == AblationAxis::k_sweep);
  CHECK_THROWS_AS(axis_from_string("depth"), ConfigError);

  const std::vector<std::uint64_t> seeds{3};
  const auto table = run_ablation(c.train, c.query, c.gallery, cfg, AblationAxis::inter_mode, seeds);
  REQUIRE(table.rows.size() == 4);
  auto direct_cfg = cfg;
  direct_cfg.lambda = 0.0;
  direct_cfg.seed = 3;
  const auto direct = train(c.train, direct_cfg);
  CHECK(evaluate(direct.state.model, c.query, c.gallery).mean_ap == table.rows[0].median_map());
  CHECK(table.to_json().at("rows").size() == 4);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
