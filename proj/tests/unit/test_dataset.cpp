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
#include "pcsl/dataset.hpp"
#include "pcsl/error.hpp"

using namespace pcsl;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_identities = 20;
  s.n_test_identities = 10;
  s.n_cameras = 3;
  s.images_per_person = 4;
  s.d_in = 6;
  s.d_latent = 3;
  s.seed = 7;
  return s;
}

std::string replace_line(const std::string& text, const std::string& prefix,
                         const std::string& line) {
  const auto at = text.find(prefix);
  REQUIRE(at != std::string::npos);
  const auto end = text.find('\n', at);
  return text.substr(0, at) + line + text.substr(end);
}

}  // namespace

TEST_CASE("person index lays cameras out in contiguous blocks") {
  const PersonIndex idx({2, 0, 3});
  CHECK(idx.total() == 5);
  CHECK(idx.offset(2) == 2);
  CHECK(idx.class_index(2, 1) == 3);
  CHECK(idx.camera_of(4) == 2);
  CHECK(idx.person_of(3) == std::pair{2, 1});
  CHECK_THROWS_AS(idx.class_index(1, 0), ContractError);
  CHECK_THROWS_AS(idx.camera_of(5), ContractError);
  CHECK_THROWS_AS(PersonIndex({1, -1}), ContractError);
}

TEST_CASE("generator: every identity under every camera") {
  SynthSpec s;
  s.n_identities = 50;
  s.n_cameras = 4;
  s.camera_appearance_prob = 1.0;
  const auto c = generate_synthetic(s);
  CHECK(c.train.index.total() == 200);
  CHECK(c.train.size() == 200 * s.images_per_person);
}

TEST_CASE("generator: structure of the splits") {
  const auto c = generate_synthetic(small_spec());
  c.train.validate();
  c.query.validate();
  c.gallery.validate();

  std::set<int> train_ids, test_ids;
  for (const auto& s : c.train.samples) train_ids.insert(*s.truth_identity);
  for (const auto& s : c.query.samples) test_ids.insert(*s.truth_identity);
  for (int t : test_ids) CHECK(train_ids.count(t) == 0);

  // Every person has at least N_K = 4 samples.
  for (const auto& members : c.train.samples_by_class()) CHECK(members.size() >= 4);

  // Each query has a gallery match under another camera.
  for (const auto& q : c.query.samples) {
    bool found = false;
    for (const auto& g : c.gallery.samples)
      found = found || (g.truth_identity == q.truth_identity && g.camera_id != q.camera_id);
    CHECK(found);
  }
}

TEST_CASE("generator is deterministic in the seed") {
  TempDir dir;
  const auto a = generate_synthetic(small_spec());
  const auto b = generate_synthetic(small_spec());
  save_dataset(a.train, dir / "a.txt");
  save_dataset(b.train, dir / "b.txt");
  CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
  auto other = small_spec();
  other.seed = 8;
  CHECK_FALSE(generate_synthetic(other).train == a.train);
}

TEST_CASE("zero distortion: one identity looks the same everywhere") {
  auto s = small_spec();
  s.noise_sigma = 0.0;
  s.camera_transform_scale = 0.0;
  const auto c = generate_synthetic(s);
  std::map<int, std::vector<double>> seen;
  for (const auto& sample : c.train.samples) {
    auto [it, inserted] = seen.emplace(*sample.truth_identity, sample.raw_feature);
    if (!inserted) CHECK(it->second == sample.raw_feature);
  }
}

TEST_CASE("generator rejects unusable specs") {
  auto s = small_spec();
  s.n_cameras = 1;
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
  s = small_spec();
  s.images_per_person = 1;
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
  s = small_spec();
  s.camera_appearance_prob = 1.5;
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
  s = small_spec();
  s.noise_sigma = -1;
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
}

TEST_CASE("dataset files round-trip exactly") {
  TempDir dir;
  const auto c = generate_synthetic(small_spec());
  for (const Dataset* ds : {&c.train, &c.query, &c.gallery}) {
    save_dataset(*ds, dir / "d.txt");
    CHECK(load_dataset(dir / "d.txt") == *ds);
  }
  auto zero = small_spec();
  zero.noise_sigma = 0;
  zero.camera_transform_scale = 0;
  const auto z = generate_synthetic(zero);
  save_dataset(z.train, dir / "z.txt");
  CHECK(load_dataset(dir / "z.txt") == z.train);
}

TEST_CASE("samples without truth round-trip") {
  TempDir dir;
  Dataset ds;
  ds.d_in = 2;
  ds.index = PersonIndex({1, 1});
  ds.samples = {{{0.5, -1e-300}, 0, 0, std::nullopt}, {{3.0, 4.0}, 1, 0, std::nullopt}};
  save_dataset(ds, dir / "d.txt");
  CHECK(load_dataset(dir / "d.txt") == ds);
}

TEST_CASE("corrupt dataset files") {
  TempDir dir;
  const auto c = generate_synthetic(small_spec());
  save_dataset(c.query, dir / "good.txt");
  const std::string good = slurp(dir / "good.txt");

  SUBCASE("truncated file names the missing record") {
    spit(dir / "bad.txt", good.substr(0, good.size() / 2));
    try {
      load_dataset(dir / "bad.txt");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bad.txt") != std::string::npos);
    }
  }
  SUBCASE("future version") {
    spit(dir / "bad.txt", replace_line(good, "pcsl-dataset", "pcsl-dataset 2"));
    CHECK_THROWS_AS(load_dataset(dir / "bad.txt"), VersionError);
  }
  SUBCASE("non-numeric feature") {
    const auto at = good.find("\ns ");
    std::string bad = good;
    bad.replace(good.find(' ', good.find(' ', good.find(' ', good.find(' ', at + 1) + 1) + 1) + 1) + 1,
                1, "x");
    spit(dir / "bad.txt", bad);
    CHECK_THROWS_AS(load_dataset(dir / "bad.txt"), ParseError);
  }
  SUBCASE("missing end marker") {
    spit(dir / "bad.txt", good.substr(0, good.rfind("end")));
    CHECK_THROWS_AS(load_dataset(dir / "bad.txt"), ParseError);
  }
  SUBCASE("unknown split") {
    spit(dir / "bad.txt", replace_line(good, "split", "split validation"));
    CHECK_THROWS_AS(load_dataset(dir / "bad.txt"), ParseError);
  }
  SUBCASE("local id beyond the camera's person count") {
    spit(dir / "bad.txt", replace_line(good, "cameras", "cameras 3 0 0 0"));
    CHECK_THROWS_AS(load_dataset(dir / "bad.txt"), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(dir / "nope.txt"), IoError);
  }
}

TEST_CASE("validation catches broken datasets") {
  Dataset ds;
  ds.d_in = 2;
  ds.index = PersonIndex({1});
  ds.samples = {{{1.0}, 0, 0, 1}};
  CHECK_THROWS_AS(ds.validate(), DimensionError);
  ds.samples = {{{1.0, 2.0}, 0, 3, 1}};
  CHECK_THROWS_AS(ds.validate(), ContractError);
  ds.samples = {{{1.0, 2.0}, 0, 0, 1}, {{1.0, 2.0}, 0, 0, 2}};
  CHECK_THROWS_AS(ds.validate(), ContractError);
}
