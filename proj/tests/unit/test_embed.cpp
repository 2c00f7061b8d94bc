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

#include <cmath>

#include "../support/gradcheck.hpp"
#include "pcsl/embed.hpp"
#include "pcsl/error.hpp"

using namespace pcsl;

namespace {

// Straight-line evaluation of the two layers, one scalar at a time.
Eigen::VectorXd forward_by_hand(const EmbeddingModel& m, const Eigen::VectorXd& x) {
  std::vector<double> h(m.hidden_dim());
  for (int i = 0; i < m.hidden_dim(); ++i) {
    double s = m.b1(i);
    for (int j = 0; j < m.input_dim(); ++j) s += m.w1(i, j) * x(j);
    h[i] = s > 0 ? s : 0;
  }
  Eigen::VectorXd v(m.embed_dim());
  for (int i = 0; i < m.embed_dim(); ++i) {
    double s = m.b2(i);
    for (int j = 0; j < m.hidden_dim(); ++j) s += m.w2(i, j) * h[j];
    v(i) = s;
  }
  return v;
}

}  // namespace

TEST_CASE("zero parameters map everything to zero") {
  const auto m = EmbeddingModel::zeros(4, 5, 3);
  CHECK(forward(m, Eigen::VectorXd::Constant(4, 2.5)).isZero(0));
}

TEST_CASE("identity layers pass nonnegative inputs through") {
  auto m = EmbeddingModel::zeros(4, 4, 4);
  m.w1.setIdentity();
  m.w2.setIdentity();
  const Eigen::VectorXd x = (Eigen::VectorXd(4) << 0.0, 1.5, 2.0, 7.25).finished();
  CHECK(forward(m, x) == x);
}

TEST_CASE("forward matches a scalar re-evaluation") {
  Rng rng(3);
  const auto m = EmbeddingModel::he_init(7, 11, 5, rng);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = gradcheck::random_matrix(7, 1, rng);
    CHECK((forward(m, x) - forward_by_hand(m, x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward_batch and embed agree with per-sample forward") {
  Rng rng(4);
  const auto m = EmbeddingModel::he_init(6, 8, 3, rng);
  const Eigen::MatrixXd x = gradcheck::random_matrix(6, 5, rng);
  const auto cache = forward_batch(m, x);
  const Eigen::MatrixXd e = embed(m, x);
  for (int b = 0; b < 5; ++b) {
    CHECK((cache.output.col(b) - forward(m, x.col(b))).norm() <= 1e-12);
    CHECK((e.col(b) - cache.output.col(b)).norm() == 0.0);
  }
}

TEST_CASE("wrong input length is a dimension error") {
  const auto m = EmbeddingModel::zeros(4, 5, 3);
  CHECK_THROWS_AS(forward(m, Eigen::VectorXd::Zero(3)), DimensionError);
  CHECK_THROWS_AS(forward_batch(m, Eigen::MatrixXd::Zero(5, 2)), DimensionError);
}

TEST_CASE("he_init draws fan-in scaled weights and zero biases") {
  Rng rng(5);
  const auto m = EmbeddingModel::he_init(200, 300, 50, rng);
  CHECK(m.b1.isZero(0));
  CHECK(m.b2.isZero(0));
  const double var1 = m.w1.squaredNorm() / static_cast<double>(m.w1.size());
  const double var2 = m.w2.squaredNorm() / static_cast<double>(m.w2.size());
  CHECK(var1 == doctest::Approx(2.0 / 200).epsilon(0.05));
  CHECK(var2 == doctest::Approx(2.0 / 300).epsilon(0.05));
}

TEST_CASE("backward is linear in the upstream gradient") {
  Rng rng(6);
  const auto m = EmbeddingModel::he_init(5, 7, 3, rng);
  const Eigen::MatrixXd x = gradcheck::random_matrix(5, 2, rng);
  const auto cache = forward_batch(m, x);

  SUBCASE("zero upstream gives zero gradients") {
    const auto r = backward(m, cache, Eigen::MatrixXd::Zero(3, 2));
    CHECK(r.params.w1.isZero(0));
    CHECK(r.params.b1.isZero(0));
    CHECK(r.params.w2.isZero(0));
    CHECK(r.params.b2.isZero(0));
    CHECK(r.input_grads.isZero(0));
  }
  SUBCASE("a batch of two is the sum of two singletons") {
    const Eigen::MatrixXd up = gradcheck::random_matrix(3, 2, rng);
    const auto both = backward(m, cache, up).params;
    auto a = backward(m, forward_batch(m, x.col(0)), up.col(0)).params;
    a += backward(m, forward_batch(m, x.col(1)), up.col(1)).params;
    CHECK((both.w1 - a.w1).norm() <= 1e-12);
    CHECK((both.b1 - a.b1).norm() <= 1e-12);
    CHECK((both.w2 - a.w2).norm() <= 1e-12);
    CHECK((both.b2 - a.b2).norm() <= 1e-12);
  }
  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(backward(m, cache, Eigen::MatrixXd::Zero(3, 3)), DimensionError);
  }
}

TEST_CASE("half squared norm: parameter and input gradients match central differences") {
  Rng rng(7);
  auto m = EmbeddingModel::he_init(4, 6, 3, rng);
  Eigen::MatrixXd x = gradcheck::random_matrix(4, 1, rng);
  auto loss = [&] { return 0.5 * embed(m, x).squaredNorm(); };
  const auto cache = forward_batch(m, x);
  const auto r = backward(m, cache, cache.output);
  std::vector<gradcheck::Slot> slots;
  gradcheck::collect(slots, m.w1, r.params.w1);
  gradcheck::collect(slots, m.b1, r.params.b1);
  gradcheck::collect(slots, m.w2, r.params.w2);
  gradcheck::collect(slots, m.b2, r.params.b2);
  gradcheck::collect(slots, x, r.input_grads);
  for (auto& s : slots) {
    const double numeric = oracle::central_difference(loss, *s.value, gradcheck::kStep);
    CHECK(oracle::relative_error(s.analytic, numeric) <= gradcheck::kTolerance);
  }
}

TEST_CASE("classifier head scores and gradients") {
  Rng rng(8);
  auto head = ClassifierHead::he_init(5, 3, rng);
  CHECK(head.bias.isZero(0));
  Eigen::MatrixXd v = gradcheck::random_matrix(3, 2, rng);
  const Eigen::MatrixXd s = head.scores(v);
  REQUIRE(s.rows() == 5);
  REQUIRE(s.cols() == 2);
  CHECK((s.col(1) - (head.weight * v.col(1) + head.bias)).norm() <= 1e-12);

  const Eigen::MatrixXd up = gradcheck::random_matrix(5, 2, rng);
  auto loss = [&] { return (up.array() * head.scores(v).array()).sum(); };
  const auto r = head_backward(head, v, up);
  std::vector<gradcheck::Slot> slots;
  gradcheck::collect(slots, head.weight, r.params.weight);
  gradcheck::collect(slots, head.bias, r.params.bias);
  gradcheck::collect(slots, v, r.embedding_grads);
  for (auto& sl : slots) {
    CHECK(oracle::relative_error(sl.analytic,
                                 oracle::central_difference(loss, *sl.value, gradcheck::kStep)) <=
          gradcheck::kTolerance);
  }
  CHECK_THROWS_AS(head_backward(head, v, Eigen::MatrixXd::Zero(4, 2)), DimensionError);
}

TEST_CASE("plain SGD step") {
  auto m = EmbeddingModel::zeros(2, 2, 2);
  auto head = ClassifierHead::zeros(3, 2);
  Optimizer opt;
  opt.momentum = 0.0;
  auto state = OptimizerState::zeros_like(m, head);
  auto g = ModelGrads::zeros_like(m);
  g.w1.setConstant(1.0);
  g.b2.setConstant(-2.0);
  auto hg = HeadGrads::zeros_like(head);
  hg.bias.setConstant(1.0);
  sgd_step(m, head, g, hg, opt, state, 1);
  CHECK(m.w1(0, 0) == doctest::Approx(-0.1));
  CHECK(m.b2(1) == doctest::Approx(0.2));
  CHECK(head.bias(2) == doctest::Approx(-0.01));
}

TEST_CASE("learning rates drop by the decay factor from the decay epoch on") {
  const Optimizer opt;
  CHECK(opt.body_rate(199) == 0.1);
  CHECK(opt.head_rate(199) == 0.01);
  CHECK(opt.body_rate(200) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(opt.head_rate(300) == doctest::Approx(0.001).epsilon(1e-15));
}

TEST_CASE("momentum: second displacement under a constant gradient is 1.9 lr g") {
  auto m = EmbeddingModel::zeros(1, 1, 1);
  auto head = ClassifierHead::zeros(1, 1);
  Optimizer opt;  // momentum 0.9
  opt.weight_decay = 0.0;
  auto state = OptimizerState::zeros_like(m, head);
  auto g = ModelGrads::zeros_like(m);
  g.w2(0, 0) = 0.5;
  const auto hg = HeadGrads::zeros_like(head);
  sgd_step(m, head, g, hg, opt, state, 1);
  const double after_first = m.w2(0, 0);
  sgd_step(m, head, g, hg, opt, state, 1);
  CHECK(after_first - m.w2(0, 0) == doctest::Approx(1.9 * 0.1 * 0.5).epsilon(1e-12));
}

TEST_CASE("non-finite gradients are refused and named") {
  Rng rng(9);
  auto m = EmbeddingModel::he_init(2, 3, 2, rng);
  auto head = ClassifierHead::he_init(2, 2, rng);
  const auto before = m;
  auto state = OptimizerState::zeros_like(m, head);
  auto g = ModelGrads::zeros_like(m);
  g.b1(1) = std::nan("");
  try {
    sgd_step(m, head, g, HeadGrads::zeros_like(head), Optimizer{}, state, 1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("b1") != std::string::npos);
  }
  CHECK(m == before);
}
