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

#include <benchmark/benchmark.h>

#include <random>

#include "pcsl/affinity.hpp"
#include "pcsl/embed.hpp"
#include "pcsl/evalmetrics.hpp"
#include "pcsl/losses.hpp"
#include "pcsl/trainer.hpp"

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, pcsl::Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// One PK batch (32 x 4) through the default 32-64-16 network.
void BM_ForwardBackward(benchmark::State& state) {
  pcsl::Rng rng(1);
  const auto model = pcsl::EmbeddingModel::he_init(32, 64, 16, rng);
  const Eigen::MatrixXd x = gaussian(32, 128, rng);
  const Eigen::MatrixXd up = gaussian(16, 128, rng);
  for (auto _ : state) {
    const auto cache = pcsl::forward_batch(model, x);
    benchmark::DoNotOptimize(pcsl::backward(model, cache, up));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_IntraTriplet(benchmark::State& state) {
  pcsl::Rng rng(2);
  const Eigen::MatrixXd e = gaussian(16, 128, rng);
  std::vector<int> person;
  for (int p = 0; p < 32; ++p)
    for (int k = 0; k < 4; ++k) person.push_back(p);
  for (auto _ : state) benchmark::DoNotOptimize(pcsl::intra_triplet_loss({e, person, 0}, 0.3));
}
BENCHMARK(BM_IntraTriplet);

// Affinity over C persons spread across four cameras.
void BM_BuildAffinity(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  pcsl::Rng rng(3);
  const pcsl::PersonIndex index({c / 4, c / 4, c / 4, c - 3 * (c / 4)});
  pcsl::PersonBuffer buffer(16, c);
  const Eigen::MatrixXd f = gaussian(16, c, rng);
  for (int i = 0; i < c; ++i) buffer.set_person(i, f.col(i));
  for (auto _ : state) benchmark::DoNotOptimize(pcsl::build_affinity(buffer, index, 6));
}
BENCHMARK(BM_BuildAffinity)->Arg(100)->Arg(400)->Arg(1600);

void BM_EvaluateBenchmarkSplit(benchmark::State& state) {
  const auto corpus = pcsl::generate_synthetic(pcsl::SynthSpec{});
  pcsl::Rng rng(4);
  const auto model = pcsl::EmbeddingModel::he_init(corpus.query.d_in, 64, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(pcsl::evaluate(model, corpus.query, corpus.gallery));
}
BENCHMARK(BM_EvaluateBenchmarkSplit);

// Whole epochs on the default benchmark corpus: warm-up only, or joint with D.
void BM_TrainEpoch(benchmark::State& state) {
  const auto corpus = pcsl::generate_synthetic(pcsl::SynthSpec{});
  pcsl::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_epochs = state.range(0) ? 1 : 2;
  cfg.eval_every = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pcsl::train(corpus.train, cfg));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
