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

#include <string>

#include <Eigen/Dense>

#include "pcsl/rng.hpp"

namespace pcsl {

/// Two-layer perceptron v = W2 * relu(W1 * x + b1) + b2. Embeddings are not
/// length-normalised; downstream distances are plain Euclidean.
struct EmbeddingModel {
  Eigen::MatrixXd w1;  // H x D_in
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // d x H
  Eigen::VectorXd b2;  // d

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int embed_dim() const { return static_cast<int>(w2.rows()); }

  static EmbeddingModel zeros(int d_in, int hidden, int d);
  /// He fan-in initialisation for weights, zero biases.
  static EmbeddingModel he_init(int d_in, int hidden, int d, Rng& rng);

  bool all_finite() const;
  bool operator==(const EmbeddingModel&) const;
};

/// Linear classifier over embeddings, one score per person class.
struct ClassifierHead {
  Eigen::MatrixXd weight;  // C x d
  Eigen::VectorXd bias;    // C

  int num_classes() const { return static_cast<int>(weight.rows()); }
  int embed_dim() const { return static_cast<int>(weight.cols()); }

  static ClassifierHead zeros(int classes, int d);
  static ClassifierHead he_init(int classes, int d, Rng& rng);

  /// Scores for every column of `embeddings` (d x B) -> C x B.
  Eigen::MatrixXd scores(const Eigen::MatrixXd& embeddings) const;

  bool all_finite() const;
  bool operator==(const ClassifierHead&) const;
};

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd input;       // D_in x B
  Eigen::MatrixXd pre_hidden;  // H x B
  Eigen::MatrixXd hidden;      // H x B
  Eigen::MatrixXd output;      // d x B
};

Eigen::VectorXd forward(const EmbeddingModel& model, const Eigen::VectorXd& x);
ForwardCache forward_batch(const EmbeddingModel& model, const Eigen::MatrixXd& inputs);
/// Embeddings only, without keeping activations.
Eigen::MatrixXd embed(const EmbeddingModel& model, const Eigen::MatrixXd& inputs);

struct ModelGrads {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static ModelGrads zeros_like(const EmbeddingModel& model);
  ModelGrads& operator+=(const ModelGrads& other);
  ModelGrads& operator*=(double s);
};

struct HeadGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  static HeadGrads zeros_like(const ClassifierHead& head);
  HeadGrads& operator+=(const HeadGrads& other);
  HeadGrads& operator*=(double s);
};

struct BackwardResult {
  ModelGrads params;
  Eigen::MatrixXd input_grads;  // D_in x B
};

/// Gradients of sum_b <upstream_b, v_b> with respect to the parameters and
/// inputs, given the cache of the matching forward_batch call.
BackwardResult backward(const EmbeddingModel& model, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream);

struct HeadBackwardResult {
  HeadGrads params;
  Eigen::MatrixXd embedding_grads;  // d x B
};

HeadBackwardResult head_backward(const ClassifierHead& head,
                                 const Eigen::MatrixXd& embeddings,
                                 const Eigen::MatrixXd& score_grads);

/// Momentum SGD with a step decay. The embedding body plays the role of the
/// fine-tuned network and the classifier head the role of the newly added
/// layer, so each gets its own base rate.
struct Optimizer {
  double learning_rate_pretrained = 0.1;
  double learning_rate_new = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int decay_epoch = 200;
  double decay_factor = 0.1;

  /// Rates in effect during `epoch` (1-based).
  double body_rate(int epoch) const;
  double head_rate(int epoch) const;
  void validate() const;
};

struct OptimizerState {
  ModelGrads body_velocity;
  HeadGrads head_velocity;

  static OptimizerState zeros_like(const EmbeddingModel& model, const ClassifierHead& head);
};

/// One momentum step: velocity = momentum * velocity + grad (+ decay * theta);
/// theta -= rate * velocity. Refuses the whole update if any gradient is
/// non-finite, naming the offending parameter.
void sgd_step(EmbeddingModel& model, ClassifierHead& head, const ModelGrads& grads,
              const HeadGrads& head_grads, const Optimizer& opt, OptimizerState& state,
              int epoch);

}  // namespace pcsl
