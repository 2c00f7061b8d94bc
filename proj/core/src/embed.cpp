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

#include "pcsl/embed.hpp"

#include <cmath>

#include "pcsl/error.hpp"

namespace pcsl {

namespace {

Eigen::MatrixXd he_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / cols));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

template <typename M>
bool finite(const M& m) {
  return m.allFinite();
}

}  // namespace

EmbeddingModel EmbeddingModel::zeros(int d_in, int hidden, int d) {
  if (d_in < 1 || hidden < 1 || d < 1) throw ContractError("model dimensions must be positive");
  return {Eigen::MatrixXd::Zero(hidden, d_in), Eigen::VectorXd::Zero(hidden),
          Eigen::MatrixXd::Zero(d, hidden), Eigen::VectorXd::Zero(d)};
}

EmbeddingModel EmbeddingModel::he_init(int d_in, int hidden, int d, Rng& rng) {
  auto m = zeros(d_in, hidden, d);
  m.w1 = he_matrix(hidden, d_in, rng);
  m.w2 = he_matrix(d, hidden, rng);
  return m;
}

bool EmbeddingModel::all_finite() const {
  return finite(w1) && finite(b1) && finite(w2) && finite(b2);
}

bool EmbeddingModel::operator==(const EmbeddingModel& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() &&
         w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols() && w1 == o.w1 &&
         b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
}

ClassifierHead ClassifierHead::zeros(int classes, int d) {
  if (classes < 1 || d < 1) throw ContractError("head dimensions must be positive");
  return {Eigen::MatrixXd::Zero(classes, d), Eigen::VectorXd::Zero(classes)};
}

ClassifierHead ClassifierHead::he_init(int classes, int d, Rng& rng) {
  auto h = zeros(classes, d);
  h.weight = he_matrix(classes, d, rng);
  return h;
}

Eigen::MatrixXd ClassifierHead::scores(const Eigen::MatrixXd& embeddings) const {
  if (embeddings.rows() != embed_dim()) {
    throw DimensionError("classifier expects embeddings of dimension " +
                         std::to_string(embed_dim()) + ", got " +
                         std::to_string(embeddings.rows()));
  }
  return (weight * embeddings).colwise() + bias;
}

bool ClassifierHead::all_finite() const { return finite(weight) && finite(bias); }

bool ClassifierHead::operator==(const ClassifierHead& o) const {
  return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
         weight == o.weight && bias == o.bias;
}

Eigen::VectorXd forward(const EmbeddingModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim()) {
    throw DimensionError("input has length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.input_dim()));
  }
  const Eigen::VectorXd hidden = (model.w1 * x + model.b1).cwiseMax(0.0);
  return model.w2 * hidden + model.b2;
}

ForwardCache forward_batch(const EmbeddingModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != model.input_dim()) {
    throw DimensionError("inputs have " + std::to_string(inputs.rows()) +
                         " rows, model expects " + std::to_string(model.input_dim()));
  }
  ForwardCache c;
  c.input = inputs;
  c.pre_hidden = (model.w1 * inputs).colwise() + model.b1;
  c.hidden = c.pre_hidden.cwiseMax(0.0);
  c.output = (model.w2 * c.hidden).colwise() + model.b2;
  return c;
}

Eigen::MatrixXd embed(const EmbeddingModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != model.input_dim()) {
    throw DimensionError("inputs have " + std::to_string(inputs.rows()) +
                         " rows, model expects " + std::to_string(model.input_dim()));
  }
  const Eigen::MatrixXd hidden = ((model.w1 * inputs).colwise() + model.b1).cwiseMax(0.0);
  return (model.w2 * hidden).colwise() + model.b2;
}

ModelGrads ModelGrads::zeros_like(const EmbeddingModel& m) {
  return {Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols()), Eigen::VectorXd::Zero(m.b1.size()),
          Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols()), Eigen::VectorXd::Zero(m.b2.size())};
}

ModelGrads& ModelGrads::operator+=(const ModelGrads& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  return *this;
}

ModelGrads& ModelGrads::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  b2 *= s;
  return *this;
}

HeadGrads HeadGrads::zeros_like(const ClassifierHead& h) {
  return {Eigen::MatrixXd::Zero(h.weight.rows(), h.weight.cols()),
          Eigen::VectorXd::Zero(h.bias.size())};
}

HeadGrads& HeadGrads::operator+=(const HeadGrads& o) {
  weight += o.weight;
  bias += o.bias;
  return *this;
}

HeadGrads& HeadGrads::operator*=(double s) {
  weight *= s;
  bias *= s;
  return *this;
}

BackwardResult backward(const EmbeddingModel& model, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream) {
  if (upstream.rows() != model.embed_dim() || upstream.cols() != cache.output.cols()) {
    throw DimensionError("upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + ", forward output was " +
                         std::to_string(cache.output.rows()) + "x" +
                         std::to_string(cache.output.cols()));
  }
  BackwardResult r;
  r.params.w2 = upstream * cache.hidden.transpose();
  r.params.b2 = upstream.rowwise().sum();
  const Eigen::MatrixXd d_hidden = model.w2.transpose() * upstream;
  const Eigen::MatrixXd d_pre =
      d_hidden.cwiseProduct((cache.pre_hidden.array() > 0.0).cast<double>().matrix());
  r.params.w1 = d_pre * cache.input.transpose();
  r.params.b1 = d_pre.rowwise().sum();
  r.input_grads = model.w1.transpose() * d_pre;
  return r;
}

HeadBackwardResult head_backward(const ClassifierHead& head, const Eigen::MatrixXd& embeddings,
                                 const Eigen::MatrixXd& score_grads) {
  if (score_grads.rows() != head.num_classes() || score_grads.cols() != embeddings.cols() ||
      embeddings.rows() != head.embed_dim()) {
    throw DimensionError("score gradient shape does not match classifier and embeddings");
  }
  HeadBackwardResult r;
  r.params.weight = score_grads * embeddings.transpose();
  r.params.bias = score_grads.rowwise().sum();
  r.embedding_grads = head.weight.transpose() * score_grads;
  return r;
}

double Optimizer::body_rate(int epoch) const {
  return epoch >= decay_epoch ? learning_rate_pretrained * decay_factor
                              : learning_rate_pretrained;
}

double Optimizer::head_rate(int epoch) const {
  return epoch >= decay_epoch ? learning_rate_new * decay_factor : learning_rate_new;
}

void Optimizer::validate() const {
  if (!(learning_rate_pretrained > 0.0) || !(learning_rate_new > 0.0)) {
    throw ConfigError("learning rates must be strictly positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (decay_epoch < 1) throw ConfigError("decay_epoch must be >= 1");
  if (!(decay_factor > 0.0)) throw ConfigError("decay_factor must be positive");
}

OptimizerState OptimizerState::zeros_like(const EmbeddingModel& model,
                                          const ClassifierHead& head) {
  return {ModelGrads::zeros_like(model), HeadGrads::zeros_like(head)};
}

namespace {

template <typename P, typename G, typename V>
void momentum_update(P& param, const G& grad, V& velocity, double rate, const Optimizer& opt) {
  if (opt.weight_decay > 0.0) {
    velocity = opt.momentum * velocity + grad + opt.weight_decay * param;
  } else {
    velocity = opt.momentum * velocity + grad;
  }
  param -= rate * velocity;
}

void check_finite(bool ok, const char* name) {
  if (!ok) throw NumericError(std::string("non-finite gradient in parameter '") + name + "'");
}

}  // namespace

void sgd_step(EmbeddingModel& model, ClassifierHead& head, const ModelGrads& grads,
              const HeadGrads& head_grads, const Optimizer& opt, OptimizerState& state,
              int epoch) {
  check_finite(grads.w1.allFinite(), "w1");
  check_finite(grads.b1.allFinite(), "b1");
  check_finite(grads.w2.allFinite(), "w2");
  check_finite(grads.b2.allFinite(), "b2");
  check_finite(head_grads.weight.allFinite(), "head.weight");
  check_finite(head_grads.bias.allFinite(), "head.bias");

  const double body = opt.body_rate(epoch);
  const double new_layers = opt.head_rate(epoch);
  momentum_update(model.w1, grads.w1, state.body_velocity.w1, body, opt);
  momentum_update(model.b1, grads.b1, state.body_velocity.b1, body, opt);
  momentum_update(model.w2, grads.w2, state.body_velocity.w2, body, opt);
  momentum_update(model.b2, grads.b2, state.body_velocity.b2, body, opt);
  momentum_update(head.weight, head_grads.weight, state.head_velocity.weight, new_layers, opt);
  momentum_update(head.bias, head_grads.bias, state.head_velocity.bias, new_layers, opt);
}

}  // namespace pcsl
