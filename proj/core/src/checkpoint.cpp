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

#include "pcsl/checkpoint.hpp"

#include <fstream>

#include "pcsl/error.hpp"
#include "textio.hpp"

namespace pcsl {

namespace {

bool same(const ModelGrads& a, const ModelGrads& b) {
  return a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() && a.w2.rows() == b.w2.rows() &&
         a.w2.cols() == b.w2.cols() && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 &&
         a.b2 == b.b2;
}

bool same(const HeadGrads& a, const HeadGrads& b) {
  return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
         a.weight == b.weight && a.bias == b.bias;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  return model == o.model && head == o.head &&
         optimizer.learning_rate_pretrained == o.optimizer.learning_rate_pretrained &&
         optimizer.learning_rate_new == o.optimizer.learning_rate_new &&
         optimizer.momentum == o.optimizer.momentum &&
         optimizer.weight_decay == o.optimizer.weight_decay &&
         optimizer.decay_epoch == o.optimizer.decay_epoch &&
         optimizer.decay_factor == o.optimizer.decay_factor &&
         same(state.body_velocity, o.state.body_velocity) &&
         same(state.head_velocity, o.state.head_velocity) && buffer == o.buffer &&
         epoch == o.epoch;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  using textio::format_double;
  textio::write_atomically(path, [&](std::ostream& out) {
    out << "pcsl-checkpoint " << kCheckpointFormatVersion << '\n';
    out << "epoch " << ck.epoch << '\n';
    const auto& o = ck.optimizer;
    out << "optimizer " << format_double(o.learning_rate_pretrained) << ' '
        << format_double(o.learning_rate_new) << ' ' << format_double(o.momentum) << ' '
        << format_double(o.weight_decay) << ' ' << o.decay_epoch << ' '
        << format_double(o.decay_factor) << '\n';
    textio::write_matrix(out, "w1", ck.model.w1);
    textio::write_vector(out, "b1", ck.model.b1);
    textio::write_matrix(out, "w2", ck.model.w2);
    textio::write_vector(out, "b2", ck.model.b2);
    textio::write_matrix(out, "head_weight", ck.head.weight);
    textio::write_vector(out, "head_bias", ck.head.bias);
    textio::write_matrix(out, "vel_w1", ck.state.body_velocity.w1);
    textio::write_vector(out, "vel_b1", ck.state.body_velocity.b1);
    textio::write_matrix(out, "vel_w2", ck.state.body_velocity.w2);
    textio::write_vector(out, "vel_b2", ck.state.body_velocity.b2);
    textio::write_matrix(out, "vel_head_weight", ck.state.head_velocity.weight);
    textio::write_vector(out, "vel_head_bias", ck.state.head_velocity.bias);
    out << "buffer_iteration " << ck.buffer.iteration() << '\n';
    out << "buffer_flags " << ck.buffer.flags().size();
    for (char f : ck.buffer.flags()) out << ' ' << (f ? 1 : 0);
    out << '\n';
    textio::write_matrix(out, "buffer", ck.buffer.features());
    out << "end\n";
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  textio::LineReader r(in, path.string());

  r.require_next("header");
  r.expect("pcsl-checkpoint", 1);
  if (r.int_at(1) != kCheckpointFormatVersion) {
    throw VersionError(r.where() + ": checkpoint format version " + r.tokens()[1] +
                       " is not supported (expected " +
                       std::to_string(kCheckpointFormatVersion) + ")");
  }
  Checkpoint ck;
  r.require_next("epoch");
  r.expect("epoch", 1);
  ck.epoch = static_cast<int>(r.int_at(1));
  r.require_next("optimizer");
  r.expect("optimizer", 6);
  ck.optimizer.learning_rate_pretrained = r.double_at(1);
  ck.optimizer.learning_rate_new = r.double_at(2);
  ck.optimizer.momentum = r.double_at(3);
  ck.optimizer.weight_decay = r.double_at(4);
  ck.optimizer.decay_epoch = static_cast<int>(r.int_at(5));
  ck.optimizer.decay_factor = r.double_at(6);

  ck.model.w1 = textio::read_matrix(r, "w1");
  ck.model.b1 = textio::read_vector(r, "b1");
  ck.model.w2 = textio::read_matrix(r, "w2");
  ck.model.b2 = textio::read_vector(r, "b2");
  ck.head.weight = textio::read_matrix(r, "head_weight");
  ck.head.bias = textio::read_vector(r, "head_bias");
  ck.state.body_velocity.w1 = textio::read_matrix(r, "vel_w1");
  ck.state.body_velocity.b1 = textio::read_vector(r, "vel_b1");
  ck.state.body_velocity.w2 = textio::read_matrix(r, "vel_w2");
  ck.state.body_velocity.b2 = textio::read_vector(r, "vel_b2");
  ck.state.head_velocity.weight = textio::read_matrix(r, "vel_head_weight");
  ck.state.head_velocity.bias = textio::read_vector(r, "vel_head_bias");

  r.require_next("buffer_iteration");
  r.expect("buffer_iteration", 1);
  const long iteration = static_cast<long>(r.int_at(1));
  r.require_next("buffer_flags");
  r.expect_min("buffer_flags", 1);
  const auto n_flags = r.int_at(1);
  if (n_flags < 0) throw ParseError(r.where() + ": negative flag count");
  r.expect("buffer_flags", static_cast<std::size_t>(n_flags) + 1);
  std::vector<char> flags;
  for (long long i = 0; i < n_flags; ++i) flags.push_back(r.int_at(i + 2) != 0 ? 1 : 0);
  Eigen::MatrixXd features = textio::read_matrix(r, "buffer");
  r.require_next("end marker");
  r.expect("end", 0);

  const auto& m = ck.model;
  const bool shapes_ok =
      m.b1.size() == m.w1.rows() && m.w2.cols() == m.w1.rows() && m.b2.size() == m.w2.rows() &&
      ck.head.weight.cols() == m.w2.rows() && ck.head.bias.size() == ck.head.weight.rows() &&
      ck.state.body_velocity.w1.rows() == m.w1.rows() &&
      ck.state.body_velocity.w1.cols() == m.w1.cols() &&
      ck.state.body_velocity.w2.rows() == m.w2.rows() &&
      ck.state.body_velocity.w2.cols() == m.w2.cols() &&
      ck.state.body_velocity.b1.size() == m.b1.size() &&
      ck.state.body_velocity.b2.size() == m.b2.size() &&
      ck.state.head_velocity.weight.rows() == ck.head.weight.rows() &&
      ck.state.head_velocity.weight.cols() == ck.head.weight.cols() &&
      ck.state.head_velocity.bias.size() == ck.head.bias.size() &&
      static_cast<Eigen::Index>(flags.size()) == features.cols();
  if (!shapes_ok) throw ParseError(path.string() + ": inconsistent parameter shapes");
  ck.buffer = PersonBuffer::restore(std::move(features), std::move(flags), iteration);
  return ck;
}

}  // namespace pcsl
