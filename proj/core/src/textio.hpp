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

// Helpers shared by the versioned text formats (datasets, checkpoints).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pcsl/fileio.hpp"

namespace pcsl::textio {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view token, const std::string& where);
long long parse_int(std::string_view token, const std::string& where);

/// Line-oriented tokenizer that remembers where it is for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source);

  /// Advances to the next non-blank line. Returns false at end of input.
  bool next();
  /// Like next(), but throws ParseError mentioning `expected` at EOF.
  void require_next(const std::string& expected);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::string where() const;

  /// Checks that the current line starts with `key` and has exactly
  /// `n_values` further tokens.
  void expect(const std::string& key, std::size_t n_values) const;
  void expect_min(const std::string& key, std::size_t n_values) const;

  long long int_at(std::size_t i) const;
  double double_at(std::size_t i) const;

 private:
  std::istream& in_;
  std::string source_;
  long line_no_ = 0;
  std::vector<std::string> tokens_;
};

void write_matrix(std::ostream& out, const std::string& key,
                  const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(LineReader& reader, const std::string& key);
void write_vector(std::ostream& out, const std::string& key,
                  const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(LineReader& reader, const std::string& key);

using pcsl::write_atomically;

}  // namespace pcsl::textio
