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

#include "textio.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "pcsl/error.hpp"

namespace pcsl::textio {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw IoError("cannot format floating-point value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(where + ": expected a real number, got '" +
                     std::string(token) + "'");
  }
  return value;
}

long long parse_int(std::string_view token, const std::string& where) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(where + ": expected an integer, got '" +
                     std::string(token) + "'");
  }
  return value;
}

LineReader::LineReader(std::istream& in, std::string source)
    : in_(in), source_(std::move(source)) {}

bool LineReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    tokens_.clear();
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens_.push_back(tok);
    if (!tokens_.empty()) return true;
  }
  tokens_.clear();
  return false;
}

void LineReader::require_next(const std::string& expected) {
  if (!next()) {
    throw ParseError(source_ + ": unexpected end of file, expected " + expected);
  }
}

std::string LineReader::where() const {
  return source_ + ":" + std::to_string(line_no_);
}

void LineReader::expect(const std::string& key, std::size_t n_values) const {
  if (tokens_.empty() || tokens_[0] != key) {
    throw ParseError(where() + ": expected record '" + key + "'");
  }
  if (tokens_.size() != n_values + 1) {
    throw ParseError(where() + ": record '" + key + "' has " +
                     std::to_string(tokens_.size() - 1) + " values, expected " +
                     std::to_string(n_values));
  }
}

void LineReader::expect_min(const std::string& key, std::size_t n_values) const {
  if (tokens_.empty() || tokens_[0] != key) {
    throw ParseError(where() + ": expected record '" + key + "'");
  }
  if (tokens_.size() < n_values + 1) {
    throw ParseError(where() + ": record '" + key + "' is too short");
  }
}

long long LineReader::int_at(std::size_t i) const {
  return parse_int(tokens_.at(i), where());
}

double LineReader::double_at(std::size_t i) const {
  return parse_double(tokens_.at(i), where());
}

void write_matrix(std::ostream& out, const std::string& key,
                  const Eigen::MatrixXd& m) {
  out << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << "row";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << format_double(m(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(LineReader& reader, const std::string& key) {
  reader.require_next("matrix '" + key + "'");
  reader.expect(key, 2);
  const auto rows = reader.int_at(1);
  const auto cols = reader.int_at(2);
  if (rows < 0 || cols < 0) {
    throw ParseError(reader.where() + ": negative matrix shape for '" + key + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    reader.require_next("row " + std::to_string(r) + " of '" + key + "'");
    reader.expect("row", static_cast<std::size_t>(cols));
    for (long long c = 0; c < cols; ++c) m(r, c) = reader.double_at(c + 1);
  }
  return m;
}

void write_vector(std::ostream& out, const std::string& key,
                  const Eigen::VectorXd& v) {
  out << key << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
  out << '\n';
}

Eigen::VectorXd read_vector(LineReader& reader, const std::string& key) {
  reader.require_next("vector '" + key + "'");
  reader.expect_min(key, 1);
  const auto n = reader.int_at(1);
  if (n < 0) throw ParseError(reader.where() + ": negative length for '" + key + "'");
  reader.expect(key, static_cast<std::size_t>(n) + 1);
  Eigen::VectorXd v(n);
  for (long long i = 0; i < n; ++i) v(i) = reader.double_at(i + 2);
  return v;
}

}  // namespace pcsl::textio

namespace pcsl {

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    try {
      writer(out);
    } catch (...) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw;
    }
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace pcsl
