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

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsl/dataset.hpp"

namespace pcsl::cli {

/// Process exit codes. Each library error kind has its own code.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kParse = 5,
  kVersion = 6,
  kDimension = 7,
  kContract = 8,
  kNumeric = 9,
};

int exit_code_for_kind(const std::string& kind);

nlohmann::json to_json(const SynthSpec& spec);
/// Unknown keys and ill-typed values raise ConfigError naming the key.
SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec base = {});

/// Runs the tool on `args` (args[0] is the program name). Normal output goes
/// to `out`; failures print one line "error: <kind>: <message>" to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcsl::cli
