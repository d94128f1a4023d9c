// Copyright 2026 The kqpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Result serialization: deterministic JSON (17 significant digits, sorted
// keys) and CSV tables with '#' comment headers.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "kqpd/applications.hpp"
#include "kqpd/distribution.hpp"
#include "kqpd/measurement.hpp"
#include "kqpd/phase_space.hpp"

namespace kqpd::cli {

using nlohmann::json;

struct Table {
  std::string name;
  /// Written as '# ' lines before the column header.
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

json to_json(std::complex<double> z);
json to_json(const QuasiDistribution& q);
json to_json(const SignedGaussianMixture& m);
json to_json(const GaussianDetector& d);

/// Support columns a1..an, then weight and (if tracked) interference.
Table distribution_table(const std::string& name, const QuasiDistribution& q);

/// Pretty-printed, keys sorted, floats as %.17g, non-finite as null.
void write_json(std::ostream& out, const json& j);
std::string dump_json(const json& j);

/// Comma separated, LF line ends, %.17g numbers.
void write_csv(std::ostream& out, const Table& t);

/// Structural check of a result document; returns the problems found.
std::vector<std::string> check_result(const json& j);

}  // namespace kqpd::cli
