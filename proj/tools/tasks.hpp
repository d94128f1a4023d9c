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

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "output.hpp"
#include "scenario.hpp"

namespace kqpd::cli {

/// key=from:to:count, count points including both ends.
struct Sweep {
  std::string key;
  double from = 0.0;
  double to = 0.0;
  int count = 0;

  static Sweep parse(const std::string& text);
  double at(int i) const { return count == 1 ? from : from + (to - from) * i / (count - 1); }
};

struct TaskResult {
  json doc;
  std::vector<Table> tables;
  /// Figure data: bar rows or (series, x, density) curves.
  Table plot;
  /// Extra artifacts as (file suffix, bytes).
  std::vector<std::pair<std::string, std::string>> blobs;
};

TaskResult run_task(const Scenario& s, const std::string& task, const std::optional<Sweep>& sweep = std::nullopt);

/// 0 ok, 2 validation, 3 budget or tolerance, 1 anything else.
int exit_code_for(ErrorCode code);

/// Writes the plot table; an empty result gives a header-only file.
void emit_plotdata(const TaskResult& r, const std::string& path);

}  // namespace kqpd::cli
