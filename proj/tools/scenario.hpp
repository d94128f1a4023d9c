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

// Scenario files: JSON documents naming a system, a state and one task.
// Matrices are either built-in names (pauli_x, pauli_y, pauli_z,
// identity_<d>), names declared under system.matrices, or nested arrays
// whose entries are real numbers or [re, im] pairs.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kqpd/applications.hpp"
#include "kqpd/engine.hpp"
#include "kqpd/fcs.hpp"
#include "kqpd/measurement.hpp"
#include "kqpd/phase_space.hpp"

namespace kqpd::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct Budgets {
  std::uint64_t trajectory_budget = std::uint64_t{1} << 20;
  std::size_t max_support = 20000;
  double aliasing_tolerance = 1e-6;
};

struct Scenario {
  json raw;
  std::string task;
  Eigen::Index dim = 0;
  std::map<std::string, ComplexMatrix> matrices;
  Tolerances tol;
  Budgets budgets;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  EngineOptions engine() const { return EngineOptions{tol, threads}; }
  FCSOptions fcs_options() const;

  /// Block of the current task; throws InvalidArgument if absent.
  const json& block(const std::string& name) const;

  ComplexMatrix matrix(const json& v, const std::string& where) const;
  ComplexVector vector(const json& v, const std::string& where) const;
  HermitianObservable observable(const json& v, const std::string& where) const;
  DensityMatrix state() const;
};

/// Tasks understood by `compute` and their subcommand names.
const std::vector<std::string>& task_names();

Scenario parse_scenario(const json& doc);
Scenario load_scenario(const std::string& path);

/// key=value; keys are Tolerances fields, budget fields, `seed` or `threads`.
void apply_override(Scenario& s, const std::string& assignment);

/// "pi", "2*pi", "pi/3", "-1.5e-2" and products/quotients of these.
double parse_real(const std::string& text);

// Task inputs built from the scenario; construction runs all validation.
SubsequentScenario build_subsequent(const Scenario& s, const json& steps, const std::string& where);
BackActionVector build_backaction(const Scenario& s);
std::vector<GaussianDetector> build_detectors(const json& v, const std::string& where);
GaussianDetector build_detector(const json& v, const std::string& where);
Wavefunction1D build_wavefunction(const Scenario& s);
WeakValueScenario build_weak_value(const Scenario& s);
LGScenario build_lg(const Scenario& s);
WorkScenario build_work(const Scenario& s);
FCSScenario build_fcs(const Scenario& s);

/// Builds everything the scenario's task needs, raising the first error.
void validate_scenario(const Scenario& s);

}  // namespace kqpd::cli
