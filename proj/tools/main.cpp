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

// kqpd command line: runs one scenario file and writes the result.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "output.hpp"
#include "scenario.hpp"
#include "tasks.hpp"

namespace {

using namespace kqpd;
using namespace kqpd::cli;

struct Flags {
  std::string scenario;
  std::string result;
  std::string out;
  std::string format = "both";
  std::string plotdata;
  unsigned threads = 0;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sweeps;
  bool quiet = false;
};

void diagnose(const std::string& kind, const std::string& message, int code) {
  json d{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << d.dump() << "\n";
}

std::string stem_of(const std::string& out) {
  const auto dot = out.rfind(".json");
  return dot != std::string::npos && dot + 5 == out.size() ? out.substr(0, dot) : out;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << bytes;
}

Scenario prepared(const Flags& fl) {
  Scenario s = load_scenario(fl.scenario);
  for (const auto& o : fl.overrides) apply_override(s, o);
  if (fl.seed) s.seed = *fl.seed;
  s.threads = fl.threads;
  return s;
}

int run_validate(const Flags& fl) {
  if (!fl.result.empty()) {
    std::ifstream in(fl.result);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot read result file '" + fl.result + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::InvalidArgument, fl.result + ": " + e.what());
    }
    const auto problems = check_result(doc);
    if (!problems.empty()) fail(ErrorCode::InvalidArgument, fl.result + ": " + problems.front());
    if (!fl.quiet) std::cout << "ok: " << fl.result << " is a valid result\n";
    return 0;
  }
  if (fl.scenario.empty()) fail(ErrorCode::InvalidArgument, "validate needs --scenario or --result");
  const Scenario s = prepared(fl);
  validate_scenario(s);
  if (!fl.quiet) std::cout << "ok: " << fl.scenario << " (task " << s.task << ")\n";
  return 0;
}

int run(const std::string& command, const Flags& fl) {
  if (command == "validate") return run_validate(fl);
  if (fl.scenario.empty()) fail(ErrorCode::InvalidArgument, "--scenario is required");
  if (fl.format != "json" && fl.format != "csv" && fl.format != "both")
    fail(ErrorCode::InvalidArgument, "--format must be json, csv or both");
  if (fl.sweeps.size() > 1) fail(ErrorCode::InvalidArgument, "only one --sweep is supported");
  const Scenario s = prepared(fl);
  const std::string task = command == "compute" ? s.task : command;
  std::optional<Sweep> sweep;
  if (!fl.sweeps.empty()) sweep = Sweep::parse(fl.sweeps.front());
  const TaskResult r = run_task(s, task, sweep);
  const std::string text = dump_json(r.doc);

  if (fl.out.empty()) {
    std::cout << text;
  } else {
    const std::string stem = stem_of(fl.out);
    write_file(stem + ".json", text);
    if (fl.format != "json") {
      for (const auto& t : r.tables) {
        std::ostringstream os;
        write_csv(os, t);
        write_file(stem + "." + t.name + ".csv", os.str());
      }
      for (const auto& [suffix, bytes] : r.blobs) write_file(stem + "." + suffix, bytes);
    }
    if (!fl.quiet) std::cerr << "wrote " << stem << ".json\n";
  }
  if (!fl.plotdata.empty()) emit_plotdata(r, fl.plotdata);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keldysh quasi-probability distributions of sequential quantum measurements"};
  app.require_subcommand(1);
  Flags fl;
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"compute", "run the task named in the scenario"},
      {"validate", "check a scenario (or a result with --result) without running it"},
      {"kqpd", "joint distribution of subsequent observables"},
      {"measure", "distribution seen by Gaussian detectors"},
      {"wigner", "Wigner, Husimi and measured phase-space distributions"},
      {"weak-value", "post-selected distribution and weak value"},
      {"leggett-garg", "three-time correlators and the K test"},
      {"work", "work distribution, two-point statistics and moments"},
      {"fcs", "full counting statistics of a time-integrated observable"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", fl.scenario, "scenario JSON file");
    if (name == "validate") {
      sub->add_option("--result", fl.result, "result JSON file to check");
    } else {
      sub->add_option("--out", fl.out, "output path; JSON at <out>.json, tables at <out>.<table>.csv");
      sub->add_option("--format", fl.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
      sub->add_option("--sweep", fl.sweeps, "key=from:to:count, e.g. theta=0:pi:64");
      sub->add_option("--plotdata", fl.plotdata, "write figure data CSV to this path");
    }
    sub->add_option("--threads", fl.threads, "worker threads (0 = all cores)");
    sub->add_option("--tolerance-overrides", fl.overrides, "key=value pairs")->expected(1, -1);
    sub->add_option("--seed", seed, "random seed");
    sub->add_flag("--quiet", fl.quiet, "suppress progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    diagnose("UsageError", e.what(), 2);
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) fl.seed = seed;

  try {
    return run(sub->get_name(), fl);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    diagnose(std::string(to_string(e.code())), e.detail(), code);
    return code;
  } catch (const std::exception& e) {
    diagnose("InternalError", e.what(), 1);
    return 1;
  }
}
