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

#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace kqpd::cli {

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void write_value(std::ostream& out, const json& j, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
  const std::string close(2 * static_cast<std::size_t>(depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << json(it.key()).dump() << ": ";
        write_value(out, it.value(), depth + 1);
      }
      out << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        out << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          write_value(out, j[i], depth + 1);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        write_value(out, j[i], depth + 1);
      }
      out << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float:
      out << fmt(j.get<double>());
      return;
    default:
      out << j.dump();
  }
}

}  // namespace

json to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json to_json(const QuasiDistribution& q) {
  json j;
  j["dims"] = q.dims();
  j["support"] = matrix_rows(q.support());
  j["weights"] = vec(q.weights());
  if (q.tracks_interference()) j["interference"] = vec(q.interference());
  j["total_weight"] = q.total_weight();
  j["min_weight"] = q.empty() ? 0.0 : q.min_weight();
  j["total_variation"] = q.total_variation();
  j["max_imag_residual"] = q.max_imag_residual();
  return j;
}

json to_json(const SignedGaussianMixture& m) {
  json j;
  j["dims"] = m.dims();
  j["centers"] = matrix_rows(m.centers());
  j["widths"] = matrix_rows(m.widths());
  j["weights"] = vec(m.weights());
  j["total_weight"] = m.total_weight();
  j["warnings"] = m.warnings();
  return j;
}

json to_json(const GaussianDetector& d) {
  return json{{"sigma_imp", d.sigma_imp}, {"sigma_ba", d.sigma_ba}, {"chi", d.chi}, {"heisenberg_ok", d.heisenberg_ok()}};
}

Table distribution_table(const std::string& name, const QuasiDistribution& q) {
  Table t;
  t.name = name;
  for (Eigen::Index l = 0; l < q.dims(); ++l) t.columns.push_back("a" + std::to_string(l + 1));
  t.columns.push_back("weight");
  if (q.tracks_interference()) t.columns.push_back("interference");
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    std::vector<double> row;
    for (Eigen::Index l = 0; l < q.dims(); ++l) row.push_back(q.support()(i, l));
    row.push_back(q.weight(i));
    if (q.tracks_interference()) row.push_back(q.interference()(i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_json(std::ostream& out, const json& j) {
  write_value(out, j, 0);
  out << "\n";
}

std::string dump_json(const json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

void write_csv(std::ostream& out, const Table& t) {
  for (const auto& c : t.comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
    out << "\n";
  }
}

std::vector<std::string> check_result(const json& j) {
  std::vector<std::string> problems;
  if (!j.is_object()) return {"result must be an object"};
  auto need = [&](const char* key, bool (json::*is)() const noexcept, const char* type) {
    if (!j.contains(key)) problems.push_back(std::string("missing '") + key + "'");
    else if (!(j.at(key).*is)()) problems.push_back(std::string("'") + key + "' must be " + type);
  };
  need("schema_version", &json::is_number_integer, "an integer");
  need("task", &json::is_string, "a string");
  need("inputs", &json::is_object, "an object");
  need("result", &json::is_object, "an object");
  need("checks", &json::is_object, "an object");
  need("warnings", &json::is_array, "an array");
  if (!problems.empty()) return problems;
  for (auto it = j.at("checks").begin(); it != j.at("checks").end(); ++it)
    if (!it.value().is_boolean()) problems.push_back("check '" + it.key() + "' must be a boolean");
  for (const auto& w : j.at("warnings"))
    if (!w.is_string()) problems.push_back("warnings must be strings");
  // Every embedded distribution carries matching support and weights.
  std::vector<const json*> stack{&j.at("result")};
  while (!stack.empty()) {
    const json* cur = stack.back();
    stack.pop_back();
    if (cur->is_object()) {
      if (cur->contains("support") && cur->contains("weights")) {
        const json& s = cur->at("support");
        const json& w = cur->at("weights");
        if (!s.is_array() || !w.is_array() || s.size() != w.size())
          problems.push_back("distribution support and weights differ in length");
      }
      for (auto it = cur->begin(); it != cur->end(); ++it) stack.push_back(&it.value());
    } else if (cur->is_array()) {
      for (const auto& e : *cur) stack.push_back(&e);
    }
  }
  return problems;
}

}  // namespace kqpd::cli
