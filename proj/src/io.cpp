// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace spikeslab {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void append_vector(std::string& out, const VectorXd& v) {
  out += '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

void append_matrix_rows(std::string& out, const MatrixXd& m) {
  out += '[';
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += ']';
  }
  out += ']';
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  std::string out = "{\n";
  out += "  \"n\": " + std::to_string(instance.n()) + ",\n";
  out += "  \"d\": " + std::to_string(instance.d()) + ",\n";
  out += "  \"sigma\": " + format_double(instance.sigma) + ",\n";
  out += "  \"prior\": {\"q\": ";
  append_vector(out, instance.prior.q);
  out += ", \"diffuse\": ";
  out += (instance.prior.diffuse == Diffuse::GaussianN01) ? "\"gaussian\"" : "\"laplace\"";
  out += "},\n  \"X\": ";
  append_matrix_rows(out, instance.X);
  out += ",\n  \"y\": ";
  append_vector(out, instance.y);
  if (instance.theta_star) {
    out += ",\n  \"theta_star\": ";
    append_vector(out, *instance.theta_star);
  }
  if (instance.xi) {
    out += ",\n  \"xi\": ";
    append_vector(out, *instance.xi);
  }
  out += ",\n  \"seed\": " + std::to_string(instance.seed);
  out += "\n}\n";
  return out;
}

Instance instance_from_json(const std::string& text) {
  const json j = json::parse(text);
  Instance inst;
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  inst.sigma = j.at("sigma").get<double>();
  inst.prior.q = vector_from_json(j.at("prior").at("q"));
  const std::string diffuse = j.at("prior").at("diffuse").get<std::string>();
  if (diffuse == "gaussian") {
    inst.prior.diffuse = Diffuse::GaussianN01;
  } else if (diffuse == "laplace") {
    inst.prior.diffuse = Diffuse::Laplace01;
  } else {
    throw std::invalid_argument("instance: unknown diffuse kind '" + diffuse + "'");
  }
  const json& xj = j.at("X");
  if (static_cast<int>(xj.size()) != n)
    throw std::invalid_argument("instance: X row count does not match n");
  inst.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(xj[i].size()) != d)
      throw std::invalid_argument("instance: X row " + std::to_string(i) + " has wrong width");
    for (int c = 0; c < d; ++c) inst.X(i, c) = xj[i][c].get<double>();
  }
  inst.y = vector_from_json(j.at("y"));
  if (j.contains("theta_star")) inst.theta_star = vector_from_json(j.at("theta_star"));
  if (j.contains("xi")) inst.xi = vector_from_json(j.at("xi"));
  if (j.contains("seed")) inst.seed = j.at("seed").get<std::uint64_t>();
  inst.validate();
  return inst;
}

std::string pmf_to_json(const SupportPmf& pmf) {
  std::string out = "{";
  bool first = true;
  for (const auto& [s, p] : pmf.entries) {
    if (!first) out += ',';
    first = false;
    out += "\n  \"" + s.key() + "\": " + format_double(p);
  }
  out += "\n}\n";
  return out;
}

SupportPmf pmf_from_json(const std::string& text, int domain_d) {
  const json j = json::parse(text);
  SupportPmf pmf;
  int max_index = 0;
  for (const auto& [key, value] : j.items()) {
    const SupportSet s = SupportSet::from_key(key);
    if (!s.empty()) max_index = std::max(max_index, s.indices().back() + 1);
    pmf.entries[s] = value.get<double>();
  }
  pmf.domain_d = domain_d > 0 ? domain_d : max_index;
  if (domain_d > 0 && max_index > domain_d)
    throw std::invalid_argument("pmf: key exceeds the stated dimension");
  return pmf;
}

std::string report_to_json(const SamplerReport& report) {
  auto safe_exp = [](double lx) {
    if (lx == std::numeric_limits<double>::infinity()) return 0.0;  // unset min
    if (lx > 700.0) return 1e300;
    if (lx < -700.0) return 0.0;
    return std::exp(lx);
  };
  std::string out = "{";
  out += "\"attempts\": " + std::to_string(report.attempts);
  out += ", \"accepted\": " + std::to_string(report.accepted);
  out += ", \"ratio_min\": " + format_double(safe_exp(report.log_ratio_min));
  out += ", \"ratio_max\": " +
         format_double(report.log_ratio_max == -std::numeric_limits<double>::infinity()
                           ? 0.0
                           : safe_exp(report.log_ratio_max));
  out += std::string(", \"budget_exceeded\": ") + (report.budget_exceeded ? "true" : "false");
  out += ", \"wall_ms\": " + format_double(report.wall_ms);
  out += ", \"z_estimates_computed\": " + std::to_string(report.z_estimates_computed);
  out += ", \"cache_hits\": " + std::to_string(report.cache_hits);
  out += ", \"anneal_stage_failures\": " + std::to_string(report.anneal_stage_failures);
  out += "}\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_instance(const std::string& path, const Instance& instance) {
  write_text_file(path, instance_to_json(instance));
}

Instance read_instance(const std::string& path) {
  return instance_from_json(read_text_file(path));
}

void write_pmf(const std::string& path, const SupportPmf& pmf) {
  write_text_file(path, pmf_to_json(pmf));
}

SupportPmf read_pmf(const std::string& path, int domain_d) {
  return pmf_from_json(read_text_file(path), domain_d);
}

}  // namespace spikeslab
