// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <string>

#include "spikeslab/model.hpp"
#include "spikeslab/oracle.hpp"
#include "spikeslab/report.hpp"

namespace spikeslab {

/// Instance files are JSON with keys n, d, sigma, prior {q, diffuse}, X
/// (row-major nested arrays), y, optional theta_star / xi, seed. All floats
/// are written with 17 significant digits so files byte-stably round-trip.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const Instance& instance);
Instance read_instance(const std::string& path);

/// Pmf files are a single JSON object mapping comma-joined sorted 1-based
/// indices (empty string for the empty set) to probabilities. The domain
/// dimension is not part of the format; pass it on read, or leave 0 to infer
/// the smallest dimension covering the keys.
std::string pmf_to_json(const SupportPmf& pmf);
SupportPmf pmf_from_json(const std::string& text, int domain_d = 0);
void write_pmf(const std::string& path, const SupportPmf& pmf);
SupportPmf read_pmf(const std::string& path, int domain_d = 0);

std::string report_to_json(const SamplerReport& report);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// %.17g rendering shared by all writers.
std::string format_double(double x);

}  // namespace spikeslab
