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

#include <stdexcept>
#include <string>

namespace spikeslab {

/// An analysis assumption observably failed at runtime (e.g. a rejection
/// ratio left its certified envelope). Distinct from std::domain_error so
/// callers can map it to the dedicated exit code.
struct ContractViolation : std::runtime_error {
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

/// A linear-algebra or estimator step failed numerically.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver hit its cap before reaching its target accuracy.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spikeslab
