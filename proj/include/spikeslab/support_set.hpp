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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikeslab {

/// An ordered set of selected coordinates. Indices are 0-based in memory;
/// every serialized form (CSV, JSON pmf keys, error messages) is 1-based.
class SupportSet {
 public:
  SupportSet() = default;

  explicit SupportSet(std::vector<int> indices) : idx_(std::move(indices)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
    if (!idx_.empty() && idx_.front() < 0)
      throw std::invalid_argument("SupportSet: negative index");
  }

  static SupportSet from_mask(std::uint32_t mask) {
    std::vector<int> v;
    for (int i = 0; mask != 0; ++i, mask >>= 1)
      if (mask & 1u) v.push_back(i);
    return SupportSet(std::move(v));
  }

  std::uint32_t to_mask() const {
    std::uint32_t m = 0;
    for (int i : idx_) {
      if (i >= 32) throw std::domain_error("SupportSet::to_mask: index >= 32");
      m |= (1u << i);
    }
    return m;
  }

  int size() const { return static_cast<int>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  const std::vector<int>& indices() const { return idx_; }

  bool contains(int i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

  bool contains_all(const SupportSet& other) const {
    return std::includes(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end());
  }

  SupportSet united(const SupportSet& other) const {
    std::vector<int> v;
    v.reserve(idx_.size() + other.idx_.size());
    std::set_union(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(),
                   std::back_inserter(v));
    SupportSet s;
    s.idx_ = std::move(v);
    return s;
  }

  /// Comma-joined 1-based indices; the empty set serializes as "".
  std::string key() const {
    std::string s;
    for (size_t i = 0; i < idx_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(idx_[i] + 1);
    }
    return s;
  }

  static SupportSet from_key(const std::string& key) {
    std::vector<int> v;
    size_t pos = 0;
    while (pos < key.size()) {
      size_t next = key.find(',', pos);
      if (next == std::string::npos) next = key.size();
      v.push_back(std::stoi(key.substr(pos, next - pos)) - 1);
      pos = next + 1;
    }
    return SupportSet(std::move(v));
  }

  auto operator<=>(const SupportSet&) const = default;

 private:
  std::vector<int> idx_;
};

}  // namespace spikeslab
