/*******************************************************************************
 * Copyright 2026 The cjt-engine Authors
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
 ******************************************************************************/

#ifndef CJT_SCHEMA_HPP
#define CJT_SCHEMA_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cjt/error.hpp"

namespace cjt {

/// Attribute identifier. Display names live in AttributeCatalog.
struct AttrId {
  uint32_t v = 0;
  friend auto operator<=>(const AttrId&, const AttrId&) = default;
};

/// Ordered set of attribute ids, canonically sorted ascending, no duplicates.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<AttrId> attrs) : attrs_(std::move(attrs)) {
    std::sort(attrs_.begin(), attrs_.end());
    attrs_.erase(std::unique(attrs_.begin(), attrs_.end()), attrs_.end());
  }
  static Schema of(std::initializer_list<uint32_t> ids) {
    std::vector<AttrId> v;
    v.reserve(ids.size());
    for (uint32_t i : ids) v.push_back(AttrId{i});
    return Schema(std::move(v));
  }

  size_t arity() const { return attrs_.size(); }
  bool empty() const { return attrs_.empty(); }
  std::span<const AttrId> attrs() const { return attrs_; }
  AttrId at(size_t i) const { return attrs_[i]; }

  bool contains(AttrId a) const {
    return std::binary_search(attrs_.begin(), attrs_.end(), a);
  }
  bool contains_all(const Schema& other) const {
    return std::includes(attrs_.begin(), attrs_.end(), other.attrs_.begin(),
                         other.attrs_.end());
  }
  /// Position of `a` in canonical order, or -1 if absent.
  int index_of(AttrId a) const {
    auto it = std::lower_bound(attrs_.begin(), attrs_.end(), a);
    if (it == attrs_.end() || *it != a) return -1;
    return static_cast<int>(it - attrs_.begin());
  }

  friend Schema schema_union(const Schema& a, const Schema& b) {
    std::vector<AttrId> out;
    std::set_union(a.attrs_.begin(), a.attrs_.end(), b.attrs_.begin(),
                   b.attrs_.end(), std::back_inserter(out));
    Schema s;
    s.attrs_ = std::move(out);
    return s;
  }
  friend Schema schema_intersect(const Schema& a, const Schema& b) {
    std::vector<AttrId> out;
    std::set_intersection(a.attrs_.begin(), a.attrs_.end(), b.attrs_.begin(),
                          b.attrs_.end(), std::back_inserter(out));
    Schema s;
    s.attrs_ = std::move(out);
    return s;
  }
  friend Schema schema_minus(const Schema& a, const Schema& b) {
    std::vector<AttrId> out;
    std::set_difference(a.attrs_.begin(), a.attrs_.end(), b.attrs_.begin(),
                        b.attrs_.end(), std::back_inserter(out));
    Schema s;
    s.attrs_ = std::move(out);
    return s;
  }

  friend bool operator==(const Schema&, const Schema&) = default;
  friend auto operator<=>(const Schema&, const Schema&) = default;

 private:
  std::vector<AttrId> attrs_;
};

/// Maps attribute display names to dense ids. Ids are unique per database.
class AttributeCatalog {
 public:
  AttrId intern(const std::string& name) {
    auto it = by_name_.find(name);
    if (it != by_name_.end()) return it->second;
    AttrId id{static_cast<uint32_t>(names_.size())};
    names_.push_back(name);
    by_name_.emplace(name, id);
    return id;
  }
  AttrId lookup(const std::string& name) const {
    auto it = by_name_.find(name);
    require(it != by_name_.end(), "unknown attribute: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return by_name_.count(name) > 0; }
  const std::string& name(AttrId id) const { return names_.at(id.v); }
  size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, AttrId> by_name_;
};

}  // namespace cjt

#endif
