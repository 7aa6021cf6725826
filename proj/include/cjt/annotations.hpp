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

#ifndef CJT_ANNOTATIONS_HPP
#define CJT_ANNOTATIONS_HPP

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cjt/hypertree.hpp"
#include "cjt/relation.hpp"

namespace cjt {

/*
 * Bag-local markers that alter message generation:
 *   group_by        keep the attribute in this and all downstream messages
 *   marginalize_out cancel a carried group_by for downstream messages
 *   exclude         leave the relation out of the bag's join
 *   select_pred     filter the bag's join by a predicate
 * Relation versions are tracked per placement rather than as markers; a
 * version change at a bag is treated like any other annotation difference.
 */
enum class AnnotationKind : uint8_t {
  group_by,
  marginalize_out,
  exclude,
  select_pred,
};

struct Annotation {
  AnnotationKind kind = AnnotationKind::group_by;
  AttrId attr{0};
  RelationId rel = 0;
  Predicate pred{};

  static Annotation group_by(AttrId a) {
    Annotation x;
    x.kind = AnnotationKind::group_by;
    x.attr = a;
    return x;
  }
  static Annotation marginalize_out(AttrId a) {
    Annotation x;
    x.kind = AnnotationKind::marginalize_out;
    x.attr = a;
    return x;
  }
  static Annotation exclude(RelationId r) {
    Annotation x;
    x.kind = AnnotationKind::exclude;
    x.rel = r;
    return x;
  }
  static Annotation select(Predicate p) {
    Annotation x;
    x.kind = AnnotationKind::select_pred;
    x.pred = p;
    return x;
  }

  friend auto operator<=>(const Annotation&, const Annotation&) = default;
};

/// Bag-bound annotations plus the effective version of every joined
/// relation. Two placements are compared bag-by-bag; each group attribute is
/// annotated on exactly one bag.
struct AnnotationPlacement {
  std::map<BagId, std::vector<Annotation>> bags;
  std::map<RelationId, Version> versions;

  void add(BagId b, Annotation a) {
    auto& v = bags[b];
    v.insert(std::upper_bound(v.begin(), v.end(), a), a);
  }
  void remove(BagId b, const Annotation& a) {
    auto it = bags.find(b);
    if (it == bags.end()) return;
    auto pos = std::find(it->second.begin(), it->second.end(), a);
    if (pos != it->second.end()) it->second.erase(pos);
    if (it->second.empty()) bags.erase(it);
  }
  std::span<const Annotation> at(BagId b) const {
    auto it = bags.find(b);
    if (it == bags.end()) return {};
    return it->second;
  }
  bool has(BagId b, const Annotation& a) const {
    auto s = at(b);
    return std::binary_search(s.begin(), s.end(), a);
  }
  std::optional<BagId> find_bag(const Annotation& a) const {
    for (auto& [b, anns] : bags)
      if (std::binary_search(anns.begin(), anns.end(), a)) return b;
    return std::nullopt;
  }
  bool excluded(RelationId r, BagId at_bag) const {
    return has(at_bag, Annotation::exclude(r));
  }
};

/// A filter-group-by aggregation over a subset of the joined relations.
struct QuerySpec {
  Schema group_attrs;
  std::vector<std::pair<RelationId, Version>> relations;  // joined set
  std::vector<Predicate> predicates;
};

/// Pivot record produced by calibration: the placement the cache embodies
/// and the root used for the passes.
struct CalibratedHandle {
  AnnotationPlacement pivot;
  BagId root = 0;
};

using MessageOverlay = std::map<DirectedEdge, Message>;

struct EngineConfig {
  bool prune_dangling = false;
  bool absorption_cache = false;
};

}  // namespace cjt

#endif
