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

#ifndef CJT_HYPERTREE_HPP
#define CJT_HYPERTREE_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cjt/relation.hpp"
#include "cjt/stats.hpp"

namespace cjt {

using BagId = uint32_t;
using RelationId = uint32_t;
using Version = uint32_t;

inline constexpr BagId kNoBag = 0xffffffffu;

struct Bag {
  BagId id = 0;
  Schema attrs;
  bool empty_bag = false;  // no relations mapped; pass-through behavior
};

struct DirectedEdge {
  BagId src = 0;
  BagId dst = 0;
  friend auto operator<=>(const DirectedEdge&, const DirectedEdge&) = default;
};

/// A cached message along a directed edge. An identity message (from a leaf
/// empty bag) is a sentinel, never materialized; join inputs skip it.
struct Message {
  BagId src = 0;
  BagId dst = 0;
  std::shared_ptr<const AnnotatedRelation> payload;
  bool identity = false;
  bool valid = false;
  uint64_t signature = 0;
  Schema carried;  // group-by attributes kept alive through this edge
};

/// Append-only store of relation versions. Version 0 is the load-time base.
class RelationStore {
 public:
  RelationId add(AnnotatedRelation base) {
    versions_.push_back(
        {std::make_shared<const AnnotatedRelation>(std::move(base))});
    return static_cast<RelationId>(versions_.size() - 1);
  }
  Version append(RelationId r, AnnotatedRelation next) {
    versions_.at(r).push_back(
        std::make_shared<const AnnotatedRelation>(std::move(next)));
    return static_cast<Version>(versions_[r].size() - 1);
  }
  const AnnotatedRelation& at(RelationId r, Version v) const {
    return *versions_.at(r).at(v);
  }
  std::shared_ptr<const AnnotatedRelation> ptr(RelationId r, Version v) const {
    return versions_.at(r).at(v);
  }
  Version latest(RelationId r) const {
    return static_cast<Version>(versions_.at(r).size() - 1);
  }
  size_t relation_count() const { return versions_.size(); }
  /// Replaces every stored version (covariance re-dimensioning).
  void replace(RelationId r, Version v, AnnotatedRelation rel) {
    versions_.at(r).at(v) =
        std::make_shared<const AnnotatedRelation>(std::move(rel));
  }

 private:
  std::vector<std::vector<std::shared_ptr<const AnnotatedRelation>>> versions_;
};

struct Violation {
  std::string what;
};

/*
 * The junction hypertree: attribute-set bags connected as a tree, a mapping
 * from relations to bags, and the directed-edge message cache. A valid tree
 * satisfies vertex coverage (bag attrs cover exactly the mapped relations'
 * attributes), edge coverage (every relation fits inside its bag), and
 * running intersection (the bags holding an attribute form a connected
 * subtree).
 */
class JunctionHypertree {
 public:
  JunctionHypertree() = default;
  explicit JunctionHypertree(RelationStore store) : store_(std::move(store)) {}

  BagId add_bag(Schema attrs, bool empty_bag);
  void add_edge(BagId a, BagId b);
  /// Build-time mapping; does not touch the cache.
  void set_mapping(RelationId r, BagId b);
  /// Grows a bag's attribute set (augmentation); caller invalidates.
  void widen_bag(BagId b, const Schema& extra) {
    bags_.at(b).attrs = schema_union(bags_.at(b).attrs, extra);
  }

  // --- structural queries ---
  size_t bag_count() const { return bags_.size(); }
  const Bag& bag(BagId b) const { return bags_.at(b); }
  const std::vector<Bag>& bags() const { return bags_; }
  const std::vector<std::pair<BagId, BagId>>& edges() const { return edges_; }
  std::span<const BagId> neighbors(BagId b) const { return adj_.at(b); }
  bool has_edge(BagId a, BagId b) const;
  std::vector<RelationId> relations_at(BagId b) const;
  BagId bag_of(RelationId r) const;
  const std::map<RelationId, BagId>& mapping() const { return mapping_; }

  RelationStore& store() { return store_; }
  const RelationStore& store() const { return store_; }

  // --- tree walks ---
  /// Parent of every bag under `root` (root's parent is kNoBag).
  std::vector<BagId> parents_from(BagId root) const;
  /// Directed edges pointing away from `b`, in outward breadth-first order.
  std::vector<DirectedEdge> edges_away_from(BagId b) const;
  int distance(BagId a, BagId b) const;
  /// Bags on the unique path between two bags, inclusive.
  std::vector<BagId> path(BagId a, BagId b) const;

  // --- message cache ---
  const Message* find_message(BagId src, BagId dst) const;
  Message* find_message(BagId src, BagId dst);
  Message& upsert_message(BagId src, BagId dst);
  void clear_messages();
  const std::map<DirectedEdge, Message>& cache() const { return cache_; }
  void invalidate_away_from(BagId b, MessageStats* stats);

  // --- absorption result cache (optional, OLAP mode) ---
  std::shared_ptr<const AnnotatedRelation> cached_absorption(BagId b) const;
  void cache_absorption(BagId b, std::shared_ptr<const AnnotatedRelation> r);
  void clear_absorption_cache();

  // --- spec operations ---
  std::vector<Violation> validate() const;
  /// Splices an empty bag between the listed neighbors; edges among the
  /// neighbors are replaced by edges through the new bag. On any property
  /// violation the tree is left unchanged and the violations are thrown.
  BagId add_empty_bag(const Schema& attrs, std::span<const BagId> nbrs);
  /// Remaps a relation; a real move drops the cache (coarse invalidation).
  void map_relation(RelationId r, BagId b);

 private:
  std::vector<Bag> bags_;
  std::vector<std::pair<BagId, BagId>> edges_;
  std::vector<std::vector<BagId>> adj_;
  std::map<RelationId, BagId> mapping_;
  std::map<DirectedEdge, Message> cache_;
  std::map<BagId, std::shared_ptr<const AnnotatedRelation>> absorption_;
  RelationStore store_;
};

/// One bag per relation, edges chosen along the GYO elimination order with
/// the lowest-relation-id tie-break. Errors on cyclic hypergraphs.
JunctionHypertree default_jt(RelationStore store);

/// Acyclicity test via GYO reduction.
bool is_acyclic(const std::vector<Schema>& schemas);

std::string violations_to_string(const std::vector<Violation>& v);

}  // namespace cjt

#endif
