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

#include "cjt/hypertree.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace cjt {

BagId JunctionHypertree::add_bag(Schema attrs, bool empty_bag) {
  require(!attrs.empty(), "bag attribute set must be nonempty");
  BagId id = static_cast<BagId>(bags_.size());
  bags_.push_back(Bag{id, std::move(attrs), empty_bag});
  adj_.emplace_back();
  return id;
}

void JunctionHypertree::add_edge(BagId a, BagId b) {
  require(a < bags_.size() && b < bags_.size() && a != b, "bad edge");
  require(!has_edge(a, b), "duplicate edge");
  edges_.emplace_back(std::min(a, b), std::max(a, b));
  adj_[a].push_back(b);
  adj_[b].push_back(a);
  std::sort(adj_[a].begin(), adj_[a].end());
  std::sort(adj_[b].begin(), adj_[b].end());
}

void JunctionHypertree::set_mapping(RelationId r, BagId b) {
  require(b < bags_.size(), "bad bag id");
  mapping_[r] = b;
}

bool JunctionHypertree::has_edge(BagId a, BagId b) const {
  auto& n = adj_.at(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<RelationId> JunctionHypertree::relations_at(BagId b) const {
  std::vector<RelationId> out;
  for (auto& [r, bag] : mapping_)
    if (bag == b) out.push_back(r);
  return out;
}

BagId JunctionHypertree::bag_of(RelationId r) const {
  auto it = mapping_.find(r);
  require(it != mapping_.end(), "relation not mapped to a bag");
  return it->second;
}

std::vector<BagId> JunctionHypertree::parents_from(BagId root) const {
  std::vector<BagId> parent(bags_.size(), kNoBag);
  std::vector<bool> seen(bags_.size(), false);
  std::deque<BagId> q{root};
  seen[root] = true;
  while (!q.empty()) {
    BagId u = q.front();
    q.pop_front();
    for (BagId v : adj_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        parent[v] = u;
        q.push_back(v);
      }
    }
  }
  return parent;
}

std::vector<DirectedEdge> JunctionHypertree::edges_away_from(BagId b) const {
  std::vector<DirectedEdge> out;
  std::vector<bool> seen(bags_.size(), false);
  std::deque<BagId> q{b};
  seen[b] = true;
  while (!q.empty()) {
    BagId u = q.front();
    q.pop_front();
    for (BagId v : adj_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        out.push_back(DirectedEdge{u, v});
        q.push_back(v);
      }
    }
  }
  return out;
}

int JunctionHypertree::distance(BagId a, BagId b) const {
  if (a == b) return 0;
  auto parent = parents_from(a);
  int d = 0;
  BagId cur = b;
  while (cur != kNoBag && cur != a) {
    cur = parent[cur];
    ++d;
  }
  require(cur == a, "bags not connected");
  return d;
}

std::vector<BagId> JunctionHypertree::path(BagId a, BagId b) const {
  auto parent = parents_from(a);
  std::vector<BagId> rev;
  BagId cur = b;
  while (cur != kNoBag) {
    rev.push_back(cur);
    if (cur == a) break;
    cur = parent[cur];
  }
  require(!rev.empty() && rev.back() == a, "bags not connected");
  std::reverse(rev.begin(), rev.end());
  return rev;
}

const Message* JunctionHypertree::find_message(BagId src, BagId dst) const {
  auto it = cache_.find(DirectedEdge{src, dst});
  return it == cache_.end() ? nullptr : &it->second;
}

Message* JunctionHypertree::find_message(BagId src, BagId dst) {
  auto it = cache_.find(DirectedEdge{src, dst});
  return it == cache_.end() ? nullptr : &it->second;
}

Message& JunctionHypertree::upsert_message(BagId src, BagId dst) {
  require(has_edge(src, dst), "message cache entry requires a tree edge");
  Message& m = cache_[DirectedEdge{src, dst}];
  m.src = src;
  m.dst = dst;
  return m;
}

void JunctionHypertree::clear_messages() {
  cache_.clear();
  absorption_.clear();
}

void JunctionHypertree::invalidate_away_from(BagId b, MessageStats* stats) {
  for (const DirectedEdge& e : edges_away_from(b)) {
    auto it = cache_.find(e);
    if (it != cache_.end() && it->second.valid) {
      it->second.valid = false;
      if (stats) stats->messages_invalidated++;
    }
  }
  absorption_.clear();
}

std::shared_ptr<const AnnotatedRelation> JunctionHypertree::cached_absorption(
    BagId b) const {
  auto it = absorption_.find(b);
  return it == absorption_.end() ? nullptr : it->second;
}

void JunctionHypertree::cache_absorption(
    BagId b, std::shared_ptr<const AnnotatedRelation> r) {
  absorption_[b] = std::move(r);
}

void JunctionHypertree::clear_absorption_cache() { absorption_.clear(); }

std::vector<Violation> JunctionHypertree::validate() const {
  std::vector<Violation> out;
  if (bags_.empty()) {
    out.push_back({"tree has no bags"});
    return out;
  }
  // Tree shape: connected with |edges| = |bags| - 1.
  if (edges_.size() != bags_.size() - 1) {
    std::ostringstream os;
    os << "not a tree: " << bags_.size() << " bags, " << edges_.size()
       << " edges";
    out.push_back({os.str()});
  }
  {
    std::vector<bool> seen(bags_.size(), false);
    std::deque<BagId> q{0};
    seen[0] = true;
    size_t reached = 1;
    while (!q.empty()) {
      BagId u = q.front();
      q.pop_front();
      for (BagId v : adj_[u])
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          q.push_back(v);
        }
    }
    if (reached != bags_.size()) out.push_back({"tree is not connected"});
  }

  // Vertex coverage both ways: bag attrs == attrs of mapped relations.
  std::set<AttrId> bag_attrs, rel_attrs;
  for (const Bag& b : bags_)
    for (AttrId a : b.attrs.attrs()) bag_attrs.insert(a);
  for (auto& [r, b] : mapping_) {
    const auto& sch = store_.at(r, 0).schema();
    for (AttrId a : sch.attrs()) rel_attrs.insert(a);
  }
  if (bag_attrs != rel_attrs)
    out.push_back({"vertex coverage: bag attributes differ from relation "
                   "attributes"});

  // Edge coverage: every relation fits in its bag.
  for (auto& [r, b] : mapping_) {
    const auto& sch = store_.at(r, 0).schema();
    if (!bags_.at(b).attrs.contains_all(sch)) {
      std::ostringstream os;
      os << "edge coverage: relation " << r << " does not fit in bag " << b;
      out.push_back({os.str()});
    }
  }

  // Every stored relation mapped exactly once.
  for (RelationId r = 0; r < store_.relation_count(); ++r) {
    if (!mapping_.count(r)) {
      std::ostringstream os;
      os << "relation " << r << " is not mapped to any bag";
      out.push_back({os.str()});
    }
  }

  // Empty bags carry no relations.
  for (const Bag& b : bags_) {
    if (b.empty_bag && !relations_at(b.id).empty()) {
      std::ostringstream os;
      os << "empty bag " << b.id << " has relations mapped to it";
      out.push_back({os.str()});
    }
  }

  // Running intersection: bags holding an attribute form a connected subtree.
  for (AttrId a : bag_attrs) {
    std::vector<BagId> holders;
    for (const Bag& b : bags_)
      if (b.attrs.contains(a)) holders.push_back(b.id);
    if (holders.size() <= 1) continue;
    std::set<BagId> holder_set(holders.begin(), holders.end());
    std::set<BagId> seen{holders[0]};
    std::deque<BagId> q{holders[0]};
    while (!q.empty()) {
      BagId u = q.front();
      q.pop_front();
      for (BagId v : adj_[u]) {
        if (holder_set.count(v) && !seen.count(v)) {
          seen.insert(v);
          q.push_back(v);
        }
      }
    }
    if (seen.size() != holders.size()) {
      std::ostringstream os;
      os << "running intersection violated for attribute " << a.v;
      out.push_back({os.str()});
    }
  }

  // Message cache entries must live on tree edges.
  for (auto& [e, m] : cache_) {
    if (!has_edge(e.src, e.dst))
      out.push_back({"message cached on a non-edge"});
  }
  return out;
}

BagId JunctionHypertree::add_empty_bag(const Schema& attrs,
                                       std::span<const BagId> nbrs) {
  require(!nbrs.empty(), "empty bag needs at least one neighbor");
  Schema covered;
  for (BagId n : nbrs) covered = schema_union(covered, bags_.at(n).attrs);
  require(covered.contains_all(attrs),
          "empty bag attributes not covered by its neighbors");

  JunctionHypertree trial = *this;
  BagId id = trial.add_bag(attrs, /*empty_bag=*/true);
  // Rewire: edges among the listed neighbors route through the new bag.
  for (size_t i = 0; i < nbrs.size(); ++i) {
    for (size_t j = i + 1; j < nbrs.size(); ++j) {
      BagId a = std::min(nbrs[i], nbrs[j]);
      BagId b = std::max(nbrs[i], nbrs[j]);
      auto it = std::find(trial.edges_.begin(), trial.edges_.end(),
                          std::make_pair(a, b));
      if (it != trial.edges_.end()) {
        trial.edges_.erase(it);
        auto& na = trial.adj_[a];
        na.erase(std::find(na.begin(), na.end(), b));
        auto& nb = trial.adj_[b];
        nb.erase(std::find(nb.begin(), nb.end(), a));
      }
    }
  }
  for (BagId n : nbrs) trial.add_edge(id, n);

  auto violations = trial.validate();
  if (!violations.empty())
    fail("add_empty_bag rejected: " + violations_to_string(violations));

  // Structural edit: drop the whole cache.
  trial.clear_messages();
  *this = std::move(trial);
  return id;
}

void JunctionHypertree::map_relation(RelationId r, BagId b) {
  BagId old = bag_of(r);
  if (old == b) return;  // no-op keeps the cache
  const auto& sch = store_.at(r, 0).schema();
  require(bags_.at(b).attrs.contains_all(sch),
          "edge coverage: relation schema not contained in target bag");
  require(!bags_.at(b).empty_bag, "cannot map a relation to an empty bag");
  mapping_[r] = b;
  clear_messages();
}

bool is_acyclic(const std::vector<Schema>& schemas) {
  std::vector<Schema> work = schemas;
  std::vector<bool> alive(work.size(), true);
  size_t alive_count = work.size();
  bool changed = true;
  while (changed && alive_count > 1) {
    changed = false;
    // Remove attributes unique to one hyperedge.
    std::map<AttrId, int> occ;
    for (size_t i = 0; i < work.size(); ++i)
      if (alive[i])
        for (AttrId a : work[i].attrs()) occ[a]++;
    for (size_t i = 0; i < work.size(); ++i) {
      if (!alive[i]) continue;
      std::vector<AttrId> kept;
      for (AttrId a : work[i].attrs())
        if (occ[a] > 1) kept.push_back(a);
      if (kept.size() != work[i].arity()) {
        work[i] = Schema(std::move(kept));
        changed = true;
      }
    }
    // Remove one hyperedge contained in another.
    for (size_t e = 0; e < work.size() && alive_count > 1; ++e) {
      if (!alive[e]) continue;
      for (size_t f = 0; f < work.size(); ++f) {
        if (f == e || !alive[f]) continue;
        if (work[f].contains_all(work[e])) {
          alive[e] = false;
          --alive_count;
          changed = true;
          break;
        }
      }
    }
  }
  return alive_count <= 1;
}

JunctionHypertree default_jt(RelationStore store) {
  const size_t n = store.relation_count();
  require(n > 0, "default tree needs at least one relation");

  std::vector<Schema> work;
  for (RelationId r = 0; r < n; ++r) work.push_back(store.at(r, 0).schema());

  std::vector<bool> alive(n, true);
  size_t alive_count = n;
  std::vector<std::pair<BagId, BagId>> tree_edges;

  bool changed = true;
  while (changed && alive_count > 1) {
    changed = false;
    std::map<AttrId, int> occ;
    for (size_t i = 0; i < n; ++i)
      if (alive[i])
        for (AttrId a : work[i].attrs()) occ[a]++;
    for (size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      std::vector<AttrId> kept;
      for (AttrId a : work[i].attrs())
        if (occ[a] > 1) kept.push_back(a);
      if (kept.size() != work[i].arity()) {
        work[i] = Schema(std::move(kept));
        changed = true;
      }
    }
    for (size_t e = 0; e < n && alive_count > 1; ++e) {
      if (!alive[e]) continue;
      // Witness with the lowest relation id; deterministic golden shape.
      size_t witness = n;
      for (size_t f = 0; f < n; ++f) {
        if (f == e || !alive[f]) continue;
        if (work[f].contains_all(work[e])) {
          witness = f;
          break;
        }
      }
      if (witness < n) {
        tree_edges.emplace_back(static_cast<BagId>(e),
                                static_cast<BagId>(witness));
        alive[e] = false;
        --alive_count;
        changed = true;
        break;  // recompute occurrence counts before the next removal
      }
    }
  }
  require(alive_count <= 1,
          "cyclic join hypergraph: supply a junction tree explicitly");

  JunctionHypertree jt(std::move(store));
  for (RelationId r = 0; r < n; ++r) {
    BagId b = jt.add_bag(jt.store().at(r, 0).schema(), /*empty_bag=*/false);
    jt.set_mapping(r, b);
  }
  for (auto [a, b] : tree_edges) jt.add_edge(a, b);

  auto violations = jt.validate();
  require(violations.empty(),
          "default tree failed validation: " + violations_to_string(violations));
  return jt;
}

std::string violations_to_string(const std::vector<Violation>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << "; ";
    os << v[i].what;
  }
  return os.str();
}

}  // namespace cjt
