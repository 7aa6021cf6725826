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

#include "cjt/calibration.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace cjt {

namespace {

struct Fnv {
  uint64_t h = 1469598103934665603ull;
  void mix(uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
};

void encode_annotation(std::ostringstream& os, const Annotation& a) {
  switch (a.kind) {
    case AnnotationKind::group_by:
      os << "g" << a.attr.v << ";";
      break;
    case AnnotationKind::marginalize_out:
      os << "m" << a.attr.v << ";";
      break;
    case AnnotationKind::exclude:
      os << "x" << a.rel << ";";
      break;
    case AnnotationKind::select_pred:
      os << "s" << a.pred.attr.v << "," << int(a.pred.cmp) << ","
         << a.pred.constant << ";";
      break;
  }
}

struct GatherResult {
  std::vector<std::shared_ptr<const AnnotatedRelation>> owned;
  std::vector<const AnnotatedRelation*> inputs;
  Schema carried_in;
  bool missing = false;
  std::string missing_what;
};

// Collects the join inputs of bag u, excluding the neighbor `exclude`:
// incoming messages (identity ones skipped) and mapped relations at their
// placement versions minus exclusions.
GatherResult gather_inputs(const JunctionHypertree& jt, BagId u, BagId exclude,
                           const AnnotationPlacement& p,
                           const MessageOverlay* overlay, MessageStats* stats) {
  GatherResult out;
  for (BagId i : jt.neighbors(u)) {
    if (i == exclude) continue;
    const Message* m = nullptr;
    bool from_cache = false;
    if (overlay) {
      auto it = overlay->find(DirectedEdge{i, u});
      if (it != overlay->end()) m = &it->second;
    }
    if (!m) {
      m = jt.find_message(i, u);
      from_cache = true;
    }
    if (!m || !m->valid) {
      out.missing = true;
      std::ostringstream os;
      os << "missing prerequisite message " << i << "->" << u;
      out.missing_what = os.str();
      return out;
    }
    if (overlay && from_cache && stats) stats->messages_reused++;
    out.carried_in = schema_union(out.carried_in, m->carried);
    if (m->identity) continue;
    out.inputs.push_back(m->payload.get());
    out.owned.push_back(m->payload);
  }
  for (RelationId r : jt.relations_at(u)) {
    if (p.excluded(r, u)) continue;
    Version v = effective_version(jt, p, r);
    auto ptr = jt.store().ptr(r, v);
    out.inputs.push_back(ptr.get());
    out.owned.push_back(std::move(ptr));
  }
  return out;
}

// Applies the bag's select annotations by pushing each predicate into every
// input containing its attribute; equivalent to filtering the join.
void apply_selects(std::vector<std::shared_ptr<const AnnotatedRelation>>& owned,
                   std::vector<const AnnotatedRelation*>& inputs, BagId u,
                   const AnnotationPlacement& p) {
  for (const Annotation& a : p.at(u)) {
    if (a.kind != AnnotationKind::select_pred) continue;
    bool applied = false;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i]->schema().contains(a.pred.attr)) {
        auto filtered = std::make_shared<const AnnotatedRelation>(
            select(*inputs[i], a.pred));
        inputs[i] = filtered.get();
        owned.push_back(std::move(filtered));
        applied = true;
      }
    }
    require(applied, "selection attribute absent from the bag's join inputs");
  }
}

// prune_dangling: semi-join reduce by joining in 0/1 indicator projections of
// the bag's relations onto the attributes shared with the other inputs.
void add_indicator_inputs(
    const JunctionHypertree& jt, BagId u,
    std::vector<std::shared_ptr<const AnnotatedRelation>>& owned,
    std::vector<const AnnotatedRelation*>& inputs) {
  size_t rel_inputs = jt.relations_at(u).size();
  if (rel_inputs < 2) return;
  const size_t n = inputs.size();
  for (size_t i = 0; i < n; ++i) {
    Schema others;
    for (size_t j = 0; j < n; ++j)
      if (j != i) others = schema_union(others, inputs[j]->schema());
    Schema overlap = schema_intersect(inputs[i]->schema(), others);
    if (overlap.empty() || overlap == inputs[i]->schema()) continue;
    auto ind = std::make_shared<const AnnotatedRelation>(
        indicator_projection(*inputs[i], overlap));
    inputs.push_back(ind.get());
    owned.push_back(std::move(ind));
  }
}

Schema group_attrs_at(const AnnotationPlacement& p, BagId u,
                      AnnotationKind kind) {
  std::vector<AttrId> attrs;
  for (const Annotation& a : p.at(u))
    if (a.kind == kind) attrs.push_back(a.attr);
  return Schema(std::move(attrs));
}

}  // namespace

Version effective_version(const JunctionHypertree& jt,
                          const AnnotationPlacement& p, RelationId r) {
  auto it = p.versions.find(r);
  if (it != p.versions.end()) return it->second;
  return jt.store().latest(r);
}

std::string encode_bag_state(const JunctionHypertree& jt, BagId b,
                             const AnnotationPlacement& p) {
  std::ostringstream os;
  for (RelationId r : jt.relations_at(b)) {
    if (p.excluded(r, b))
      os << "r" << r << ":x;";
    else
      os << "r" << r << ":v" << effective_version(jt, p, r) << ";";
  }
  for (const Annotation& a : p.at(b)) {
    if (a.kind == AnnotationKind::exclude) continue;  // covered above
    encode_annotation(os, a);
  }
  return os.str();
}

uint64_t subtree_signature(const JunctionHypertree& jt, BagId u, BagId v,
                           const AnnotationPlacement& p) {
  Fnv f;
  f.mix(u);
  for (char c : encode_bag_state(jt, u, p)) f.mix(static_cast<uint64_t>(c));
  std::vector<uint64_t> child;
  for (BagId i : jt.neighbors(u))
    if (i != v) child.push_back(subtree_signature(jt, i, u, p));
  std::sort(child.begin(), child.end());
  for (uint64_t s : child) f.mix(s);
  return f.h;
}

Message compute_message(const JunctionHypertree& jt, BagId u, BagId v,
                        const AnnotationPlacement& p,
                        const MessageOverlay* overlay, const EngineConfig& cfg,
                        MessageStats* stats) {
  require(jt.has_edge(u, v), "message requires a tree edge");
  auto gathered = gather_inputs(jt, u, v, p, overlay, stats);
  require(!gathered.missing, gathered.missing_what);

  Message m;
  m.src = u;
  m.dst = v;
  m.valid = true;
  m.signature = subtree_signature(jt, u, v, p);

  Schema gamma = group_attrs_at(p, u, AnnotationKind::group_by);
  Schema sigma = group_attrs_at(p, u, AnnotationKind::marginalize_out);
  m.carried = schema_minus(schema_union(gathered.carried_in, gamma), sigma);

  if (gathered.inputs.empty()) {
    // Leaf empty bag (or a bag whose relations are all excluded): the
    // message is the identity relation, which is never materialized.
    m.identity = true;
    m.carried = Schema{};
    if (stats) stats->messages_computed++;
    return m;
  }

  apply_selects(gathered.owned, gathered.inputs, u, p);
  if (cfg.prune_dangling)
    add_indicator_inputs(jt, u, gathered.owned, gathered.inputs);

  AnnotatedRelation joined = join(std::span<const AnnotatedRelation* const>(
      gathered.inputs.data(), gathered.inputs.size()));
  for (AttrId g : gamma.attrs())
    require(joined.schema().contains(g),
            "group-by attribute absent from the bag's join");

  Schema keep = schema_union(
      schema_intersect(jt.bag(u).attrs, jt.bag(v).attrs), m.carried);
  Schema out_attrs = schema_minus(joined.schema(), keep);
  AnnotatedRelation payload = marginalize(joined, out_attrs);
  m.carried = schema_intersect(m.carried, payload.schema());

  if (stats) {
    stats->messages_computed++;
    stats->tuples_processed += joined.row_count() + payload.row_count();
  }
  m.payload = std::make_shared<const AnnotatedRelation>(std::move(payload));
  return m;
}

Message& pass_message(JunctionHypertree& jt, BagId u, BagId v,
                      const AnnotationPlacement& p, const EngineConfig& cfg,
                      MessageStats* stats) {
  Message m = compute_message(jt, u, v, p, nullptr, cfg, stats);
  Message& slot = jt.upsert_message(u, v);
  slot = std::move(m);
  return slot;
}

void upward_pass(JunctionHypertree& jt, BagId root, const AnnotationPlacement& p,
                 const EngineConfig& cfg, MessageStats* stats,
                 std::span<const BagId> order) {
  auto parent = jt.parents_from(root);
  std::vector<BagId> seq(order.begin(), order.end());
  if (seq.empty()) {
    // Default schedule: reverse breadth-first, deepest bags first.
    std::deque<BagId> q{root};
    std::vector<BagId> bfs;
    std::vector<bool> seen(jt.bag_count(), false);
    seen[root] = true;
    while (!q.empty()) {
      BagId x = q.front();
      q.pop_front();
      bfs.push_back(x);
      for (BagId y : jt.neighbors(x))
        if (!seen[y]) {
          seen[y] = true;
          q.push_back(y);
        }
    }
    seq.assign(bfs.rbegin(), bfs.rend());
  }
  for (BagId c : seq) {
    if (c == root) continue;
    pass_message(jt, c, parent[c], p, cfg, stats);
  }
}

void downward_pass(JunctionHypertree& jt, BagId root,
                   const AnnotationPlacement& p, const EngineConfig& cfg,
                   MessageStats* stats) {
  std::deque<BagId> q{root};
  std::vector<bool> seen(jt.bag_count(), false);
  seen[root] = true;
  while (!q.empty()) {
    BagId u = q.front();
    q.pop_front();
    for (BagId c : jt.neighbors(u)) {
      if (seen[c]) continue;
      seen[c] = true;
      pass_message(jt, u, c, p, cfg, stats);
      q.push_back(c);
    }
  }
}

CalibratedHandle calibrate(JunctionHypertree& jt, AnnotationPlacement pivot,
                           const EngineConfig& cfg, MessageStats* stats,
                           BagId root) {
  if (root == kNoBag) root = 0;
  require(root < jt.bag_count(), "bad calibration root");
  upward_pass(jt, root, pivot, cfg, stats);
  downward_pass(jt, root, pivot, cfg, stats);
  if (cfg.absorption_cache) {
    for (const Bag& b : jt.bags()) {
      jt.cache_absorption(b.id, std::make_shared<const AnnotatedRelation>(
                                    absorb(jt, b.id, pivot, nullptr, cfg,
                                           stats)));
    }
  }
  return CalibratedHandle{std::move(pivot), root};
}

AnnotatedRelation absorb(const JunctionHypertree& jt, BagId b,
                         const AnnotationPlacement& p,
                         const MessageOverlay* overlay, const EngineConfig& cfg,
                         MessageStats* stats) {
  auto gathered = gather_inputs(jt, b, kNoBag, p, overlay, stats);
  require(!gathered.missing, gathered.missing_what);
  require(!gathered.inputs.empty(),
          "absorption at a bag with no materialized inputs");
  apply_selects(gathered.owned, gathered.inputs, b, p);
  if (cfg.prune_dangling)
    add_indicator_inputs(jt, b, gathered.owned, gathered.inputs);
  AnnotatedRelation joined = join(std::span<const AnnotatedRelation* const>(
      gathered.inputs.data(), gathered.inputs.size()));
  if (stats) stats->tuples_processed += joined.row_count();
  return joined;
}

bool is_calibrated(const JunctionHypertree& jt, const AnnotationPlacement& p,
                   const EngineConfig& cfg) {
  for (auto [a, b] : jt.edges()) {
    const Message* m1 = jt.find_message(a, b);
    const Message* m2 = jt.find_message(b, a);
    if (!m1 || !m2 || !m1->valid || !m2->valid) return false;
  }
  // Compare marginal absorptions at the latest relation versions; a stale
  // cache therefore reports uncalibrated.
  AnnotationPlacement now = p;
  for (RelationId r = 0; r < jt.store().relation_count(); ++r) {
    if (now.versions.count(r)) now.versions[r] = jt.store().latest(r);
  }
  try {
    for (auto [a, b] : jt.edges()) {
      AnnotatedRelation aa = absorb(jt, a, now, nullptr, cfg, nullptr);
      AnnotatedRelation ab = absorb(jt, b, now, nullptr, cfg, nullptr);
      Schema shared = schema_intersect(jt.bag(a).attrs, jt.bag(b).attrs);
      AnnotatedRelation ma =
          marginalize(aa, schema_minus(aa.schema(), shared));
      AnnotatedRelation mb =
          marginalize(ab, schema_minus(ab.schema(), shared));
      if (!(ma == mb)) return false;
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace cjt
