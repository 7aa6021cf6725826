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

#include "cjt/planner.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "cjt/maintenance.hpp"

namespace cjt {

namespace {

std::set<RelationId> included_set(const QuerySpec& q) {
  std::set<RelationId> s;
  for (auto& [r, v] : q.relations) s.insert(r);
  return s;
}

/// Bags holding a joined relation that contains `attr`: markers placed there
/// are effective for every message direction.
std::vector<BagId> candidate_bags(const JunctionHypertree& jt,
                                  const std::set<RelationId>& included,
                                  AttrId attr) {
  std::set<BagId> out;
  for (auto& [r, b] : jt.mapping()) {
    if (!included.count(r)) continue;
    if (jt.store().at(r, 0).schema().contains(attr)) out.insert(b);
  }
  return {out.begin(), out.end()};
}

BagId pick_by_distance(const JunctionHypertree& jt,
                       std::span<const BagId> candidates, BagId root,
                       bool farthest) {
  BagId best = candidates.front();
  int best_d = jt.distance(best, root);
  for (BagId c : candidates.subspan(1)) {
    int d = jt.distance(c, root);
    bool better = farthest ? d > best_d : d < best_d;
    if (better || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

size_t bag_relation_rows(const JunctionHypertree& jt,
                         const AnnotationPlacement& p, BagId b) {
  size_t rows = 0;
  for (RelationId r : jt.relations_at(b)) {
    if (p.excluded(r, b)) continue;
    rows += jt.store().at(r, effective_version(jt, p, r)).row_count();
  }
  return rows;
}

std::vector<Annotation> marker_annotations(const AnnotationPlacement& p,
                                           BagId b) {
  std::vector<Annotation> out;
  for (const Annotation& a : p.at(b))
    if (a.kind != AnnotationKind::exclude) out.push_back(a);
  return out;
}

std::vector<Annotation> multiset_minus(std::vector<Annotation> a,
                                       const std::vector<Annotation>& b) {
  for (const Annotation& x : b) {
    auto it = std::find(a.begin(), a.end(), x);
    if (it != a.end()) a.erase(it);
  }
  return a;
}

bool relation_state_differs(const JunctionHypertree& jt,
                            const AnnotationPlacement& a,
                            const AnnotationPlacement& b, BagId bag) {
  for (RelationId r : jt.relations_at(bag)) {
    bool xa = a.excluded(r, bag);
    bool xb = b.excluded(r, bag);
    if (xa != xb) return true;
    if (!xa && effective_version(jt, a, r) != effective_version(jt, b, r))
      return true;
  }
  return false;
}

}  // namespace

AnnotationPlacement place_annotations(const JunctionHypertree& jt,
                                      const QuerySpec& q, PlacementMode mode,
                                      BagId root,
                                      const AnnotationPlacement* pivot) {
  require(!q.relations.empty(), "query joins no relations");
  auto included = included_set(q);

  Schema joined_attrs;
  for (auto& [r, v] : q.relations)
    joined_attrs = schema_union(joined_attrs, jt.store().at(r, 0).schema());
  require(joined_attrs.contains_all(q.group_attrs),
          "group attributes not covered by the joined relations");

  AnnotationPlacement p;
  for (auto& [r, v] : q.relations) {
    require(v <= jt.store().latest(r), "unknown relation version");
    p.versions[r] = v;
  }
  for (auto& [r, b] : jt.mapping()) {
    if (!included.count(r)) p.add(b, Annotation::exclude(r));
  }

  const bool far = mode == PlacementMode::single_query;
  for (const Predicate& pred : q.predicates) {
    if (!joined_attrs.contains(pred.attr)) continue;  // skippable predicate
    auto cands = candidate_bags(jt, included, pred.attr);
    require(!cands.empty(), "no bag can apply the predicate");
    Annotation a = Annotation::select(pred);
    if (pivot) {
      if (auto b = pivot->find_bag(a);
          b && std::binary_search(cands.begin(), cands.end(), *b)) {
        p.add(*b, a);
        continue;
      }
    }
    p.add(pick_by_distance(jt, cands, root, far), a);
  }

  for (AttrId g : q.group_attrs.attrs()) {
    auto cands = candidate_bags(jt, included, g);
    require(!cands.empty(), "no bag can carry the group attribute");
    Annotation a = Annotation::group_by(g);
    if (pivot) {
      if (auto b = pivot->find_bag(a);
          b && std::binary_search(cands.begin(), cands.end(), *b)) {
        p.add(*b, a);
        continue;
      }
    }
    // Group-by placement does not change the result; near the root it blocks
    // the fewest messages.
    p.add(pick_by_distance(jt, cands, root, /*farthest=*/false), a);
  }
  return p;
}

bool message_reusable(const JunctionHypertree& jt, const CalibratedHandle& h,
                      BagId u, BagId v, const AnnotationPlacement& q) {
  uint64_t pivot_sig;
  const Message* m = jt.find_message(u, v);
  if (m && m->valid)
    pivot_sig = m->signature;
  else
    pivot_sig = subtree_signature(jt, u, v, h.pivot);
  return pivot_sig == subtree_signature(jt, u, v, q);
}

SteinerPlan build_steiner(const JunctionHypertree& jt,
                          const CalibratedHandle& h, const QuerySpec& q) {
  SteinerPlan plan;
  AnnotationPlacement merged =
      place_annotations(jt, q, PlacementMode::reuse_priority, h.root, &h.pivot);

  // Compensate pivot-only group-bys: keep the marker so subtree signatures
  // below it still match, and cancel the carry with a movable marginalize.
  // When the query's joined set no longer feeds the attribute at that bag
  // the marker is dropped instead and the bag gets recomputed.
  auto included = included_set(q);
  for (auto& [b, anns] : h.pivot.bags) {
    for (const Annotation& a : anns) {
      if (a.kind != AnnotationKind::group_by) continue;
      if (q.group_attrs.contains(a.attr)) continue;
      auto cands = candidate_bags(jt, included, a.attr);
      if (!std::binary_search(cands.begin(), cands.end(), b)) continue;
      merged.add(b, a);
      merged.add(b, Annotation::marginalize_out(a.attr));
    }
  }

  std::set<BagId> diff;
  for (const Bag& b : jt.bags()) {
    if (encode_bag_state(jt, b.id, merged) != encode_bag_state(jt, b.id, h.pivot))
      diff.insert(b.id);
  }
  plan.diff_bags.assign(diff.begin(), diff.end());

  if (diff.empty()) {
    plan.merged = std::move(merged);
    // Absorb wherever the fewest invalidated messages need repair; after a
    // lazy update that is the updated relation's own bag, whose incoming
    // messages all stayed valid.
    BagId best = 0;
    int best_repairs = 1 << 30;
    for (const Bag& b : jt.bags()) {
      int repairs = 0;
      for (auto& [e, m] : jt.cache()) {
        if (m.valid) continue;
        if (jt.distance(e.dst, b.id) < jt.distance(e.src, b.id)) ++repairs;
      }
      if (repairs < best_repairs) {
        best_repairs = repairs;
        best = b.id;
      }
    }
    plan.root = best;
    for (BagId n : jt.neighbors(plan.root))
      plan.reused_edges.push_back(DirectedEdge{n, plan.root});
    return plan;
  }

  // Minimal subtree connecting the differing bags.
  std::set<BagId> tree{*diff.begin()};
  for (BagId b : diff)
    for (BagId x : jt.path(*diff.begin(), b)) tree.insert(x);

  auto tree_degree = [&](BagId t) {
    int d = 0;
    for (BagId n : jt.neighbors(t))
      if (tree.count(n)) ++d;
    return d;
  };

  // Shrink: move a leaf's movable markers to its tree neighbor, largest
  // underlying relation first; drop leaves left with no difference.
  bool moved = true;
  while (moved && tree.size() > 1) {
    moved = false;
    std::vector<BagId> leaves;
    for (BagId t : tree)
      if (tree_degree(t) == 1) leaves.push_back(t);
    std::sort(leaves.begin(), leaves.end(), [&](BagId a, BagId b) {
      size_t ra = bag_relation_rows(jt, merged, a);
      size_t rb = bag_relation_rows(jt, merged, b);
      return ra != rb ? ra > rb : a < b;
    });
    for (BagId leaf : leaves) {
      if (relation_state_differs(jt, merged, h.pivot, leaf)) continue;
      auto merged_only =
          multiset_minus(marker_annotations(merged, leaf),
                         marker_annotations(h.pivot, leaf));
      auto pivot_only =
          multiset_minus(marker_annotations(h.pivot, leaf),
                         marker_annotations(merged, leaf));
      if (!pivot_only.empty()) continue;  // a dropped marker cannot move
      if (merged_only.empty()) {
        tree.erase(leaf);  // no difference left
        moved = true;
        break;
      }
      BagId next = kNoBag;
      for (BagId n : jt.neighbors(leaf))
        if (tree.count(n)) next = n;
      bool all_movable = true;
      for (const Annotation& a : merged_only) {
        if (a.kind == AnnotationKind::marginalize_out) {
          // The carry it cancels crosses the leaf's tree edge, so the
          // neighbor can always host it.
          continue;
        }
        AttrId attr =
            a.kind == AnnotationKind::select_pred ? a.pred.attr : a.attr;
        auto cands = candidate_bags(jt, included, attr);
        if (!std::binary_search(cands.begin(), cands.end(), next))
          all_movable = false;
      }
      if (!all_movable) continue;
      for (const Annotation& a : merged_only) {
        merged.remove(leaf, a);
        merged.add(next, a);
      }
      tree.erase(leaf);
      moved = true;
      break;
    }
  }

  plan.tree_bags.assign(tree.begin(), tree.end());
  plan.root = choose_root(jt, merged, plan.tree_bags);

  auto parent = jt.parents_from(plan.root);
  std::vector<std::pair<int, BagId>> by_depth;
  for (BagId t : plan.tree_bags) {
    if (t == plan.root) continue;
    by_depth.emplace_back(jt.distance(t, plan.root), t);
  }
  std::sort(by_depth.begin(), by_depth.end(),
            [](auto& a, auto& b) {
              return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
  for (auto& [d, t] : by_depth)
    plan.recompute_edges.push_back(DirectedEdge{t, parent[t]});

  for (BagId t : plan.tree_bags)
    for (BagId n : jt.neighbors(t))
      if (!tree.count(n)) plan.reused_edges.push_back(DirectedEdge{n, t});

  plan.merged = std::move(merged);
  return plan;
}

BagId choose_root(const JunctionHypertree& jt, const AnnotationPlacement& merged,
                  std::span<const BagId> tree_bags) {
  std::vector<BagId> cands(tree_bags.begin(), tree_bags.end());
  if (cands.empty())
    for (const Bag& b : jt.bags()) cands.push_back(b.id);
  std::sort(cands.begin(), cands.end());
  if (cands.size() == 1) return cands[0];

  std::set<BagId> tree(cands.begin(), cands.end());
  auto msg_rows = [&](BagId src, BagId dst) -> double {
    const Message* m = jt.find_message(src, dst);
    if (m && m->valid) return m->identity ? 1.0 : double(m->payload->row_count());
    double rows = double(bag_relation_rows(jt, merged, src));
    return rows > 0 ? rows : 1.0;
  };

  BagId best = cands[0];
  double best_cost = std::numeric_limits<double>::infinity();
  for (BagId r : cands) {
    auto parent = jt.parents_from(r);
    double cost = 0;
    for (BagId t : cands) {
      if (t == r) continue;
      if (!tree.count(parent[t])) continue;  // orientation stays inside
      double prod = 1.0;
      for (BagId i : jt.neighbors(t)) {
        if (i == parent[t]) continue;
        prod *= std::max(msg_rows(i, t), 1.0);
      }
      double rel_rows = double(bag_relation_rows(jt, merged, t));
      prod *= std::max(rel_rows, 1.0);
      cost += prod;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = r;
    }
  }
  return best;
}

AnnotatedRelation execute(JunctionHypertree& jt, CalibratedHandle& h,
                          const QuerySpec& q, const EngineConfig& cfg,
                          MessageStats* stats, SteinerPlan* plan_out) {
  SteinerPlan plan = build_steiner(jt, h, q);
  refresh_for_plan(jt, h, plan, cfg, stats);

  MessageOverlay overlay;
  for (const DirectedEdge& e : plan.recompute_edges) {
    overlay[e] =
        compute_message(jt, e.src, e.dst, plan.merged, &overlay, cfg, stats);
  }

  AnnotatedRelation absorbed;
  bool from_cache = false;
  if (plan.diff_bags.empty() && cfg.absorption_cache) {
    if (auto cached = jt.cached_absorption(plan.root)) {
      absorbed = *cached;
      from_cache = true;
    }
  }
  if (!from_cache)
    absorbed = absorb(jt, plan.root, plan.merged, &overlay, cfg, stats);

  require(absorbed.schema().contains_all(q.group_attrs),
          "group attributes missing from the absorption result");
  AnnotatedRelation result =
      marginalize(absorbed, schema_minus(absorbed.schema(), q.group_attrs));
  if (plan_out) *plan_out = std::move(plan);
  return result;
}

namespace {

constexpr int kInf = 1 << 28;

struct DpEntry {
  int size = kInf;
  std::vector<int> child_alloc;  // annotations assigned per child subtree
};

struct SteinerDp {
  const JunctionHypertree& jt;
  const std::vector<int>& weight;
  std::map<std::tuple<BagId, BagId, int>, DpEntry> memo;

  // Minimum bags of a steiner tree inside the region behind u→v that
  // contains v and covers n annotations.
  const DpEntry& solve(BagId u, BagId v, int n) {
    auto key = std::make_tuple(u, v, n);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    DpEntry e;
    if (n == 0) {
      e.size = 0;
      memo[key] = e;
      return memo[key];
    }
    std::vector<BagId> children;
    for (BagId c : jt.neighbors(v))
      if (c != u) children.push_back(c);

    // Min-plus combine of the children, one at a time.
    std::vector<int> conv(n + 1, kInf);
    conv[0] = 0;
    std::vector<std::vector<int>> alloc_at(n + 1);
    for (BagId c : children) {
      std::vector<int> next(n + 1, kInf);
      std::vector<std::vector<int>> next_alloc(n + 1);
      for (int m = 0; m <= n; ++m) {
        if (conv[m] >= kInf) continue;
        for (int j = 0; m + j <= n; ++j) {
          int part = j == 0 ? 0 : solve(v, c, j).size;
          if (part >= kInf) continue;
          if (conv[m] + part < next[m + j]) {
            next[m + j] = conv[m] + part;
            next_alloc[m + j] = alloc_at[m];
            next_alloc[m + j].push_back(j);
          }
        }
      }
      conv = std::move(next);
      alloc_at = std::move(next_alloc);
    }
    int w = weight[v];
    int need = std::max(0, n - w);
    if (conv[need] < kInf) {
      e.size = conv[need] + 1;
      e.child_alloc = alloc_at[need];
      e.child_alloc.resize(children.size(), 0);
    }
    memo[key] = std::move(e);
    return memo[key];
  }

  void collect(BagId u, BagId v, int n, std::set<BagId>& bags) {
    if (n == 0) return;
    const DpEntry& e = solve(u, v, n);
    require(e.size < kInf, "steiner dp reconstruction on infeasible entry");
    bags.insert(v);
    std::vector<BagId> children;
    for (BagId c : jt.neighbors(v))
      if (c != u) children.push_back(c);
    for (size_t i = 0; i < children.size(); ++i) {
      int j = i < e.child_alloc.size() ? e.child_alloc[i] : 0;
      if (j > 0) collect(v, children[i], j, bags);
    }
  }
};

SteinerDpResult solve_single_placement(const JunctionHypertree& jt,
                                       const std::vector<int>& weight, int k) {
  SteinerDpResult best;
  best.size = kInf;
  if (jt.bag_count() == 1) {
    if (weight[0] >= k) return {{0}, 1};
    return best;
  }
  SteinerDp dp{jt, weight, {}};
  for (auto [a, b] : jt.edges()) {
    for (int m = 0; m <= k; ++m) {
      const DpEntry& e1 = dp.solve(a, b, m);
      const DpEntry& e2 = dp.solve(b, a, k - m);
      if (e1.size >= kInf || e2.size >= kInf) continue;
      int total = e1.size + e2.size;
      if (total < best.size) {
        std::set<BagId> bags;
        dp.collect(a, b, m, bags);
        dp.collect(b, a, k - m, bags);
        best.size = total;
        best.bags.assign(bags.begin(), bags.end());
      }
    }
  }
  return best;
}

}  // namespace

SteinerDpResult min_steiner_dp(const JunctionHypertree& jt,
                               const std::vector<std::vector<BagId>>& sets,
                               int k) {
  require(k >= 0, "negative annotation count");
  require(k <= static_cast<int>(sets.size()),
          "k exceeds the number of placeable annotations");
  if (k == 0) return {{}, 0};
  for (auto& s : sets) require(!s.empty(), "annotation with no placement bags");

  bool all_single = std::all_of(sets.begin(), sets.end(),
                                [](auto& s) { return s.size() == 1; });
  SteinerDpResult best;
  best.size = kInf;
  for (const Bag& root : jt.bags()) {
    std::vector<int> weight(jt.bag_count(), 0);
    for (auto& s : sets) {
      BagId g = s[0];
      int gd = jt.distance(g, root.id);
      for (BagId cand : s) {
        int d = jt.distance(cand, root.id);
        if (d < gd || (d == gd && cand < g)) {
          g = cand;
          gd = d;
        }
      }
      weight[g]++;
    }
    SteinerDpResult res = solve_single_placement(jt, weight, k);
    if (res.size < best.size) best = std::move(res);
    if (all_single) break;  // placement is root-independent
  }
  require(best.size < kInf, "no steiner tree covers the requested annotations");
  return best;
}

}  // namespace cjt
