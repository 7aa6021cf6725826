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

#include "cjt/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cjt {

namespace {

QuerySpec all_relations_query(const JunctionHypertree& jt, Schema group_attrs,
                              std::vector<Predicate> preds = {}) {
  QuerySpec q;
  q.group_attrs = std::move(group_attrs);
  for (RelationId r = 0; r < jt.store().relation_count(); ++r)
    q.relations.emplace_back(r, jt.store().latest(r));
  q.predicates = std::move(preds);
  return q;
}

void subsets_of_size(std::span<const AttrId> items, uint32_t k,
                     std::vector<AttrId>& cur,
                     std::vector<std::vector<AttrId>>& out, size_t from = 0) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (size_t i = from; i < items.size(); ++i) {
    cur.push_back(items[i]);
    subsets_of_size(items, k, cur, out, i + 1);
    cur.pop_back();
  }
}

std::vector<BagId> relation_bags_with(const JunctionHypertree& jt, AttrId a) {
  std::set<BagId> out;
  for (auto& [r, b] : jt.mapping())
    if (jt.store().at(r, 0).schema().contains(a)) out.insert(b);
  return {out.begin(), out.end()};
}

std::vector<BagId> bags_containing(const JunctionHypertree& jt, AttrId a) {
  std::vector<BagId> out;
  for (const Bag& b : jt.bags())
    if (b.attrs.contains(a)) out.push_back(b.id);
  return out;
}

}  // namespace

CubeIndex build_cube(const JunctionHypertree& base, const Schema& dims,
                     uint32_t k, const EngineConfig& cfg, MessageStats* stats) {
  Schema all_attrs;
  for (const Bag& b : base.bags()) all_attrs = schema_union(all_attrs, b.attrs);
  require(all_attrs.contains_all(dims), "cube dimensions outside the tree");
  require(k <= dims.arity(), "cuboid dimensionality exceeds the dimensions");

  CubeIndex cube;
  cube.k = k;
  cube.dims = dims;

  std::vector<std::vector<AttrId>> subsets;
  std::vector<AttrId> cur;
  subsets_of_size(dims.attrs(), k, cur, subsets);

  EngineConfig pivot_cfg = cfg;
  pivot_cfg.absorption_cache = true;
  for (auto& s : subsets) {
    CubePivot pivot;
    pivot.jt = base;
    pivot.jt.clear_messages();
    QuerySpec q = all_relations_query(pivot.jt, Schema(s));
    AnnotationPlacement placement = place_annotations(
        pivot.jt, q, PlacementMode::reuse_priority, 0, nullptr);
    pivot.handle =
        calibrate(pivot.jt, std::move(placement), pivot_cfg, stats);
    cube.pivots.emplace(Schema(s), std::move(pivot));
  }
  return cube;
}

int olap_steiner_size(const CubePivot& pivot, const Schema& group_attrs,
                      std::span<const Predicate> preds) {
  const JunctionHypertree& jt = pivot.jt;
  Schema pivot_groups;
  for (auto& [b, anns] : pivot.handle.pivot.bags)
    for (const Annotation& a : anns)
      if (a.kind == AnnotationKind::group_by)
        pivot_groups = schema_union(pivot_groups, Schema({a.attr}));

  std::vector<std::vector<BagId>> sets;
  const Schema added = schema_minus(group_attrs, pivot_groups);
  const Schema cancelled = schema_minus(pivot_groups, group_attrs);
  for (AttrId a : added.attrs())
    sets.push_back(relation_bags_with(jt, a));  // new group-by
  for (AttrId a : cancelled.attrs())
    sets.push_back(bags_containing(jt, a));  // compensating marginalize
  for (const Predicate& p : preds) sets.push_back(relation_bags_with(jt, p.attr));

  if (sets.empty()) return 0;
  for (auto& s : sets)
    if (s.empty()) return 1 << 28;  // unanswerable on this pivot
  return min_steiner_dp(jt, sets, static_cast<int>(sets.size())).size;
}

AnnotatedRelation answer_olap(CubeIndex& cube, const Schema& group_attrs,
                              std::span<const Predicate> preds,
                              const EngineConfig& cfg, MessageStats* stats,
                              Schema* chosen_pivot) {
  require(!cube.pivots.empty(), "cube has no pivots");
  const Schema* best_key = nullptr;
  int best_size = 0;
  for (auto& [key, pivot] : cube.pivots) {
    int size = olap_steiner_size(pivot, group_attrs, preds);
    if (!best_key || size < best_size) {
      best_key = &key;
      best_size = size;
    }
  }
  if (chosen_pivot) *chosen_pivot = *best_key;
  CubePivot& pivot = cube.pivots.at(*best_key);
  QuerySpec q = all_relations_query(
      pivot.jt, group_attrs, std::vector<Predicate>(preds.begin(), preds.end()));
  return execute(pivot.jt, pivot.handle, q, cfg, stats);
}

BagId augment(JunctionHypertree& jt, CalibratedHandle& h,
              AnnotatedRelation new_rel, const Schema& join_keys,
              const EngineConfig& cfg, MessageStats* stats) {
  require(new_rel.schema().contains_all(join_keys),
          "join keys missing from the augmentation relation");
  require(!join_keys.empty(), "augmentation requires at least one join key");

  BagId host = kNoBag;
  for (const Bag& b : jt.bags()) {
    if (b.attrs.contains_all(join_keys) && (host == kNoBag)) host = b.id;
  }

  if (host != kNoBag) {
    // Single-bag case: attach and send exactly one message.
    RelationId rel = jt.store().add(std::move(new_rel));
    BagId fresh = jt.add_bag(jt.store().at(rel, 0).schema(), false);
    jt.add_edge(host, fresh);
    jt.set_mapping(rel, fresh);
    h.pivot.versions[rel] = 0;
    auto violations = jt.validate();
    require(violations.empty(),
            "augmentation broke the tree: " + violations_to_string(violations));
    pass_message(jt, host, fresh, h.pivot, cfg, stats);
    jt.invalidate_away_from(fresh, stats);
    return fresh;
  }

  // Multi-bag case: aggregate over the keys' steiner tree, widen those bags
  // with the keys, attach the new bag to the tree.
  QuerySpec q = all_relations_query(jt, join_keys);
  SteinerPlan plan;
  AnnotatedRelation keyed = execute(jt, h, q, cfg, stats, &plan);

  std::vector<BagId> widened = plan.tree_bags;
  if (widened.empty()) widened.push_back(plan.root);
  for (BagId t : widened) jt.widen_bag(t, join_keys);
  RelationId rel = jt.store().add(std::move(new_rel));
  BagId attach = *std::min_element(widened.begin(), widened.end());
  BagId fresh = jt.add_bag(jt.store().at(rel, 0).schema(), false);
  jt.add_edge(attach, fresh);
  jt.set_mapping(rel, fresh);
  h.pivot.versions[rel] = 0;

  auto violations = jt.validate();
  require(violations.empty(),
          "augmentation with widened bags broke the tree: " +
              violations_to_string(violations));

  Message& m = jt.upsert_message(attach, fresh);
  m.payload = std::make_shared<const AnnotatedRelation>(std::move(keyed));
  m.identity = false;
  m.valid = true;
  m.carried = Schema{};
  m.signature = subtree_signature(jt, attach, fresh, h.pivot);

  jt.invalidate_away_from(fresh, stats);
  // Widening changed the keep-set of every edge incident to a widened bag.
  for (BagId t : widened) {
    for (BagId n : jt.neighbors(t)) {
      if (n == fresh) continue;
      for (auto [src, dst] : {std::pair{n, t}, std::pair{t, n}}) {
        if (Message* msg = jt.find_message(src, dst); msg && msg->valid) {
          msg->valid = false;
          if (stats) stats->messages_invalidated++;
        }
      }
    }
  }
  return fresh;
}

AnnotatedRelation embed_covariance(const AnnotatedRelation& rel,
                                   const SemiringSpec& to,
                                   std::span<const size_t> dim_map) {
  require(rel.ring().id() == SemiringId::covariance &&
              to.id() == SemiringId::covariance,
          "embedding requires covariance instances");
  const size_t od = rel.ring().dim();
  const size_t nd = to.dim();
  require(dim_map.size() == od, "dimension map size mismatch");
  RelationBuilder b(rel.schema(), to);
  b.reserve(rel.row_count());
  for (size_t i = 0; i < rel.row_count(); ++i) {
    auto p = rel.value(i).cov_payload();
    std::vector<double> out(to.payload_len(), 0.0);
    out[0] = p[0];
    for (size_t x = 0; x < od; ++x) out[1 + dim_map[x]] = p[1 + x];
    for (size_t x = 0; x < od; ++x)
      for (size_t y = 0; y < od; ++y)
        out[1 + nd + dim_map[x] * nd + dim_map[y]] = p[1 + od + x * od + y];
    b.add(rel.tuple(i), SemiringValue::cov(std::move(out)));
  }
  return b.finish();
}

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b,
                              size_t n) {
  // LL^T factorization in place.
  for (size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    require(d > 1e-12, "matrix is not positive definite");
    a[j * n + j] = std::sqrt(d);
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / a[j * n + j];
    }
  }
  // Forward then backward substitution.
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return b;
}

LinRegModel train_linreg(const JunctionHypertree& jt, const CalibratedHandle& h,
                         BagId at_bag, std::span<const size_t> feature_dims,
                         size_t target_dim, double lambda,
                         const EngineConfig& cfg, MessageStats* stats) {
  require(lambda >= 0, "lambda must be non-negative");
  const SemiringSpec& ring = jt.store().at(0, 0).ring();
  require(ring.id() == SemiringId::covariance,
          "training requires a covariance-calibrated tree");
  if (at_bag == kNoBag) at_bag = h.root;

  AnnotatedRelation absorbed =
      absorb(jt, at_bag, h.pivot, nullptr, cfg, stats);
  AnnotatedRelation total =
      marginalize(absorbed, absorbed.schema());  // aggregate to a scalar
  require(total.row_count() == 1, "no data to train on");

  auto p = total.value(0).cov_payload();
  const size_t d = ring.dim();
  const double big_n = p[0];
  const double* s = p.data() + 1;
  const double* qm = p.data() + 1 + d;

  const size_t m = feature_dims.size() + 1;  // intercept block first
  std::vector<double> a(m * m, 0.0), rhs(m, 0.0);
  a[0] = big_n + lambda;
  for (size_t i = 0; i < feature_dims.size(); ++i) {
    a[0 * m + (1 + i)] = s[feature_dims[i]];
    a[(1 + i) * m + 0] = s[feature_dims[i]];
    for (size_t j = 0; j < feature_dims.size(); ++j)
      a[(1 + i) * m + (1 + j)] = qm[feature_dims[i] * d + feature_dims[j]];
    a[(1 + i) * m + (1 + i)] += lambda;
  }
  rhs[0] = s[target_dim];
  for (size_t i = 0; i < feature_dims.size(); ++i)
    rhs[1 + i] = qm[feature_dims[i] * d + target_dim];

  std::vector<double> w;
  try {
    w = solve_spd(std::move(a), std::move(rhs), m);
  } catch (const Error&) {
    fail("singular normal matrix; try lambda > 0");
  }

  LinRegModel model;
  model.lambda = lambda;
  model.intercept = w[0];
  model.weights.assign(w.begin() + 1, w.end());
  return model;
}

}  // namespace cjt
