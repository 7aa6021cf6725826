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

#include "cjt/maintenance.hpp"

#include <algorithm>
#include <map>

namespace cjt {

namespace {

void validate_delta(const JunctionHypertree& jt, const DeltaRelation& delta) {
  const AnnotatedRelation& base = jt.store().at(delta.rel, 0);
  require(delta.rows.schema() == base.schema(),
          "delta schema does not match the base relation");
  require(delta.rows.ring() == base.ring(), "delta semi-ring mismatch");
  if (!base.ring().has_additive_inverse()) {
    for (size_t i = 0; i < delta.rows.row_count(); ++i) {
      require(delta.rows.value(i).count_value() >= 0,
              "deletions require a semi-ring with an additive inverse");
    }
  }
}

Version append_combined(JunctionHypertree& jt, const DeltaRelation& delta) {
  const AnnotatedRelation& base =
      jt.store().at(delta.rel, jt.store().latest(delta.rel));
  RelationBuilder b(base.schema(), base.ring());
  b.reserve(base.row_count() + delta.rows.row_count());
  for (size_t i = 0; i < base.row_count(); ++i)
    b.add(base.tuple(i), base.value(i));
  for (size_t i = 0; i < delta.rows.row_count(); ++i)
    b.add(delta.rows.tuple(i), delta.rows.value(i));
  return jt.store().append(delta.rel, b.finish());
}

Schema marker_attrs(const AnnotationPlacement& p, BagId b, AnnotationKind k) {
  std::vector<AttrId> v;
  for (const Annotation& a : p.at(b))
    if (a.kind == k) v.push_back(a.attr);
  return Schema(std::move(v));
}

// Delta message along u→v: the message-generation formula with the changed
// factor replaced by its delta and every other factor unchanged.
AnnotatedRelation compute_delta_payload(
    const JunctionHypertree& jt, BagId u, BagId v,
    const AnnotationPlacement& pivot, const DeltaRelation& delta,
    const std::map<DirectedEdge, AnnotatedRelation>& deltas) {
  std::vector<std::shared_ptr<const AnnotatedRelation>> owned;
  std::vector<const AnnotatedRelation*> inputs;
  Schema carried;

  for (BagId i : jt.neighbors(u)) {
    if (i == v) continue;
    const Message* m = jt.find_message(i, u);
    require(m && m->valid, "eager maintenance requires a calibrated tree");
    carried = schema_union(carried, m->carried);
    auto dit = deltas.find(DirectedEdge{i, u});
    if (dit != deltas.end()) {
      inputs.push_back(&dit->second);  // the changed factor
    } else {
      if (m->identity) continue;
      inputs.push_back(m->payload.get());
    }
  }
  for (RelationId r : jt.relations_at(u)) {
    if (pivot.excluded(r, u)) continue;
    if (r == delta.rel) {
      inputs.push_back(&delta.rows);
    } else {
      auto ptr = jt.store().ptr(r, effective_version(jt, pivot, r));
      inputs.push_back(ptr.get());
      owned.push_back(std::move(ptr));
    }
  }

  Schema gamma = marker_attrs(pivot, u, AnnotationKind::group_by);
  Schema sigma = marker_attrs(pivot, u, AnnotationKind::marginalize_out);
  carried = schema_minus(schema_union(carried, gamma), sigma);

  for (const Annotation& a : pivot.at(u)) {
    if (a.kind != AnnotationKind::select_pred) continue;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i]->schema().contains(a.pred.attr)) {
        auto filtered = std::make_shared<const AnnotatedRelation>(
            select(*inputs[i], a.pred));
        inputs[i] = filtered.get();
        owned.push_back(std::move(filtered));
      }
    }
  }

  AnnotatedRelation joined = join(std::span<const AnnotatedRelation* const>(
      inputs.data(), inputs.size()));
  Schema keep =
      schema_union(schema_intersect(jt.bag(u).attrs, jt.bag(v).attrs), carried);
  return marginalize(joined, schema_minus(joined.schema(), keep));
}

}  // namespace

void apply_delta_eager(JunctionHypertree& jt, CalibratedHandle& h,
                       const DeltaRelation& delta, const EngineConfig& cfg,
                       MessageStats* stats) {
  validate_delta(jt, delta);

  // Incremental propagation needs every cached message; on a tree with
  // invalidated edges fall back to the lazy path, which stays correct.
  bool fully_valid = true;
  for (auto [a, b] : jt.edges()) {
    const Message* m1 = jt.find_message(a, b);
    const Message* m2 = jt.find_message(b, a);
    if (!m1 || !m2 || !m1->valid || !m2->valid) fully_valid = false;
  }
  if (!fully_valid) {
    append_combined(jt, delta);
    invalidate_lazy(jt, h, delta.rel, stats);
    return;
  }

  Version newv = append_combined(jt, delta);
  BagId origin = jt.bag_of(delta.rel);

  if (h.pivot.excluded(delta.rel, origin)) return;  // pivot never joins it
  if (!h.pivot.versions.count(delta.rel)) return;
  h.pivot.versions[delta.rel] = newv;

  if (delta.rows.empty()) {
    // No-op delta: the cache already reflects the (identical) new version;
    // only signatures move with the version bump.
    for (const DirectedEdge& e : jt.edges_away_from(origin)) {
      if (Message* m = jt.find_message(e.src, e.dst))
        m->signature = subtree_signature(jt, e.src, e.dst, h.pivot);
    }
    jt.clear_absorption_cache();
    return;
  }

  std::map<DirectedEdge, AnnotatedRelation> deltas;
  for (const DirectedEdge& e : jt.edges_away_from(origin)) {
    AnnotatedRelation dp =
        compute_delta_payload(jt, e.src, e.dst, h.pivot, delta, deltas);
    Message* m = jt.find_message(e.src, e.dst);
    require(m && m->valid, "eager maintenance requires a calibrated tree");
    require(!m->identity, "delta propagation reached an identity message");

    RelationBuilder b(m->payload->schema(), m->payload->ring());
    b.reserve(m->payload->row_count() + dp.row_count());
    for (size_t i = 0; i < m->payload->row_count(); ++i)
      b.add(m->payload->tuple(i), m->payload->value(i));
    for (size_t i = 0; i < dp.row_count(); ++i) b.add(dp.tuple(i), dp.value(i));
    m->payload = std::make_shared<const AnnotatedRelation>(b.finish());
    m->signature = subtree_signature(jt, e.src, e.dst, h.pivot);
    if (stats) {
      stats->messages_updated++;
      stats->tuples_processed += dp.row_count();
    }
    deltas.emplace(e, std::move(dp));
  }
  jt.clear_absorption_cache();
  (void)cfg;
}

void invalidate_lazy(JunctionHypertree& jt, CalibratedHandle& h, RelationId rel,
                     MessageStats* stats) {
  BagId origin = jt.bag_of(rel);
  jt.invalidate_away_from(origin, stats);
  if (h.pivot.versions.count(rel))
    h.pivot.versions[rel] = jt.store().latest(rel);
}

void apply_delta_lazy(JunctionHypertree& jt, CalibratedHandle& h,
                      const DeltaRelation& delta, MessageStats* stats) {
  validate_delta(jt, delta);
  append_combined(jt, delta);
  invalidate_lazy(jt, h, delta.rel, stats);
}

void apply_delta(JunctionHypertree& jt, CalibratedHandle& h,
                 const DeltaRelation& delta, MaintenanceMode mode,
                 const EngineConfig& cfg, MessageStats* stats) {
  if (mode == MaintenanceMode::eager)
    apply_delta_eager(jt, h, delta, cfg, stats);
  else
    apply_delta_lazy(jt, h, delta, stats);
}

namespace {

void ensure_valid(JunctionHypertree& jt, const CalibratedHandle& h, BagId src,
                  BagId dst, const EngineConfig& cfg, MessageStats* stats) {
  const Message* m = jt.find_message(src, dst);
  require(m != nullptr, "message was never calibrated");
  if (m->valid) return;
  for (BagId i : jt.neighbors(src)) {
    if (i == dst) continue;
    ensure_valid(jt, h, i, src, cfg, stats);
  }
  pass_message(jt, src, dst, h.pivot, cfg, stats);
}

}  // namespace

void refresh_for_plan(JunctionHypertree& jt, const CalibratedHandle& h,
                      const SteinerPlan& plan, const EngineConfig& cfg,
                      MessageStats* stats) {
  for (const DirectedEdge& e : plan.reused_edges)
    ensure_valid(jt, h, e.src, e.dst, cfg, stats);
}

}  // namespace cjt
