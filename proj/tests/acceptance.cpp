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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
// process exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "cjt/analytics.hpp"
#include "cjt/engine.hpp"
#include "support/gen.hpp"
#include "support/oracle.hpp"

using namespace cjt;
using namespace cjt::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    if (detail.empty()) detail = why;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

QuerySpec all_latest(const JunctionHypertree& jt) {
  QuerySpec q;
  for (RelationId r = 0; r < jt.store().relation_count(); ++r)
    q.relations.emplace_back(r, jt.store().latest(r));
  return q;
}

CalibratedHandle calibrate_total(JunctionHypertree& jt, const EngineConfig& cfg,
                                 MessageStats* stats = nullptr, BagId root = 0) {
  AnnotationPlacement p = place_annotations(
      jt, all_latest(jt), PlacementMode::reuse_priority, root, nullptr);
  return calibrate(jt, std::move(p), cfg, stats, root);
}

RowMap run_oracle(const JunctionHypertree& jt, const QuerySpec& q,
                  const SemiringSpec& ring) {
  return oracle_query(ring, query_inputs(jt, q), q.predicates, q.group_attrs);
}

// 1. CJT answers equal brute force on 200 random databases, 5 queries each.
Outcome criterion1() {
  Outcome out;
  auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  EngineConfig cfg;
  const SemiringSpec ring = SemiringSpec::nat_count();
  for (int db_i = 0; db_i < 200 && out.pass; ++db_i) {
    auto db = make_random_acyclic_db(rng, {5, 30, 4, ring});
    JunctionHypertree jt = default_jt(std::move(db.store));
    CalibratedHandle h =
        calibrate_total(jt, cfg, nullptr, BagId(rng() % jt.bag_count()));
    for (int qi = 0; qi < 5; ++qi) {
      QuerySpec q = make_random_query(rng, jt, db);
      AnnotatedRelation res = execute(jt, h, q, cfg, nullptr);
      if (!rowmap_equal(ring, to_rowmap(res), run_oracle(jt, q, ring))) {
        std::ostringstream os;
        os << "mismatch on db " << db_i << " query " << qi;
        out.fail(os.str());
        break;
      }
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 60.0) out.fail("exceeded the 60 s budget");
  std::ostringstream os;
  os << out.detail << (out.detail.empty() ? "" : "; ") << "1000 queries in "
     << secs << " s";
  out.detail = os.str();
  return out;
}

// 2. Calibration yields agreeing marginals everywhere and costs exactly
//    2(|bags|-1) messages, within twice an upward pass.
Outcome criterion2() {
  Outcome out;
  std::mt19937_64 rng(1001);  // the same instances as criterion 1
  EngineConfig cfg;
  const SemiringSpec ring = SemiringSpec::nat_count();
  for (int db_i = 0; db_i < 200 && out.pass; ++db_i) {
    auto db = make_random_acyclic_db(rng, {5, 30, 4, ring});
    JunctionHypertree jt = default_jt(std::move(db.store));
    BagId root = BagId(rng() % jt.bag_count());  // criterion 1's draw

    MessageStats up;
    AnnotationPlacement p = place_annotations(
        jt, all_latest(jt), PlacementMode::reuse_priority, root, nullptr);
    upward_pass(jt, root, p, cfg, &up);
    jt.clear_messages();

    MessageStats full;
    CalibratedHandle h = calibrate(jt, p, cfg, &full, root);
    const uint64_t expect = 2 * (jt.bag_count() - 1);
    if (full.messages_computed != expect) out.fail("calibration message count");
    if (jt.bag_count() > 1 &&
        full.messages_computed > 2 * up.messages_computed)
      out.fail("calibration exceeded twice the upward pass");
    if (!is_calibrated(jt, h.pivot, cfg)) out.fail("marginals disagree");
    // Keep rng in sync with criterion 1's query generation.
    for (int qi = 0; qi < 5; ++qi) make_random_query(rng, jt, db);
  }
  return out;
}

// 3. Five traversal orders and three roots produce byte-identical caches.
Outcome criterion3() {
  Outcome out;
  std::mt19937_64 rng(3003);
  EngineConfig cfg;
  for (int db_i = 0; db_i < 50 && out.pass; ++db_i) {
    auto db = make_random_acyclic_db(rng);
    JunctionHypertree jt = default_jt(std::move(db.store));
    AnnotationPlacement p = place_annotations(
        jt, all_latest(jt), PlacementMode::reuse_priority, 0, nullptr);

    BagId root = BagId(rng() % jt.bag_count());
    auto parent = jt.parents_from(root);
    std::string reference;
    for (int run = 0; run < 5; ++run) {
      jt.clear_messages();
      // Random leaves-first schedule.
      std::vector<int> pending(jt.bag_count(), 0);
      for (BagId b = 0; b < jt.bag_count(); ++b)
        if (b != root) pending[parent[b]]++;
      std::vector<BagId> ready;
      for (BagId b = 0; b < jt.bag_count(); ++b)
        if (b != root && pending[b] == 0) ready.push_back(b);
      std::vector<BagId> order;
      while (!ready.empty()) {
        size_t i = rng() % ready.size();
        BagId b = ready[i];
        ready.erase(ready.begin() + i);
        order.push_back(b);
        BagId pp = parent[b];
        if (pp != kNoBag && pp != root && --pending[pp] == 0)
          ready.push_back(pp);
      }
      upward_pass(jt, root, p, cfg, nullptr, order);
      downward_pass(jt, root, p, cfg, nullptr);
      std::string dump = serialize_cache(jt);
      if (run == 0)
        reference = dump;
      else if (dump != reference)
        out.fail("traversal order changed the cache");
    }
    for (int run = 0; run < 3 && out.pass; ++run) {
      jt.clear_messages();
      calibrate(jt, p, cfg, nullptr, BagId(rng() % jt.bag_count()));
      if (serialize_cache(jt) != reference)
        out.fail("calibration root changed the cache");
    }
  }
  return out;
}

// 4. Delta queries recompute at most |steiner|-1 messages and interventions
//    recompute none.
Outcome criterion4() {
  Outcome out;
  std::mt19937_64 rng(4004);
  EngineConfig cfg;
  const SemiringSpec ring = SemiringSpec::nat_count();
  for (int db_i = 0; db_i < 40 && out.pass; ++db_i) {
    auto db = make_random_acyclic_db(rng, {5, 20, 4, ring});
    JunctionHypertree jt = default_jt(std::move(db.store));
    CalibratedHandle h = calibrate_total(jt, cfg);

    // One added predicate.
    Schema all;
    for (RelationId r = 0; r < jt.store().relation_count(); ++r)
      all = schema_union(all, jt.store().at(r, 0).schema());
    QuerySpec q1 = all_latest(jt);
    AttrId pa = all.at(rng() % all.arity());
    q1.predicates.push_back(
        Predicate{pa, Cmp::eq, Code(rng() % db.domains[pa.v])});
    MessageStats s1;
    SteinerPlan plan1;
    AnnotatedRelation r1 = execute(jt, h, q1, cfg, &s1, &plan1);
    if (s1.messages_computed + 1 > plan1.tree_bags.size())
      out.fail("predicate delta exceeded |steiner|-1 messages");
    if (!rowmap_equal(ring, to_rowmap(r1), run_oracle(jt, q1, ring)))
      out.fail("predicate delta result mismatch");

    // One added group-by.
    QuerySpec q2 = all_latest(jt);
    AttrId ga = all.at(rng() % all.arity());
    q2.group_attrs = Schema({std::vector<AttrId>{ga}});
    MessageStats s2;
    SteinerPlan plan2;
    AnnotatedRelation r2 = execute(jt, h, q2, cfg, &s2, &plan2);
    if (s2.messages_computed + 1 > plan2.tree_bags.size())
      out.fail("group-by delta exceeded |steiner|-1 messages");
    if (!rowmap_equal(ring, to_rowmap(r2), run_oracle(jt, q2, ring)))
      out.fail("group-by delta result mismatch");

    // Intervention: a new version of one relation, pivot re-answered.
    RelationId victim = RelationId(rng() % jt.store().relation_count());
    const AnnotatedRelation& base = jt.store().at(victim, 0);
    RelationBuilder nb(base.schema(), ring);
    for (size_t i = 1; i < base.row_count(); ++i)  // drop one row
      nb.add(base.tuple(i), base.value(i));
    jt.store().append(victim, nb.finish());
    QuerySpec q3 = all_latest(jt);
    MessageStats s3;
    AnnotatedRelation r3 = execute(jt, h, q3, cfg, &s3);
    if (s3.messages_computed != 0) out.fail("intervention passed messages");
    if (!rowmap_equal(ring, to_rowmap(r3), run_oracle(jt, q3, ring)))
      out.fail("intervention result mismatch");
  }
  return out;
}

// 5. Scaled chain benchmark: tiny messages against a 65,536-row full join.
Outcome criterion5() {
  Outcome out;
  auto t0 = Clock::now();
  const int r = 6, f = 4, d = 64;

  ChainBenchReport rep = run_chain_bench(r, f, d, 42);
  if (rep.max_message_rows > size_t(d)) out.fail("a message exceeded d rows");

  // Full join size via the independent oracle (total count of the join).
  RelationStore store = make_chain_store(r, f, d);
  std::vector<const AnnotatedRelation*> rels;
  for (RelationId i = 0; i < store.relation_count(); ++i)
    rels.push_back(&store.at(i, 0));
  RowMap total = oracle_query(SemiringSpec::nat_count(), rels, {}, Schema{});
  uint64_t join_rows =
      total.empty() ? 0 : uint64_t(total.begin()->second.count_value());
  const uint64_t expect = uint64_t(d) * (1ull << (2 * (r - 1)));  // d * f^(r-1)
  if (join_rows != expect) out.fail("oracle full join size unexpected");
  if (rep.total_count != join_rows) out.fail("factorized total mismatch");
  double ratio = double(join_rows) / double(rep.max_message_rows);
  if (ratio < 100.0) out.fail("factorized/full ratio below 100x");
  double secs = seconds_since(t0);
  if (secs >= 10.0) out.fail("exceeded the 10 s budget");

  std::ostringstream os;
  os << out.detail << (out.detail.empty() ? "" : "; ") << "join=" << join_rows
     << " max_msg=" << rep.max_message_rows << " ratio=" << ratio << "x in "
     << secs << " s";
  out.detail = os.str();
  return out;
}

// 6. Eager, lazy and rebuild agree over random 20-step update streams, and
//    eager touches exactly the away-oriented half per update.
Outcome criterion6() {
  Outcome out;
  std::mt19937_64 rng(6006);
  EngineConfig cfg;
  const SemiringSpec ring = SemiringSpec::int_count();
  for (int stream = 0; stream < 5 && out.pass; ++stream) {
    auto db = make_random_acyclic_db(rng, {5, 20, 4, ring});
    JunctionHypertree eager_jt = default_jt(std::move(db.store));
    JunctionHypertree lazy_jt = eager_jt;
    lazy_jt.clear_messages();
    CalibratedHandle eager_h = calibrate_total(eager_jt, cfg);
    CalibratedHandle lazy_h = calibrate_total(lazy_jt, cfg);

    int queries = 0;
    for (int step = 0; step < 20 && out.pass; ++step) {
      RelationId rel = RelationId(rng() % eager_jt.store().relation_count());
      const Schema& s = eager_jt.store().at(rel, 0).schema();
      RelationBuilder b(s, ring);
      std::vector<Code> row(s.arity());
      for (size_t c = 0; c < row.size(); ++c)
        row[c] = Code(rng() % db.domains[s.at(c).v]);
      int64_t cnt = (rng() % 2 ? 1 : -1) * int64_t(1 + rng() % 2);
      b.add(row, SemiringValue::count(cnt));
      AnnotatedRelation delta_rows = b.finish();
      if (delta_rows.empty()) continue;

      MessageStats es;
      apply_delta(eager_jt, eager_h, DeltaRelation{rel, delta_rows},
                  MaintenanceMode::eager, cfg, &es);
      apply_delta(lazy_jt, lazy_h, DeltaRelation{rel, delta_rows},
                  MaintenanceMode::lazy, cfg, nullptr);
      if (es.messages_updated != eager_jt.bag_count() - 1)
        out.fail("eager update did not touch exactly the away half");

      if (step % 2 == 1 && queries < 10) {
        ++queries;
        QuerySpec q = make_random_query(rng, eager_jt, db,
                                        /*allow_exclusions=*/false);
        AnnotatedRelation via_eager =
            execute(eager_jt, eager_h, q, cfg, nullptr);
        AnnotatedRelation via_lazy = execute(lazy_jt, lazy_h, q, cfg, nullptr);
        JunctionHypertree rebuilt = eager_jt;
        rebuilt.clear_messages();
        CalibratedHandle hr = calibrate_total(rebuilt, cfg);
        AnnotatedRelation via_rebuild = execute(rebuilt, hr, q, cfg, nullptr);
        if (!(to_rowmap(via_eager) == to_rowmap(via_lazy)) ||
            !(to_rowmap(via_eager) == to_rowmap(via_rebuild)))
          out.fail("maintenance strategies disagreed");
      }
    }
  }
  return out;
}

// 7. The steiner DP agrees with exhaustive enumeration on 100 random trees.
Outcome criterion7() {
  Outcome out;
  std::mt19937_64 rng(7007);
  for (int round = 0; round < 100 && out.pass; ++round) {
    auto db = make_random_acyclic_db(rng, {8, 4, 3, SemiringSpec::nat_count()});
    JunctionHypertree jt = default_jt(std::move(db.store));
    const size_t n = jt.bag_count();
    std::set<BagId> annotated;
    int count = 1 + int(rng() % std::min<size_t>(n, 4));
    while (int(annotated.size()) < count) annotated.insert(BagId(rng() % n));
    std::vector<std::vector<BagId>> sets;
    for (BagId b : annotated) sets.push_back({b});
    int k = 1 + int(rng() % sets.size());
    auto dp = min_steiner_dp(jt, sets, k);
    if (dp.size != oracle_min_steiner(jt, sets, k))
      out.fail("dp disagreed with exhaustive enumeration");
  }
  return out;
}

// 8. Cube answers match brute force and the best pivot never passes more
//    messages than the worst.
Outcome criterion8() {
  Outcome out;
  std::mt19937_64 rng(8008);
  EngineConfig cfg;
  cfg.absorption_cache = true;
  const SemiringSpec ring = SemiringSpec::nat_count();

  // Four relations, four dimension attributes (0, 2, 4, 6).
  RelationStore store;
  auto add = [&](Schema s) {
    RelationBuilder b(s, ring);
    std::vector<Code> row(s.arity());
    for (int i = 0; i < 10; ++i) {
      for (auto& c : row) c = Code(rng() % 3);
      b.add(row, SemiringValue::count(1 + int64_t(rng() % 2)));
    }
    store.add(b.finish());
  };
  add(Schema::of({0, 1}));
  add(Schema::of({1, 2, 3}));
  add(Schema::of({3, 4, 5}));
  add(Schema::of({5, 6}));
  JunctionHypertree jt = default_jt(std::move(store));
  Schema dims = Schema::of({0, 2, 4, 6});
  CubeIndex cube = build_cube(jt, dims, 1, cfg, nullptr);

  std::vector<const AnnotatedRelation*> rels;
  for (RelationId r = 0; r < jt.store().relation_count(); ++r)
    rels.push_back(&jt.store().at(r, 0));

  for (AttrId x : dims.attrs()) {
    for (AttrId y : dims.attrs()) {
      if (!(x < y)) continue;
      Schema h({std::vector<AttrId>{x, y}});
      AnnotatedRelation res = answer_olap(cube, h, {}, cfg, nullptr);
      auto expected = oracle_query(ring, rels, {}, h);
      if (!rowmap_equal(ring, to_rowmap(res), expected))
        out.fail("a 2-attribute cuboid mismatched brute force");
    }
  }

  // Three-attribute query: compare best and worst pivot by steiner size.
  Schema h3 = Schema::of({0, 2, 4});
  const Schema* best_key = nullptr;
  const Schema* worst_key = nullptr;
  int best_sz = 0, worst_sz = 0;
  for (auto& [key, pivot] : cube.pivots) {
    int sz = olap_steiner_size(pivot, h3, {});
    if (!best_key || sz < best_sz) {
      best_key = &key;
      best_sz = sz;
    }
    if (!worst_key || sz > worst_sz) {
      worst_key = &key;
      worst_sz = sz;
    }
  }
  auto run_on = [&](const Schema& key) {
    CubePivot& pivot = cube.pivots.at(key);
    QuerySpec q;
    for (RelationId r = 0; r < pivot.jt.store().relation_count(); ++r)
      q.relations.emplace_back(r, pivot.jt.store().latest(r));
    q.group_attrs = h3;
    MessageStats stats;
    AnnotatedRelation res = execute(pivot.jt, pivot.handle, q, cfg, &stats);
    if (!rowmap_equal(ring, to_rowmap(res), oracle_query(ring, rels, {}, h3)))
      out.fail("3-attribute answer mismatched brute force");
    return stats.messages_computed;
  };
  uint64_t best_msgs = run_on(*best_key);
  uint64_t worst_msgs = run_on(*worst_key);
  if (best_msgs > worst_msgs) out.fail("best pivot passed more messages");
  std::ostringstream os;
  os << out.detail << (out.detail.empty() ? "" : "; ") << "best=" << best_msgs
     << " worst=" << worst_msgs << " messages";
  out.detail = os.str();
  return out;
}

// 9. Factorized regression: gram parity, augment-retrain parity, one-message
//    augmentation.
Outcome criterion9() {
  Outcome out;
  std::mt19937_64 rng(9009);
  EngineConfig cfg;

  // Three relations R0(A,B;x0), R1(B,C;x1), R2(C;y); about a thousand
  // joined rows.
  const uint32_t d3 = 3;
  SemiringSpec ring3 = SemiringSpec::covariance(d3);
  struct Raw {
    Schema s;
    std::vector<std::vector<Code>> tuples;
    std::vector<double> measure;
    size_t dim;
  };
  std::vector<Raw> raws(3);
  raws[0] = {Schema::of({0, 1}), {}, {}, 0};
  raws[1] = {Schema::of({1, 2}), {}, {}, 1};
  raws[2] = {Schema::of({2}), {}, {}, 2};
  for (auto& raw : raws) {
    std::vector<Code> row(raw.s.arity());
    for (int i = 0; i < 24; ++i) {
      for (auto& c : row) c = Code(rng() % 4);
      raw.tuples.push_back(row);
      raw.measure.push_back(double(int(rng() % 41) - 20) / 4.0);
    }
  }
  RelationStore store;
  for (auto& raw : raws) {
    RelationBuilder b(raw.s, ring3);
    std::vector<double> vec(d3, 0.0);
    for (size_t i = 0; i < raw.tuples.size(); ++i) {
      std::fill(vec.begin(), vec.end(), 0.0);
      vec[raw.dim] = raw.measure[i];
      b.add(raw.tuples[i], ring3.lift(vec));
    }
    store.add(b.finish());
  }

  // Materialized join rows for the oracle gram matrix.
  std::vector<std::vector<double>> joined;
  for (size_t i = 0; i < raws[0].tuples.size(); ++i)
    for (size_t j = 0; j < raws[1].tuples.size(); ++j) {
      if (raws[0].tuples[i][1] != raws[1].tuples[j][0]) continue;
      for (size_t k = 0; k < raws[2].tuples.size(); ++k) {
        if (raws[1].tuples[j][1] != raws[2].tuples[k][0]) continue;
        joined.push_back(
            {raws[0].measure[i], raws[1].measure[j], raws[2].measure[k]});
      }
    }
  if (joined.empty() || joined.size() > 1000) out.fail("bad instance size");

  JunctionHypertree jt = default_jt(std::move(store));
  CalibratedHandle h = calibrate_total(jt, cfg);

  AnnotatedRelation abs = absorb(jt, h.root, h.pivot, nullptr, cfg, nullptr);
  AnnotatedRelation total = marginalize(abs, abs.schema());
  if (total.row_count() != 1) {
    out.fail("no aggregate");
    return out;
  }
  auto got = total.value(0).cov_payload();
  std::vector<double> expect(1 + d3 + d3 * d3, 0.0);
  for (auto& r : joined) {
    expect[0] += 1.0;
    for (uint32_t i = 0; i < d3; ++i) expect[1 + i] += r[i];
    for (uint32_t i = 0; i < d3; ++i)
      for (uint32_t j = 0; j < d3; ++j)
        expect[1 + d3 + i * d3 + j] += r[i] * r[j];
  }
  for (size_t i = 0; i < got.size(); ++i) {
    double scale = std::max(1.0, std::abs(expect[i]));
    if (std::abs(got[i] - expect[i]) / scale >= 1e-9)
      out.fail("gram matrix diverged beyond 1e-9");
  }

  // Single-key augmentation with one new dimension, then retrain.
  SemiringSpec ring4 = SemiringSpec::covariance(4);
  std::vector<size_t> dim_map{0, 1, 2};
  for (RelationId r = 0; r < jt.store().relation_count(); ++r)
    jt.store().replace(r, 0,
                       embed_covariance(jt.store().at(r, 0), ring4, dim_map));
  std::vector<DirectedEdge> edges;
  for (auto& [e, m] : jt.cache()) edges.push_back(e);
  for (auto& e : edges) {
    Message* m = jt.find_message(e.src, e.dst);
    if (m->payload)
      m->payload = std::make_shared<const AnnotatedRelation>(
          embed_covariance(*m->payload, ring4, dim_map));
  }
  RelationBuilder nb(Schema::of({2}), ring4);
  for (Code c = 0; c < 4; ++c) {
    std::vector<double> vec(4, 0.0);
    vec[3] = double(int(rng() % 21) - 10) / 3.0;
    nb.add(std::vector<Code>{c}, ring4.lift(vec));
  }
  MessageStats aug_stats;
  BagId fresh = augment(jt, h, nb.finish(), Schema::of({2}), cfg, &aug_stats);
  if (aug_stats.messages_computed != 1)
    out.fail("single-key augmentation computed more than one message");

  size_t fdims[] = {0, 1, 3};
  LinRegModel factorized =
      train_linreg(jt, h, fresh, fdims, 2, 0.05, cfg, nullptr);

  JunctionHypertree scratch = default_jt([&] {
    RelationStore s2;
    for (RelationId r = 0; r < jt.store().relation_count(); ++r)
      s2.add(jt.store().at(r, 0));
    return s2;
  }());
  CalibratedHandle hs = calibrate_total(scratch, cfg);
  LinRegModel direct =
      train_linreg(scratch, hs, kNoBag, fdims, 2, 0.05, cfg, nullptr);
  for (size_t i = 0; i < factorized.weights.size(); ++i) {
    double scale = std::max(1.0, std::abs(direct.weights[i]));
    if (std::abs(factorized.weights[i] - direct.weights[i]) / scale >= 1e-9)
      out.fail("retrained weights diverged beyond 1e-9");
  }
  if (std::abs(factorized.intercept - direct.intercept) /
          std::max(1.0, std::abs(direct.intercept)) >=
      1e-9)
    out.fail("retrained intercept diverged beyond 1e-9");
  std::ostringstream os;
  os << out.detail << (out.detail.empty() ? "" : "; ") << joined.size()
     << " joined rows";
  out.detail = os.str();
  return out;
}

// 10. Semi-ring laws, 1000+ randomized cases per law and instance.
Outcome criterion10() {
  Outcome out;
  auto check_instance = [&](const SemiringSpec& ring, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto random_value = [&]() {
      if (ring.id() == SemiringId::covariance) {
        std::vector<double> x(ring.dim());
        SemiringValue acc = ring.zero();
        int terms = 1 + int(rng() % 3);
        for (int t = 0; t < terms; ++t) {
          for (auto& v : x) v = double(int(rng() % 21) - 10);
          acc = ring.add(acc, ring.lift(x));
        }
        return acc;
      }
      int64_t v = int64_t(rng() % 101);
      if (ring.has_additive_inverse()) v -= 50;
      return SemiringValue::count(v);
    };
    for (int i = 0; i < 1000; ++i) {
      SemiringValue a = random_value();
      SemiringValue b = random_value();
      SemiringValue c = random_value();
      bool ok = ring.add(a, b) == ring.add(b, a) &&
                ring.mul(a, b) == ring.mul(b, a) &&
                ring.add(ring.add(a, b), c) == ring.add(a, ring.add(b, c)) &&
                ring.mul(ring.mul(a, b), c) == ring.mul(a, ring.mul(b, c)) &&
                ring.add(a, ring.zero()) == a && ring.mul(a, ring.one()) == a &&
                ring.is_zero(ring.mul(a, ring.zero())) &&
                ring.mul(a, ring.add(b, c)) ==
                    ring.add(ring.mul(a, b), ring.mul(a, c));
      if (ring.has_additive_inverse())
        ok = ok && ring.is_zero(ring.add(a, ring.negate(a)));
      if (!ok) {
        out.fail("law violation in " + std::string(ring.name()));
        return;
      }
    }
  };
  check_instance(SemiringSpec::nat_count(), 101);
  check_instance(SemiringSpec::int_count(), 102);
  for (uint32_t d = 1; d <= 3 && out.pass; ++d)
    check_instance(SemiringSpec::covariance(d), 200 + d);
  return out;
}

struct Criterion {
  const char* name;
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"1. oracle equivalence on 200 random databases", criterion1},
      {"2. calibration marginals and 2(|bags|-1) message bound", criterion2},
      {"3. traversal-order and root independence", criterion3},
      {"4. delta reuse bounds and zero-message interventions", criterion4},
      {"5. chain benchmark compression ratio", criterion5},
      {"6. eager/lazy/rebuild maintenance equivalence", criterion6},
      {"7. minimum steiner tree dp vs exhaustive search", criterion7},
      {"8. olap cuboids and monotone pivot choice", criterion8},
      {"9. factorized linear regression parity", criterion9},
      {"10. semi-ring law suite", criterion10},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %s%s%s\n", out.pass ? "PASS" : "FAIL", c.name,
                out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
