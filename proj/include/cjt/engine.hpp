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

#ifndef CJT_ENGINE_HPP
#define CJT_ENGINE_HPP

#include <optional>
#include <string>

#include "cjt/analytics.hpp"
#include "cjt/csv.hpp"

namespace cjt {

struct RelationDecl {
  std::string name;
  std::string csv_path;
  std::vector<std::string> attributes;
  std::vector<std::string> ordered;   // attributes with order-preserving codes
  std::vector<std::string> measures;  // numeric payload columns (not joined)
};

struct JtBagDecl {
  std::vector<std::string> attrs;
  bool empty_bag = false;
};

struct JtDecl {
  bool auto_build = true;
  std::vector<JtBagDecl> bags;
  std::vector<std::pair<int, int>> edges;
  std::map<std::string, int> mapping;  // relation name -> bag index
};

/// Parsed catalog: relations, per-attribute flags, and the tree description
/// ("auto" builds one bag per relation via GYO reduction).
struct Catalog {
  std::vector<RelationDecl> relations;
  JtDecl jt;

  static Catalog parse_file(const std::string& path);
  static Catalog parse_json_text(const std::string& text);
};

/// Per-attribute dictionary: strings encoded as dense 32-bit codes. Ordered
/// dictionaries assign codes in sorted (numeric-aware) value order so range
/// predicates compare correctly on codes.
struct Dictionary {
  bool ordered = false;
  std::vector<std::string> values;  // code -> string
  std::unordered_map<std::string, Code> codes;

  Code encode(const std::string& v) const;
  bool has(const std::string& v) const { return codes.count(v) > 0; }
  const std::string& decode(Code c) const { return values.at(c); }
};

struct SessionConfig {
  MaintenanceMode mode = MaintenanceMode::eager;
  bool prune_dangling = false;
  bool absorption_cache = false;
  uint64_t seed = 42;
};

struct CommandResult {
  std::string output;
  MessageStats stats;
  double wall_seconds = 0;
};

/*
 * A loaded database plus its junction tree, pivot and derived structures.
 * Commands: build-jt, calibrate, query, delta, cube, olap, augment, train,
 * stats, export. Query specs are key=value clauses, inline or from a file:
 *   group = B, C
 *   from = R, S
 *   where = C = c1; B != x
 *   version = R:2
 */
class EngineSession {
 public:
  static EngineSession load(const std::string& catalog_path,
                            SessionConfig cfg = {});
  static EngineSession load_catalog(const Catalog& cat,
                                    const std::string& base_dir,
                                    SessionConfig cfg = {});

  CommandResult run(const std::string& command_line);

  // Structured surface (used by the command layer and tests).
  void calibrate_pivot(const QuerySpec& q, MessageStats* stats = nullptr);
  AnnotatedRelation query(const QuerySpec& q, MessageStats* stats);
  void delta(const std::string& rel_name, const CsvTable& rows, bool negate,
             MessageStats* stats);
  void build_cube_index(const Schema& dims, uint32_t k, MessageStats* stats);
  AnnotatedRelation olap(const Schema& group_attrs,
                         const std::vector<Predicate>& preds,
                         MessageStats* stats);
  BagId augment_relation(const std::string& name, const CsvTable& rows,
                         const std::vector<std::string>& key_names,
                         const std::vector<std::string>& measure_names,
                         MessageStats* stats);
  LinRegModel train(const std::vector<std::string>& features,
                    const std::string& target, double lambda,
                    MessageStats* stats);
  /// Coefficient of determination over the materialized join of the raw
  /// rows; desk-scale evaluation of a trained model.
  double evaluate_r2(const std::vector<std::string>& features,
                     const std::string& target, const LinRegModel& model) const;
  void export_snapshot(const std::string& dir) const;

  QuerySpec parse_query_spec(const std::string& args) const;
  Predicate parse_predicate(const std::string& text) const;
  std::string format_relation(const AnnotatedRelation& rel) const;

  JunctionHypertree& jt() { return jt_; }
  const JunctionHypertree& jt() const { return jt_; }
  CalibratedHandle* pivot() { return pivot_ ? &*pivot_ : nullptr; }
  const AttributeCatalog& attr_names() const { return attrs_; }
  AttrId attr_id(const std::string& name) const { return attrs_.lookup(name); }
  RelationId relation_id(const std::string& name) const;
  const std::string& relation_name(RelationId r) const;
  const Dictionary& dictionary(AttrId a) const { return dicts_.at(a.v); }
  const SessionConfig& config() const { return cfg_; }
  const MessageStats& totals() const { return totals_; }
  CubeIndex* cube() { return cube_ ? &*cube_ : nullptr; }

 private:
  EngineSession() = default;
  EngineConfig engine_config() const {
    return EngineConfig{cfg_.prune_dangling, cfg_.absorption_cache};
  }
  QuerySpec default_pivot_query() const;
  void ensure_twin(MessageStats* stats);

  // Raw rows as loaded: encoded attribute codes plus numeric measure columns.
  struct RawRelation {
    std::string name;
    Schema schema;
    std::vector<Code> rows;  // flat, arity stride
    std::vector<int64_t> counts;
    std::vector<std::string> measure_names;        // qualified "Rel.col"
    std::vector<std::vector<double>> measure_cols;  // one per measure
    size_t raw_count() const { return counts.size(); }
  };

  struct CovTwin {
    JunctionHypertree jt;
    CalibratedHandle handle;
    SemiringSpec ring;
    std::vector<std::string> dims;  // qualified measure names, global order
    BagId fresh_bag = kNoBag;       // absorption point after an augment
  };

  SessionConfig cfg_;
  AttributeCatalog attrs_;
  std::vector<Dictionary> dicts_;  // by AttrId
  std::vector<RawRelation> raw_;
  std::map<std::string, RelationId> rel_by_name_;
  JunctionHypertree jt_;
  std::optional<CalibratedHandle> pivot_;
  std::optional<CubeIndex> cube_;
  std::optional<CovTwin> twin_;
  MessageStats totals_;
};

/// Synthetic chain-schema generator: r relations R_i(A_i, A_{i+1}), d values
/// per attribute, fanout f in both directions; row n of a relation is
/// (n / f, n % d).
RelationStore make_chain_store(int r, int f, int d);

struct ChainBenchReport {
  int relations = 0;
  int fanout = 0;
  int domain = 0;
  uint64_t total_count = 0;
  size_t max_message_rows = 0;
  double calibrate_seconds = 0;
  double pivot_query_seconds = 0;
  MessageStats stats;
};

ChainBenchReport run_chain_bench(int r, int f, int d, uint64_t seed);

}  // namespace cjt

#endif
