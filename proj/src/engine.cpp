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

#include "cjt/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace cjt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Numeric-aware value order used by ordered dictionaries.
bool value_less(const std::string& a, const std::string& b) {
  double x, y;
  if (parse_number(a, x) && parse_number(b, y)) {
    if (x != y) return x < y;
    return a < b;
  }
  return a < b;
}

std::map<std::string, std::string> parse_kv_args(const std::string& args) {
  std::map<std::string, std::string> out;
  std::istringstream is(args);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    require(eq != std::string::npos, "expected key=value argument: " + tok);
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

}  // namespace

Code Dictionary::encode(const std::string& v) const {
  auto it = codes.find(v);
  require(it != codes.end(), "value not in dictionary: " + v);
  return it->second;
}

Catalog Catalog::parse_json_text(const std::string& text) {
  json j = json::parse(text);
  Catalog cat;
  for (auto& jr : j.at("relations")) {
    RelationDecl d;
    d.name = jr.at("name").get<std::string>();
    d.csv_path = jr.value("csv", "");
    for (auto& a : jr.at("attributes")) d.attributes.push_back(a);
    if (jr.contains("ordered"))
      for (auto& a : jr["ordered"]) d.ordered.push_back(a);
    if (jr.contains("measures"))
      for (auto& a : jr["measures"]) d.measures.push_back(a);
    cat.relations.push_back(std::move(d));
  }
  if (!j.contains("jt") || (j["jt"].is_string() && j["jt"] == "auto")) {
    cat.jt.auto_build = true;
  } else {
    cat.jt.auto_build = false;
    json& jt = j["jt"];
    for (auto& jb : jt.at("bags")) {
      JtBagDecl b;
      for (auto& a : jb.at("attrs")) b.attrs.push_back(a);
      b.empty_bag = jb.value("empty", false);
      cat.jt.bags.push_back(std::move(b));
    }
    for (auto& je : jt.at("edges"))
      cat.jt.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
    if (jt.contains("mapping"))
      for (auto& [name, bag] : jt["mapping"].items())
        cat.jt.mapping[name] = bag.get<int>();
  }
  return cat;
}

Catalog Catalog::parse_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open catalog: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str());
}

EngineSession EngineSession::load(const std::string& catalog_path,
                                  SessionConfig cfg) {
  Catalog cat = Catalog::parse_file(catalog_path);
  return load_catalog(cat, fs::path(catalog_path).parent_path().string(), cfg);
}

EngineSession EngineSession::load_catalog(const Catalog& cat,
                                          const std::string& base_dir,
                                          SessionConfig cfg) {
  EngineSession s;
  s.cfg_ = cfg;

  // First pass: read the tables, intern attributes, note ordered flags.
  std::vector<CsvTable> tables;
  std::map<uint32_t, bool> ordered_flag;
  for (auto& decl : cat.relations) {
    require(!decl.attributes.empty(),
            "relation " + decl.name + " declares no attributes");
    fs::path p = decl.csv_path;
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    tables.push_back(read_csv(p.string()));
    for (auto& a : decl.attributes) {
      AttrId id = s.attrs_.intern(a);
      bool ord = std::find(decl.ordered.begin(), decl.ordered.end(), a) !=
                 decl.ordered.end();
      ordered_flag[id.v] = ordered_flag[id.v] || ord;
    }
  }
  s.dicts_.resize(s.attrs_.size());
  for (auto& [id, ord] : ordered_flag) s.dicts_[id].ordered = ord;

  // Ordered dictionaries need the full value set before assigning codes.
  std::map<uint32_t, std::vector<std::string>> ordered_values;
  for (size_t r = 0; r < cat.relations.size(); ++r) {
    for (auto& a : cat.relations[r].attributes) {
      AttrId id = s.attrs_.lookup(a);
      if (!s.dicts_[id.v].ordered) continue;
      int col = tables[r].column(a);
      require(col >= 0, "csv for " + cat.relations[r].name +
                            " is missing column " + a);
      for (auto& row : tables[r].rows) ordered_values[id.v].push_back(row[col]);
    }
  }
  for (auto& [id, vals] : ordered_values) {
    std::sort(vals.begin(), vals.end(), value_less);
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    Dictionary& d = s.dicts_[id];
    d.values = vals;
    for (size_t i = 0; i < vals.size(); ++i)
      d.codes[vals[i]] = static_cast<Code>(i);
  }

  // Second pass: encode rows, build the count relations and the store.
  RelationStore store;
  for (size_t r = 0; r < cat.relations.size(); ++r) {
    const RelationDecl& decl = cat.relations[r];
    const CsvTable& t = tables[r];
    RawRelation raw;
    raw.name = decl.name;
    std::vector<AttrId> ids;
    for (auto& a : decl.attributes) ids.push_back(s.attrs_.lookup(a));
    raw.schema = Schema(ids);
    require(raw.schema.arity() == ids.size(),
            "relation " + decl.name + " repeats an attribute");

    std::vector<int> attr_cols;
    for (AttrId id : raw.schema.attrs()) {
      const std::string& name = s.attrs_.name(id);
      int col = t.column(name);
      require(col >= 0,
              "csv for " + decl.name + " is missing column " + name);
      attr_cols.push_back(col);
    }
    int count_col = t.column("__count");
    std::vector<int> measure_cols;
    for (auto& mname : decl.measures) {
      int col = t.column(mname);
      require(col >= 0,
              "csv for " + decl.name + " is missing column " + mname);
      measure_cols.push_back(col);
      raw.measure_names.push_back(decl.name + "." + mname);
      raw.measure_cols.emplace_back();
    }

    for (auto& row : t.rows) {
      for (size_t c = 0; c < attr_cols.size(); ++c) {
        AttrId id = raw.schema.at(c);
        Dictionary& d = s.dicts_[id.v];
        const std::string& v = row[attr_cols[c]];
        auto it = d.codes.find(v);
        Code code;
        if (it != d.codes.end()) {
          code = it->second;
        } else {
          require(!d.ordered, "unseen value for ordered attribute " +
                                  s.attrs_.name(id) + ": " + v);
          code = static_cast<Code>(d.values.size());
          d.values.push_back(v);
          d.codes[v] = code;
        }
        raw.rows.push_back(code);
      }
      int64_t cnt = 1;
      if (count_col >= 0) cnt = std::stoll(row[count_col]);
      raw.counts.push_back(cnt);
      for (size_t m = 0; m < measure_cols.size(); ++m) {
        double x;
        require(parse_number(row[measure_cols[m]], x),
                "measure " + raw.measure_names[m] + " is not numeric");
        raw.measure_cols[m].push_back(x);
      }
    }

    SemiringSpec ring = SemiringSpec::nat_count();
    RelationBuilder b(raw.schema, ring);
    b.reserve(raw.raw_count());
    const size_t arity = raw.schema.arity();
    for (size_t i = 0; i < raw.raw_count(); ++i)
      b.add({raw.rows.data() + i * arity, arity},
            SemiringValue::count(raw.counts[i]));
    RelationId id = store.add(b.finish());
    require(id == r, "relation id mismatch");
    s.rel_by_name_[decl.name] = id;
    s.raw_.push_back(std::move(raw));
  }

  // Tree: automatic (one bag per relation) or from the declaration.
  if (cat.jt.auto_build) {
    s.jt_ = default_jt(std::move(store));
  } else {
    JunctionHypertree jt(std::move(store));
    for (auto& bd : cat.jt.bags) {
      std::vector<AttrId> ids;
      for (auto& a : bd.attrs) ids.push_back(s.attrs_.lookup(a));
      jt.add_bag(Schema(ids), bd.empty_bag);
    }
    for (auto [a, b] : cat.jt.edges)
      jt.add_edge(static_cast<BagId>(a), static_cast<BagId>(b));
    for (auto& [name, bag] : cat.jt.mapping) {
      auto it = s.rel_by_name_.find(name);
      require(it != s.rel_by_name_.end(), "mapping names unknown relation " + name);
      jt.set_mapping(it->second, static_cast<BagId>(bag));
    }
    auto violations = jt.validate();
    require(violations.empty(),
            "declared tree is invalid: " + violations_to_string(violations));
    s.jt_ = std::move(jt);
  }
  return s;
}

RelationId EngineSession::relation_id(const std::string& name) const {
  auto it = rel_by_name_.find(name);
  require(it != rel_by_name_.end(), "unknown relation: " + name);
  return it->second;
}

const std::string& EngineSession::relation_name(RelationId r) const {
  return raw_.at(r).name;
}

Predicate EngineSession::parse_predicate(const std::string& text) const {
  static const std::pair<const char*, Cmp> ops[] = {
      {"<=", Cmp::le}, {">=", Cmp::ge}, {"!=", Cmp::ne},
      {"=", Cmp::eq},  {"<", Cmp::lt},  {">", Cmp::gt}};
  for (auto& [tok, cmp] : ops) {
    auto pos = text.find(tok);
    if (pos == std::string::npos) continue;
    std::string attr = trim(text.substr(0, pos));
    std::string value = trim(text.substr(pos + std::strlen(tok)));
    require(!attr.empty() && !value.empty(), "bad predicate: " + text);
    AttrId id = attrs_.lookup(attr);
    require(!attrs_.has(value),
            "multi-attribute predicates are unsupported; group by " + attr +
                " and " + value + " and filter the grouped result");
    const Dictionary& d = dicts_.at(id.v);
    bool range = cmp != Cmp::eq && cmp != Cmp::ne;
    if (range)
      require(d.ordered, "range predicate on unordered attribute " + attr +
                             " (declare it ordered in the catalog)");
    Predicate p;
    p.attr = id;
    if (d.has(value)) {
      p.cmp = cmp;
      p.constant = d.encode(value);
      return p;
    }
    if (cmp == Cmp::eq) {  // matches nothing
      p.cmp = Cmp::lt;
      p.constant = 0;
      return p;
    }
    if (cmp == Cmp::ne) {  // matches everything
      p.cmp = Cmp::ge;
      p.constant = 0;
      return p;
    }
    // Absent constant on an ordered dictionary: compare against the first
    // larger value's code.
    auto it = std::lower_bound(d.values.begin(), d.values.end(), value,
                               value_less);
    Code lb = static_cast<Code>(it - d.values.begin());
    p.constant = lb;
    p.cmp = (cmp == Cmp::lt || cmp == Cmp::le) ? Cmp::lt : Cmp::ge;
    return p;
  }
  fail("no comparator in predicate: " + text);
}

QuerySpec EngineSession::parse_query_spec(const std::string& args) const {
  std::map<std::string, std::string> kv;
  std::string trimmed = trim(args);
  if (!trimmed.empty() && trimmed[0] == '@') {
    std::ifstream in(trimmed.substr(1));
    require(in.good(), "cannot open query spec: " + trimmed.substr(1));
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      require(eq != std::string::npos, "bad spec line: " + line);
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  } else {
    kv = parse_kv_args(args);
  }

  QuerySpec q;
  std::map<std::string, Version> versions;
  if (kv.count("version")) {
    for (auto& part : split(kv["version"], ';')) {
      auto colon = part.find(':');
      require(colon != std::string::npos, "bad version clause: " + part);
      versions[trim(part.substr(0, colon))] =
          static_cast<Version>(std::stoul(part.substr(colon + 1)));
    }
  }
  std::vector<std::string> from;
  if (kv.count("from") && !kv["from"].empty()) {
    from = split(kv["from"], ',');
  } else {
    for (auto& raw : raw_) from.push_back(raw.name);
  }
  for (auto& name : from) {
    RelationId r = relation_id(name);
    Version v = versions.count(name) ? versions[name] : jt_.store().latest(r);
    q.relations.emplace_back(r, v);
  }
  if (kv.count("group") && !kv["group"].empty()) {
    std::vector<AttrId> ids;
    for (auto& g : split(kv["group"], ',')) ids.push_back(attrs_.lookup(g));
    q.group_attrs = Schema(ids);
  }
  if (kv.count("where") && !kv["where"].empty()) {
    for (auto& ptext : split(kv["where"], ';'))
      q.predicates.push_back(parse_predicate(ptext));
  }
  return q;
}

QuerySpec EngineSession::default_pivot_query() const {
  QuerySpec q;
  for (RelationId r = 0; r < jt_.store().relation_count(); ++r)
    q.relations.emplace_back(r, jt_.store().latest(r));
  return q;
}

void EngineSession::calibrate_pivot(const QuerySpec& q, MessageStats* stats) {
  jt_.clear_messages();
  std::mt19937_64 rng(cfg_.seed);
  BagId root = static_cast<BagId>(rng() % jt_.bag_count());
  AnnotationPlacement placement =
      place_annotations(jt_, q, PlacementMode::reuse_priority, root, nullptr);
  MessageStats local;
  pivot_ = calibrate(jt_, std::move(placement), engine_config(), &local, root);
  if (stats) *stats += local;
}

AnnotatedRelation EngineSession::query(const QuerySpec& q, MessageStats* stats) {
  require(pivot_.has_value(), "calibrate a pivot before querying");
  return execute(jt_, *pivot_, q, engine_config(), stats);
}

void EngineSession::delta(const std::string& rel_name, const CsvTable& rows,
                          bool negate, MessageStats* stats) {
  require(pivot_.has_value(), "calibrate a pivot before applying deltas");
  RelationId rel = relation_id(rel_name);
  const AnnotatedRelation& base = jt_.store().at(rel, 0);

  std::vector<int> attr_cols;
  for (AttrId id : base.schema().attrs()) {
    int col = rows.column(attrs_.name(id));
    require(col >= 0, "delta csv is missing column " + attrs_.name(id));
    attr_cols.push_back(col);
  }
  int count_col = rows.column("__count");

  RelationBuilder b(base.schema(), base.ring());
  std::vector<Code> tuple(base.schema().arity());
  for (auto& row : rows.rows) {
    for (size_t c = 0; c < attr_cols.size(); ++c) {
      AttrId id = base.schema().at(c);
      Dictionary& d = dicts_[id.v];
      const std::string& v = row[attr_cols[c]];
      auto it = d.codes.find(v);
      if (it != d.codes.end()) {
        tuple[c] = it->second;
      } else {
        require(!d.ordered, "unseen value for ordered attribute " +
                                attrs_.name(id) + ": " + v);
        tuple[c] = static_cast<Code>(d.values.size());
        d.values.push_back(v);
        d.codes[v] = tuple[c];
      }
    }
    int64_t cnt = count_col >= 0 ? std::stoll(row[count_col]) : 1;
    SemiringValue val = SemiringValue::count(cnt);
    if (negate) val = base.ring().negate(val);
    b.add(tuple, std::move(val));
  }
  DeltaRelation d{rel, b.finish()};
  apply_delta(jt_, *pivot_, d, cfg_.mode, engine_config(), stats);
  twin_.reset();  // rebuilt on the next training run
  cube_.reset();
}

void EngineSession::build_cube_index(const Schema& dims, uint32_t k,
                                     MessageStats* stats) {
  cube_ = build_cube(jt_, dims, k, engine_config(), stats);
}

AnnotatedRelation EngineSession::olap(const Schema& group_attrs,
                                      const std::vector<Predicate>& preds,
                                      MessageStats* stats) {
  require(cube_.has_value(), "build a cube before olap queries");
  return answer_olap(*cube_, group_attrs, preds, engine_config(), stats);
}

void EngineSession::ensure_twin(MessageStats* stats) {
  if (twin_.has_value()) return;
  CovTwin twin;
  for (auto& raw : raw_)
    for (auto& m : raw.measure_names) twin.dims.push_back(m);
  require(!twin.dims.empty(), "no measures declared; nothing to train on");
  twin.ring = SemiringSpec::covariance(static_cast<uint32_t>(twin.dims.size()));

  std::map<std::string, size_t> dim_index;
  for (size_t i = 0; i < twin.dims.size(); ++i) dim_index[twin.dims[i]] = i;

  RelationStore store;
  for (auto& raw : raw_) {
    RelationBuilder b(raw.schema, twin.ring);
    b.reserve(raw.raw_count());
    const size_t arity = raw.schema.arity();
    std::vector<double> vec(twin.dims.size());
    for (size_t i = 0; i < raw.raw_count(); ++i) {
      std::fill(vec.begin(), vec.end(), 0.0);
      for (size_t m = 0; m < raw.measure_names.size(); ++m)
        vec[dim_index[raw.measure_names[m]]] = raw.measure_cols[m][i];
      SemiringValue v = twin.ring.lift(vec);
      if (raw.counts[i] != 1) {
        // k identical rows: scale the lifted payload.
        auto p = v.cov_payload();
        std::vector<double> scaled(p.begin(), p.end());
        for (double& x : scaled) x *= double(raw.counts[i]);
        v = SemiringValue::cov(std::move(scaled));
      }
      b.add({raw.rows.data() + i * arity, arity}, std::move(v));
    }
    store.add(b.finish());
  }

  JunctionHypertree jt(std::move(store));
  for (const Bag& bag : jt_.bags()) jt.add_bag(bag.attrs, bag.empty_bag);
  for (auto [a, b] : jt_.edges()) jt.add_edge(a, b);
  for (auto& [r, b] : jt_.mapping()) jt.set_mapping(r, b);
  twin.jt = std::move(jt);

  QuerySpec q;
  for (RelationId r = 0; r < twin.jt.store().relation_count(); ++r)
    q.relations.emplace_back(r, 0);
  std::mt19937_64 rng(cfg_.seed);
  BagId root = static_cast<BagId>(rng() % twin.jt.bag_count());
  AnnotationPlacement placement = place_annotations(
      twin.jt, q, PlacementMode::reuse_priority, root, nullptr);
  twin.handle =
      calibrate(twin.jt, std::move(placement), engine_config(), stats, root);
  twin_ = std::move(twin);
}

BagId EngineSession::augment_relation(
    const std::string& name, const CsvTable& rows,
    const std::vector<std::string>& key_names,
    const std::vector<std::string>& measure_names, MessageStats* stats) {
  require(pivot_.has_value(), "calibrate a pivot before augmenting");
  require(!rel_by_name_.count(name), "relation already exists: " + name);

  RawRelation raw;
  raw.name = name;
  std::vector<AttrId> ids;
  std::vector<std::string> attr_names;
  for (auto& h : rows.header) {
    if (h == "__count") continue;
    if (std::find(measure_names.begin(), measure_names.end(), h) !=
        measure_names.end())
      continue;
    attr_names.push_back(h);
    ids.push_back(attrs_.intern(h));
  }
  if (dicts_.size() < attrs_.size()) dicts_.resize(attrs_.size());
  raw.schema = Schema(ids);
  for (auto& m : measure_names) {
    int col = rows.column(m);
    require(col >= 0, "augment csv is missing measure column " + m);
    raw.measure_names.push_back(name + "." + m);
    raw.measure_cols.emplace_back();
  }

  std::vector<int> attr_cols;
  for (AttrId id : raw.schema.attrs())
    attr_cols.push_back(rows.column(attrs_.name(id)));
  int count_col = rows.column("__count");
  for (auto& row : rows.rows) {
    for (size_t c = 0; c < attr_cols.size(); ++c) {
      AttrId id = raw.schema.at(c);
      Dictionary& d = dicts_[id.v];
      const std::string& v = row[attr_cols[c]];
      auto it = d.codes.find(v);
      if (it != d.codes.end()) {
        raw.rows.push_back(it->second);
      } else {
        require(!d.ordered, "unseen value for ordered attribute " +
                                attrs_.name(id) + ": " + v);
        Code code = static_cast<Code>(d.values.size());
        d.values.push_back(v);
        d.codes[v] = code;
        raw.rows.push_back(code);
      }
    }
    raw.counts.push_back(count_col >= 0 ? std::stoll(row[count_col]) : 1);
    for (size_t m = 0; m < measure_names.size(); ++m) {
      double x;
      require(parse_number(row[rows.column(measure_names[m])], x),
              "measure " + raw.measure_names[m] + " is not numeric");
      raw.measure_cols[m].push_back(x);
    }
  }

  std::vector<AttrId> key_ids;
  for (auto& k : key_names) key_ids.push_back(attrs_.lookup(k));
  Schema keys(key_ids);

  SemiringSpec ring = SemiringSpec::nat_count();
  RelationBuilder b(raw.schema, ring);
  const size_t arity = raw.schema.arity();
  for (size_t i = 0; i < raw.raw_count(); ++i)
    b.add({raw.rows.data() + i * arity, arity},
          SemiringValue::count(raw.counts[i]));

  BagId fresh =
      augment(jt_, *pivot_, b.finish(), keys, engine_config(), stats);
  rel_by_name_[name] = static_cast<RelationId>(raw_.size());
  raw_.push_back(std::move(raw));
  cube_.reset();

  if (twin_.has_value()) {
    // Extend the covariance instance with the new measures, re-dimension the
    // twin's stored values and cached messages, then augment it too.
    CovTwin& tw = *twin_;
    const RawRelation& nraw = raw_.back();
    std::vector<std::string> new_dims = tw.dims;
    for (auto& m : nraw.measure_names) new_dims.push_back(m);
    SemiringSpec new_ring =
        SemiringSpec::covariance(static_cast<uint32_t>(new_dims.size()));
    std::vector<size_t> dim_map(tw.dims.size());
    for (size_t i = 0; i < tw.dims.size(); ++i) dim_map[i] = i;

    if (new_ring.dim() != tw.ring.dim()) {
      for (RelationId r = 0; r < tw.jt.store().relation_count(); ++r) {
        for (Version v = 0; v <= tw.jt.store().latest(r); ++v)
          tw.jt.store().replace(
              r, v, embed_covariance(tw.jt.store().at(r, v), new_ring, dim_map));
      }
      // Re-dimension cached messages in place.
      std::vector<DirectedEdge> edges;
      for (auto& [e, m] : tw.jt.cache()) edges.push_back(e);
      for (const DirectedEdge& e : edges) {
        Message* m = tw.jt.find_message(e.src, e.dst);
        if (m->payload)
          m->payload = std::make_shared<const AnnotatedRelation>(
              embed_covariance(*m->payload, new_ring, dim_map));
      }
      tw.jt.clear_absorption_cache();
    }
    tw.ring = new_ring;
    tw.dims = std::move(new_dims);

    std::map<std::string, size_t> dim_index;
    for (size_t i = 0; i < tw.dims.size(); ++i) dim_index[tw.dims[i]] = i;
    RelationBuilder cb(nraw.schema, tw.ring);
    std::vector<double> vec(tw.dims.size());
    for (size_t i = 0; i < nraw.raw_count(); ++i) {
      std::fill(vec.begin(), vec.end(), 0.0);
      for (size_t m = 0; m < nraw.measure_names.size(); ++m)
        vec[dim_index.at(nraw.measure_names[m])] = nraw.measure_cols[m][i];
      SemiringValue v = tw.ring.lift(vec);
      if (nraw.counts[i] != 1) {
        auto p = v.cov_payload();
        std::vector<double> scaled(p.begin(), p.end());
        for (double& x : scaled) x *= double(nraw.counts[i]);
        v = SemiringValue::cov(std::move(scaled));
      }
      cb.add({nraw.rows.data() + i * arity, arity}, std::move(v));
    }
    tw.fresh_bag =
        augment(tw.jt, tw.handle, cb.finish(), keys, engine_config(), stats);
  }
  return fresh;
}

LinRegModel EngineSession::train(const std::vector<std::string>& features,
                                 const std::string& target, double lambda,
                                 MessageStats* stats) {
  ensure_twin(stats);
  CovTwin& tw = *twin_;
  auto find_dim = [&](const std::string& name) -> size_t {
    size_t found = tw.dims.size();
    for (size_t i = 0; i < tw.dims.size(); ++i) {
      bool exact = tw.dims[i] == name;
      bool suffix = tw.dims[i].size() > name.size() &&
                    tw.dims[i].compare(tw.dims[i].size() - name.size() - 1,
                                       name.size() + 1, "." + name) == 0;
      if (exact || suffix) {
        require(found == tw.dims.size(), "ambiguous measure name: " + name);
        found = i;
      }
    }
    require(found < tw.dims.size(), "unknown measure: " + name);
    return found;
  };
  std::vector<size_t> fdims;
  for (auto& f : features) fdims.push_back(find_dim(f));
  size_t tdim = find_dim(target);
  BagId at = tw.fresh_bag != kNoBag ? tw.fresh_bag : tw.handle.root;
  return train_linreg(tw.jt, tw.handle, at, fdims, tdim, lambda,
                      engine_config(), stats);
}

double EngineSession::evaluate_r2(const std::vector<std::string>& features,
                                  const std::string& target,
                                  const LinRegModel& model) const {
  require(twin_.has_value(), "train a model before evaluating it");
  const CovTwin& tw = *twin_;
  std::map<std::string, size_t> dim_index;
  for (size_t i = 0; i < tw.dims.size(); ++i) dim_index[tw.dims[i]] = i;
  auto resolve = [&](const std::string& name) -> size_t {
    for (size_t i = 0; i < tw.dims.size(); ++i) {
      if (tw.dims[i] == name ||
          (tw.dims[i].size() > name.size() &&
           tw.dims[i].compare(tw.dims[i].size() - name.size() - 1,
                              name.size() + 1, "." + name) == 0))
        return i;
    }
    fail("unknown measure: " + name);
  };
  std::vector<size_t> fdims;
  for (auto& f : features) fdims.push_back(resolve(f));
  size_t tdim = resolve(target);

  // Materialize the join of the raw rows by nested recursion over attribute
  // assignments, weighting by the count columns.
  uint32_t max_attr = 0;
  for (auto& raw : raw_)
    for (AttrId a : raw.schema.attrs()) max_attr = std::max(max_attr, a.v + 1);
  constexpr Code kUnbound = 0xffffffffu;
  std::vector<Code> assignment(max_attr, kUnbound);
  std::vector<double> dims(tw.dims.size(), 0.0);

  double sum_w = 0, sum_y = 0, sum_yy = 0, sse = 0;
  std::function<void(size_t, double)> walk = [&](size_t idx, double weight) {
    if (idx == raw_.size()) {
      double pred = model.intercept;
      for (size_t i = 0; i < fdims.size(); ++i)
        pred += model.weights[i] * dims[fdims[i]];
      double y = dims[tdim];
      sum_w += weight;
      sum_y += weight * y;
      sum_yy += weight * y * y;
      sse += weight * (y - pred) * (y - pred);
      return;
    }
    const RawRelation& raw = raw_[idx];
    const size_t arity = raw.schema.arity();
    std::vector<uint8_t> bound(arity);
    for (size_t i = 0; i < raw.raw_count(); ++i) {
      bool ok = true;
      std::fill(bound.begin(), bound.end(), 0);
      for (size_t c = 0; c < arity; ++c) {
        Code& slot = assignment[raw.schema.at(c).v];
        Code v = raw.rows[i * arity + c];
        if (slot == kUnbound) {
          slot = v;
          bound[c] = 1;
        } else if (slot != v) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (size_t m = 0; m < raw.measure_names.size(); ++m)
          dims[dim_index.at(raw.measure_names[m])] = raw.measure_cols[m][i];
        walk(idx + 1, weight * double(raw.counts[i]));
        for (size_t m = 0; m < raw.measure_names.size(); ++m)
          dims[dim_index.at(raw.measure_names[m])] = 0.0;
      }
      for (size_t c = 0; c < arity; ++c)
        if (bound[c]) assignment[raw.schema.at(c).v] = kUnbound;
    }
  };
  walk(0, 1.0);

  require(sum_w > 0, "empty join; nothing to evaluate");
  double sst = sum_yy - sum_y * sum_y / sum_w;
  if (sst <= 0) return sse <= 1e-12 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

void EngineSession::export_snapshot(const std::string& dir) const {
  fs::create_directories(dir);
  json j;
  j["relations"] = json::array();
  for (RelationId r = 0; r < jt_.store().relation_count(); ++r) {
    const RawRelation& raw = raw_[r];
    json jr;
    jr["name"] = raw.name;
    jr["csv"] = raw.name + ".csv";
    json attrs = json::array();
    std::vector<std::string> ordered;
    for (AttrId id : raw.schema.attrs()) {
      attrs.push_back(attrs_.name(id));
      if (dicts_[id.v].ordered) ordered.push_back(attrs_.name(id));
    }
    jr["attributes"] = attrs;
    if (!ordered.empty()) jr["ordered"] = ordered;

    CsvTable t;
    const bool from_raw =
        jt_.store().latest(r) == 0 && !raw.measure_names.empty();
    for (AttrId id : raw.schema.attrs()) t.header.push_back(attrs_.name(id));
    if (from_raw) {
      std::vector<std::string> mnames;
      for (auto& m : raw.measure_names)
        mnames.push_back(m.substr(m.find('.') + 1));
      jr["measures"] = mnames;
      for (auto& m : mnames) t.header.push_back(m);
      t.header.push_back("__count");
      const size_t arity = raw.schema.arity();
      for (size_t i = 0; i < raw.raw_count(); ++i) {
        std::vector<std::string> row;
        for (size_t c = 0; c < arity; ++c)
          row.push_back(dicts_[raw.schema.at(c).v].decode(
              raw.rows[i * arity + c]));
        for (size_t m = 0; m < raw.measure_cols.size(); ++m) {
          std::ostringstream os;
          os.precision(17);  // lossless double round-trip
          os << raw.measure_cols[m][i];
          row.push_back(os.str());
        }
        row.push_back(std::to_string(raw.counts[i]));
        t.rows.push_back(std::move(row));
      }
    } else {
      t.header.push_back("__count");
      const AnnotatedRelation& rel =
          jt_.store().at(r, jt_.store().latest(r));
      for (size_t i = 0; i < rel.row_count(); ++i) {
        std::vector<std::string> row;
        auto tup = rel.tuple(i);
        for (size_t c = 0; c < rel.arity(); ++c)
          row.push_back(dicts_[rel.schema().at(c).v].decode(tup[c]));
        row.push_back(std::to_string(rel.value(i).count_value()));
        t.rows.push_back(std::move(row));
      }
    }
    write_csv((fs::path(dir) / (raw.name + ".csv")).string(), t);
    j["relations"].push_back(std::move(jr));
  }

  json jt;
  jt["bags"] = json::array();
  for (const Bag& b : jt_.bags()) {
    json jb;
    json attrs = json::array();
    for (AttrId a : b.attrs.attrs()) attrs.push_back(attrs_.name(a));
    jb["attrs"] = attrs;
    if (b.empty_bag) jb["empty"] = true;
    jt["bags"].push_back(std::move(jb));
  }
  jt["edges"] = json::array();
  for (auto [a, b] : jt_.edges()) jt["edges"].push_back({a, b});
  jt["mapping"] = json::object();
  for (auto& [r, b] : jt_.mapping()) jt["mapping"][raw_[r].name] = b;
  j["jt"] = std::move(jt);

  std::ofstream out(fs::path(dir) / "catalog.json");
  require(out.good(), "cannot write catalog to " + dir);
  out << j.dump(2) << "\n";
}

std::string EngineSession::format_relation(const AnnotatedRelation& rel) const {
  CsvTable t;
  for (AttrId a : rel.schema().attrs()) t.header.push_back(attrs_.name(a));
  const bool cov = rel.ring().id() == SemiringId::covariance;
  if (cov) {
    t.header.push_back("c");
    for (uint32_t i = 0; i < rel.ring().dim(); ++i)
      t.header.push_back("s" + std::to_string(i));
  } else {
    t.header.push_back("count");
  }
  for (size_t i = 0; i < rel.row_count(); ++i) {
    std::vector<std::string> row;
    auto tup = rel.tuple(i);
    for (size_t c = 0; c < rel.arity(); ++c)
      row.push_back(dicts_[rel.schema().at(c).v].decode(tup[c]));
    if (cov) {
      auto p = rel.value(i).cov_payload();
      for (uint32_t x = 0; x <= rel.ring().dim(); ++x) {
        std::ostringstream os;
        os << p[x];
        row.push_back(os.str());
      }
    } else {
      row.push_back(std::to_string(rel.value(i).count_value()));
    }
    t.rows.push_back(std::move(row));
  }
  return format_csv(t);
}

CommandResult EngineSession::run(const std::string& command_line) {
  auto t0 = std::chrono::steady_clock::now();
  CommandResult res;
  std::string line = trim(command_line);
  auto sp = line.find_first_of(" \t");
  std::string cmd = sp == std::string::npos ? line : line.substr(0, sp);
  std::string args = sp == std::string::npos ? "" : trim(line.substr(sp + 1));
  std::ostringstream out;

  if (cmd == "build-jt") {
    auto violations = jt_.validate();
    out << "bags=" << jt_.bag_count() << " edges=" << jt_.edges().size()
        << " valid=" << (violations.empty() ? "yes" : "no") << "\n";
    for (auto& v : violations) out << "violation: " << v.what << "\n";
  } else if (cmd == "calibrate") {
    QuerySpec q = args.empty() ? default_pivot_query() : parse_query_spec(args);
    calibrate_pivot(q, &res.stats);
    out << "calibrated: " << res.stats.messages_computed << " messages\n";
  } else if (cmd == "query") {
    QuerySpec q = args.empty() ? default_pivot_query() : parse_query_spec(args);
    AnnotatedRelation r = query(q, &res.stats);
    out << format_relation(r);
  } else if (cmd == "delta") {
    auto kv = parse_kv_args(args);
    require(kv.count("rel") && kv.count("csv"), "delta needs rel= and csv=");
    delta(kv["rel"], read_csv(kv["csv"]), kv.count("negate") && kv["negate"] == "1",
          &res.stats);
    out << "delta applied to " << kv["rel"] << "\n";
  } else if (cmd == "cube") {
    auto kv = parse_kv_args(args);
    require(kv.count("dims") && kv.count("k"), "cube needs dims= and k=");
    std::vector<AttrId> ids;
    for (auto& d : split(kv["dims"], ',')) ids.push_back(attrs_.lookup(d));
    build_cube_index(Schema(ids), std::stoul(kv["k"]), &res.stats);
    out << "cube built: " << cube_->pivots.size() << " pivots\n";
  } else if (cmd == "olap") {
    auto kv = parse_kv_args(args);
    std::vector<AttrId> ids;
    if (kv.count("group"))
      for (auto& g : split(kv["group"], ',')) ids.push_back(attrs_.lookup(g));
    std::vector<Predicate> preds;
    if (kv.count("where"))
      for (auto& p : split(kv["where"], ';')) preds.push_back(parse_predicate(p));
    AnnotatedRelation r = olap(Schema(ids), preds, &res.stats);
    out << format_relation(r);
  } else if (cmd == "augment") {
    auto kv = parse_kv_args(args);
    require(kv.count("name") && kv.count("csv") && kv.count("keys"),
            "augment needs name=, csv= and keys=");
    std::vector<std::string> measures;
    if (kv.count("measures")) measures = split(kv["measures"], ',');
    BagId b = augment_relation(kv["name"], read_csv(kv["csv"]),
                               split(kv["keys"], ','), measures, &res.stats);
    out << "augmented as bag " << b << "\n";
  } else if (cmd == "train") {
    auto kv = parse_kv_args(args);
    require(kv.count("features") && kv.count("target"),
            "train needs features= and target=");
    double lambda = kv.count("lambda") ? std::stod(kv["lambda"]) : 0.0;
    auto feats = split(kv["features"], ',');
    LinRegModel m = train(feats, kv["target"], lambda, &res.stats);
    out << "intercept," << m.intercept << "\n";
    for (size_t i = 0; i < m.weights.size(); ++i)
      out << feats[i] << "," << m.weights[i] << "\n";
    out << "r2," << evaluate_r2(feats, kv["target"], m) << "\n";
  } else if (cmd == "stats") {
    out << "messages_computed=" << totals_.messages_computed
        << " messages_reused=" << totals_.messages_reused
        << " messages_updated=" << totals_.messages_updated
        << " messages_invalidated=" << totals_.messages_invalidated
        << " tuples_processed=" << totals_.tuples_processed << "\n";
  } else if (cmd == "export") {
    auto kv = parse_kv_args(args);
    require(kv.count("dir"), "export needs dir=");
    export_snapshot(kv["dir"]);
    out << "exported to " << kv["dir"] << "\n";
  } else {
    fail("unknown command: " + cmd);
  }

  res.output = out.str();
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  res.stats.phase_seconds[cmd] = res.wall_seconds;
  totals_ += res.stats;
  return res;
}

RelationStore make_chain_store(int r, int f, int d) {
  require(r >= 2 && f >= 1 && d >= 1 && f <= d, "bad chain parameters");
  RelationStore store;
  SemiringSpec ring = SemiringSpec::nat_count();
  // r attributes A_0..A_{r-1}, one relation per adjacent pair; the full join
  // therefore has d * f^(r-1) rows.
  for (int i = 0; i + 1 < r; ++i) {
    Schema schema({AttrId{uint32_t(i)}, AttrId{uint32_t(i + 1)}});
    RelationBuilder b(schema, ring);
    b.reserve(size_t(d) * f);
    for (int n = 0; n < d * f; ++n) {
      Code row[2] = {Code(n / f), Code(n % d)};
      b.add(row, SemiringValue::count(1));
    }
    store.add(b.finish());
  }
  return store;
}

ChainBenchReport run_chain_bench(int r, int f, int d, uint64_t seed) {
  ChainBenchReport rep;
  rep.relations = r;
  rep.fanout = f;
  rep.domain = d;

  JunctionHypertree jt = default_jt(make_chain_store(r, f, d));
  EngineConfig cfg;
  QuerySpec q;
  for (RelationId i = 0; i < jt.store().relation_count(); ++i)
    q.relations.emplace_back(i, 0);

  std::mt19937_64 rng(seed);
  BagId root = static_cast<BagId>(rng() % jt.bag_count());
  AnnotationPlacement placement =
      place_annotations(jt, q, PlacementMode::reuse_priority, root, nullptr);

  auto t0 = std::chrono::steady_clock::now();
  CalibratedHandle handle =
      calibrate(jt, std::move(placement), cfg, &rep.stats, root);
  rep.calibrate_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  for (auto& [e, m] : jt.cache()) {
    if (!m.identity)
      rep.max_message_rows = std::max(rep.max_message_rows,
                                      m.payload->row_count());
  }

  t0 = std::chrono::steady_clock::now();
  AnnotatedRelation total = execute(jt, handle, q, cfg, &rep.stats);
  rep.pivot_query_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  rep.total_count =
      total.row_count() == 1 ? uint64_t(total.value(0).count_value()) : 0;
  return rep;
}

}  // namespace cjt
