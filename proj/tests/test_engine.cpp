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

#include <unistd.h>

#include <filesystem>
#include <cmath>
#include <fstream>

#include "cjt/engine.hpp"
#include "doctest.h"
#include "support/oracle.hpp"

using namespace cjt;
using namespace cjt::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cjt_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

// The worked three-relation instance as CSV files.
std::string write_fig_catalog(const TempDir& dir) {
  dir.file("r.csv", "A,B\na1,b1\na1,b1\na1,b2\na1,b2\na1,b2\n");
  dir.file("s.csv", "A,C,__count\na1,c1,3\na1,c2,5\n");
  dir.file("t.csv", "A,D\na1,d1\n");
  return dir.file("catalog.json", R"({
    "relations": [
      {"name": "R", "csv": "r.csv", "attributes": ["A", "B"]},
      {"name": "S", "csv": "s.csv", "attributes": ["A", "C"]},
      {"name": "T", "csv": "t.csv", "attributes": ["A", "D"]}
    ],
    "jt": "auto"
  })");
}

}  // namespace

TEST_CASE("loading builds dictionaries and accumulates duplicate rows") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);
  CHECK(s.jt().store().relation_count() == 3);

  // Duplicate rows in r.csv fold into counts 2 and 3.
  const AnnotatedRelation& r = s.jt().store().at(s.relation_id("R"), 0);
  CHECK(r.row_count() == 2);
  int64_t total = 0;
  for (size_t i = 0; i < r.row_count(); ++i) total += r.value(i).count_value();
  CHECK(total == 5);

  auto res = s.run("calibrate");
  CHECK(res.output.find("calibrated") != std::string::npos);
  auto q = s.run("query");
  CHECK(q.output.find("40") != std::string::npos);
}

TEST_CASE("a missing column is reported by name") {
  TempDir dir;
  dir.file("r.csv", "A,WRONG\na1,b1\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [{"name": "R", "csv": "r.csv", "attributes": ["A", "B"]}],
    "jt": "auto"
  })");
  CHECK_THROWS_WITH_AS(EngineSession::load(cat), doctest::Contains("B"), Error);
}

TEST_CASE("query specs parse groups, predicates, sources and versions") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);

  QuerySpec q = s.parse_query_spec("group=B where=C=c1 from=R,S,T");
  CHECK(q.group_attrs == Schema({std::vector<AttrId>{s.attr_id("B")}}));
  REQUIRE(q.predicates.size() == 1);
  CHECK(q.predicates[0].attr == s.attr_id("C"));
  CHECK(q.relations.size() == 3);

  QuerySpec sub = s.parse_query_spec("from=R,S");
  CHECK(sub.relations.size() == 2);

  std::string spec_file = dir.file("q.spec",
                                   "group = B\nwhere = C = c1\nfrom = R, S, T\n");
  QuerySpec from_file = s.parse_query_spec("@" + spec_file);
  CHECK(from_file.group_attrs == q.group_attrs);
  REQUIRE(from_file.predicates.size() == 1);
  CHECK(from_file.predicates[0] == q.predicates[0]);
}

TEST_CASE("range predicates need an ordered dictionary") {
  TempDir dir;
  dir.file("r.csv", "A,N\na1,1\na1,3\na2,7\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [{"name": "R", "csv": "r.csv",
                   "attributes": ["A", "N"], "ordered": ["N"]}],
    "jt": "auto"
  })");
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");

  // Constants absent from the dictionary still compare correctly.
  auto res = s.query(s.parse_query_spec("where=N<5"), nullptr);
  CHECK(res.value(0).count_value() == 2);
  res = s.query(s.parse_query_spec("where=N<=3"), nullptr);
  CHECK(res.value(0).count_value() == 2);
  res = s.query(s.parse_query_spec("where=N>2"), nullptr);
  CHECK(res.value(0).count_value() == 2);
  res = s.query(s.parse_query_spec("where=N>=7"), nullptr);
  CHECK(res.value(0).count_value() == 1);

  CHECK_THROWS_WITH_AS(s.parse_predicate("A<a2"), doctest::Contains("ordered"),
                       Error);

  // Unknown equality constants match nothing; inequality matches everything.
  auto none = s.query(s.parse_query_spec("where=A=zz"), nullptr);
  CHECK(none.row_count() == 0);
  auto all = s.query(s.parse_query_spec("where=A!=zz"), nullptr);
  CHECK(all.value(0).count_value() == 3);
}

TEST_CASE("delta then pivot re-answer computes no messages") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  SessionConfig cfg;
  cfg.mode = MaintenanceMode::lazy;
  EngineSession s = EngineSession::load(cat, cfg);
  s.run("calibrate");

  dir.file("delta.csv", "A,B\na1,b3\n");
  MessageStats dstats;
  s.delta("R", read_csv((dir.path / "delta.csv").string()), false, &dstats);

  MessageStats qstats;
  AnnotatedRelation res = s.query(s.parse_query_spec(""), &qstats);
  CHECK(qstats.messages_computed == 0);
  REQUIRE(res.row_count() == 1);
  CHECK(res.value(0).count_value() == 48);  // (2+3+1) * 8 * 1
}

TEST_CASE("export and reload answer identically") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");
  std::string q1 = s.run("query group=B").output;

  TempDir out;
  s.export_snapshot(out.path.string());
  EngineSession s2 =
      EngineSession::load((out.path / "catalog.json").string());
  s2.run("calibrate");
  CHECK(s2.run("query group=B").output == q1);
}

TEST_CASE("the command surface covers the workflow") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);

  CHECK(s.run("build-jt").output.find("valid=yes") != std::string::npos);
  s.run("calibrate");
  CHECK(s.run("query group=B where=C=c1").output.find("b1") !=
        std::string::npos);
  CHECK(s.run("cube dims=B,C k=1").output.find("2 pivots") !=
        std::string::npos);
  CHECK(s.run("olap group=B,C").output.find("b1") != std::string::npos);

  dir.file("de.csv", "D,E,v\nd1,e1,1.5\nd1,e2,2.5\n");
  CHECK(s.run("augment name=DE csv=" + (dir.path / "de.csv").string() +
              " keys=D measures=v")
            .output.find("augmented") != std::string::npos);
  auto train = s.run("train features=v target=v lambda=0.5");
  CHECK(train.output.find("intercept") != std::string::npos);
  CHECK(s.run("stats").output.find("messages_computed") != std::string::npos);
  CHECK_THROWS_AS(s.run("nonsense"), Error);
}

TEST_CASE("train matches a direct least squares fit through the session") {
  TempDir dir;
  dir.file("data.csv", "K,x,y\nk1,1,3\nk2,2,5\nk3,3,7\nk4,4,9\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [{"name": "D", "csv": "data.csv",
                   "attributes": ["K"], "measures": ["x", "y"]}],
    "jt": "auto"
  })");
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");
  LinRegModel m = s.train({"x"}, "y", 0.0, nullptr);
  CHECK(std::abs(m.weights[0] - 2.0) < 1e-9);
  CHECK(std::abs(m.intercept - 1.0) < 1e-9);
}

TEST_CASE("augmenting a trained session extends the model dimensions") {
  TempDir dir;
  dir.file("sales.csv", "S,K,x\ns1,k1,1\ns1,k2,2\ns2,k1,3\ns2,k2,4\n");
  dir.file("keys.csv", "K,y\nk1,10\nk2,20\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [
      {"name": "Sales", "csv": "sales.csv",
       "attributes": ["S", "K"], "measures": ["x"]},
      {"name": "Keys", "csv": "keys.csv",
       "attributes": ["K"], "measures": ["y"]}
    ],
    "jt": "auto"
  })");
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");
  LinRegModel before = s.train({"x"}, "y", 0.1, nullptr);

  dir.file("aug.csv", "S,w\ns1,5\ns2,7\n");
  MessageStats aug_stats;
  s.augment_relation("Aug", read_csv((dir.path / "aug.csv").string()), {"S"},
                     {"w"}, &aug_stats);
  LinRegModel after = s.train({"x", "w"}, "y", 0.1, nullptr);

  // A fresh session over the same three relations trains identically.
  TempDir snap;
  s.export_snapshot(snap.path.string());
  EngineSession fresh =
      EngineSession::load((snap.path / "catalog.json").string());
  fresh.run("calibrate");
  LinRegModel direct = fresh.train({"x", "w"}, "y", 0.1, nullptr);
  REQUIRE(after.weights.size() == direct.weights.size());
  for (size_t i = 0; i < after.weights.size(); ++i)
    CHECK(std::abs(after.weights[i] - direct.weights[i]) < 1e-9);
  CHECK(std::abs(after.intercept - direct.intercept) < 1e-9);
  CHECK(before.weights.size() == 1);
}

TEST_CASE("chain generator matches the documented shape") {
  // r attributes give r-1 relations of d*f distinct unit rows each.
  RelationStore store = make_chain_store(3, 2, 4);
  CHECK(store.relation_count() == 2);
  for (RelationId r = 0; r < 2; ++r) {
    const AnnotatedRelation& rel = store.at(r, 0);
    CHECK(rel.row_count() == 8);
    for (size_t i = 0; i < rel.row_count(); ++i)
      CHECK(rel.value(i).count_value() == 1);
  }

  ChainBenchReport rep = run_chain_bench(4, 2, 8, 42);
  CHECK(rep.total_count == 8ull * 2 * 2 * 2);  // d * f^(r-1)
  CHECK(rep.max_message_rows <= 8);
}

TEST_CASE("r2 is one on exactly linear data") {
  TempDir dir;
  dir.file("data.csv", "K,x,y\nk1,1,3\nk2,2,5\nk3,3,7\nk4,4,9\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [{"name": "D", "csv": "data.csv",
                   "attributes": ["K"], "measures": ["x", "y"]}],
    "jt": "auto"
  })");
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");
  LinRegModel m = s.train({"x"}, "y", 0.0, nullptr);
  CHECK(s.evaluate_r2({"x"}, "y", m) == doctest::Approx(1.0).epsilon(1e-9));
  auto out = s.run("train features=x target=y lambda=0");
  CHECK(out.output.find("r2,") != std::string::npos);
}

TEST_CASE("multi-attribute predicates point at the rewrite") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);
  CHECK_THROWS_WITH_AS(s.parse_predicate("B = C"),
                       doctest::Contains("group by"), Error);
}

TEST_CASE("an explicit tree declaration with an empty bag loads and answers") {
  TempDir dir;
  dir.file("r.csv", "A,B\na1,b1\na1,b1\na1,b2\na1,b2\na1,b2\n");
  dir.file("s.csv", "A,C,__count\na1,c1,3\na1,c2,5\n");
  dir.file("t.csv", "A,D\na1,d1\n");
  std::string cat = dir.file("catalog.json", R"({
    "relations": [
      {"name": "R", "csv": "r.csv", "attributes": ["A", "B"]},
      {"name": "S", "csv": "s.csv", "attributes": ["A", "C"]},
      {"name": "T", "csv": "t.csv", "attributes": ["A", "D"]}
    ],
    "jt": {
      "bags": [{"attrs": ["A", "B"]}, {"attrs": ["A", "C"]},
               {"attrs": ["A", "D"]}, {"attrs": ["A"], "empty": true}],
      "edges": [[0, 3], [3, 1], [1, 2]],
      "mapping": {"R": 0, "S": 1, "T": 2}
    }
  })");
  EngineSession s = EngineSession::load(cat);
  CHECK(s.jt().bag_count() == 4);
  CHECK(s.jt().bag(3).empty_bag);
  s.run("calibrate");
  auto res = s.run("query");
  CHECK(res.output.find("40") != std::string::npos);
  auto grouped = s.run("query group=B where=C=c1");
  CHECK(grouped.output.find("b1,6") != std::string::npos);
  CHECK(grouped.output.find("b2,9") != std::string::npos);
}

TEST_CASE("queries over a subset of the relations exclude the rest") {
  TempDir dir;
  std::string cat = write_fig_catalog(dir);
  EngineSession s = EngineSession::load(cat);
  s.run("calibrate");
  AnnotatedRelation only_r = s.query(s.parse_query_spec("from=R"), nullptr);
  REQUIRE(only_r.row_count() == 1);
  CHECK(only_r.value(0).count_value() == 5);
  AnnotatedRelation rs = s.query(s.parse_query_spec("from=R,S group=C"), nullptr);
  REQUIRE(rs.row_count() == 2);  // per-C counts of R join S
}
