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

#ifndef CJT_RELATION_HPP
#define CJT_RELATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cjt/kernels.hpp"
#include "cjt/schema.hpp"
#include "cjt/semiring.hpp"

namespace cjt {

/// Dictionary-encoded attribute value.
using Code = uint32_t;

/// Single-attribute predicate against an encoded constant. Range comparisons
/// are meaningful only when the attribute's dictionary preserves order; the
/// engine layer enforces that before building one.
struct Predicate {
  AttrId attr;
  Cmp cmp = Cmp::eq;
  Code constant = 0;

  friend bool operator==(const Predicate&, const Predicate&) = default;
  friend auto operator<=>(const Predicate&, const Predicate&) = default;
};

/*
 * A finite map from tuples to nonzero semi-ring annotations. Rows are stored
 * flat (row-major, stride = arity) in canonical lexicographic order, which
 * makes equality a plain component compare and keeps every derived relation
 * bit-deterministic regardless of how it was produced.
 */
class AnnotatedRelation {
 public:
  AnnotatedRelation() = default;
  AnnotatedRelation(Schema schema, SemiringSpec ring)
      : schema_(std::move(schema)), ring_(ring) {}

  const Schema& schema() const { return schema_; }
  const SemiringSpec& ring() const { return ring_; }
  size_t arity() const { return schema_.arity(); }
  size_t row_count() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const Code> tuple(size_t i) const {
    return {flat_.data() + i * arity(), arity()};
  }
  const SemiringValue& value(size_t i) const { return values_[i]; }
  const std::vector<Code>& flat() const { return flat_; }
  const std::vector<SemiringValue>& values() const { return values_; }

  std::optional<SemiringValue> find(std::span<const Code> row) const;

  /// Total annotation (semi-ring sum over all rows).
  SemiringValue total() const;

  friend bool operator==(const AnnotatedRelation& a,
                         const AnnotatedRelation& b) {
    return a.schema_ == b.schema_ && a.ring_ == b.ring_ && a.flat_ == b.flat_ &&
           a.values_ == b.values_;
  }

 private:
  friend class RelationBuilder;
  Schema schema_;
  SemiringSpec ring_;
  std::vector<Code> flat_;
  std::vector<SemiringValue> values_;
};

/// Accumulates rows (duplicates add) and produces a canonical relation.
class RelationBuilder {
 public:
  RelationBuilder(Schema schema, SemiringSpec ring)
      : schema_(std::move(schema)), ring_(ring) {}

  void add(std::span<const Code> row, SemiringValue v);
  void reserve(size_t rows);
  AnnotatedRelation finish();

 private:
  Schema schema_;
  SemiringSpec ring_;
  std::vector<Code> flat_;
  std::vector<SemiringValue> values_;
};

/// Natural join. Inputs must share a semi-ring; output schema is the union;
/// annotations multiply; zero results are dropped. Multiway joins run as a
/// left-deep sequence of binary joins ordered smallest-cardinality first.
AnnotatedRelation join(const AnnotatedRelation& a, const AnnotatedRelation& b);
AnnotatedRelation join(std::span<const AnnotatedRelation* const> inputs);

/// Sums out `out_attrs` (must be a subset of the schema).
AnnotatedRelation marginalize(const AnnotatedRelation& rel,
                              const Schema& out_attrs);

/// Keeps rows passing the predicate; annotations untouched.
AnnotatedRelation select(const AnnotatedRelation& rel, const Predicate& pred);

/// Distinct projection onto attrs ∩ schema with every row annotated one.
AnnotatedRelation indicator_projection(const AnnotatedRelation& rel,
                                       const Schema& attrs);

}  // namespace cjt

#endif
