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

#include "cjt/relation.hpp"

#include <algorithm>
#include <numeric>

namespace cjt {

std::optional<SemiringValue> AnnotatedRelation::find(
    std::span<const Code> row) const {
  const size_t a = arity();
  require(row.size() == a, "tuple arity mismatch");
  // Rows are sorted; binary search on the flat array.
  size_t lo = 0, hi = row_count();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    const Code* r = flat_.data() + mid * a;
    int c = 0;
    for (size_t i = 0; i < a; ++i) {
      if (r[i] != row[i]) {
        c = r[i] < row[i] ? -1 : 1;
        break;
      }
    }
    if (c == 0) return values_[mid];
    if (c < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (a == 0 && row_count() == 1) return values_[0];
  return std::nullopt;
}

SemiringValue AnnotatedRelation::total() const {
  SemiringValue acc = ring_.zero();
  for (const auto& v : values_) acc = ring_.add(acc, v);
  return acc;
}

void RelationBuilder::add(std::span<const Code> row, SemiringValue v) {
  require(row.size() == schema_.arity(), "tuple arity mismatch");
  flat_.insert(flat_.end(), row.begin(), row.end());
  values_.push_back(std::move(v));
}

void RelationBuilder::reserve(size_t rows) {
  flat_.reserve(rows * schema_.arity());
  values_.reserve(rows);
}

AnnotatedRelation RelationBuilder::finish() {
  AnnotatedRelation out(schema_, ring_);
  const size_t a = schema_.arity();
  const size_t n = values_.size();
  std::vector<int> all_cols(a);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  auto grouped = kernels::fold_groups(ring_, flat_.data(), a, n, all_cols,
                                      values_.data());
  out.flat_ = std::move(grouped.keys);
  out.values_ = std::move(grouped.values);
  flat_.clear();
  values_.clear();
  return out;
}

namespace {

AnnotatedRelation join_binary(const AnnotatedRelation& a,
                              const AnnotatedRelation& b) {
  require(a.ring() == b.ring(), "semi-ring mismatch in join");
  const Schema shared = schema_intersect(a.schema(), b.schema());
  const Schema out_schema = schema_union(a.schema(), b.schema());

  std::vector<int> akey, bkey;
  for (AttrId attr : shared.attrs()) {
    akey.push_back(a.schema().index_of(attr));
    bkey.push_back(b.schema().index_of(attr));
  }
  // Column copy plan: shared attrs read from the left side.
  std::vector<std::pair<int, int>> out_cols;
  for (AttrId attr : out_schema.attrs()) {
    int ia = a.schema().index_of(attr);
    if (ia >= 0)
      out_cols.emplace_back(0, ia);
    else
      out_cols.emplace_back(1, b.schema().index_of(attr));
  }

  auto aord = kernels::sort_rows(a.flat().data(), a.arity(), a.row_count(), akey);
  auto bord = kernels::sort_rows(b.flat().data(), b.arity(), b.row_count(), bkey);

  auto key_cmp = [&](uint32_t ra, uint32_t rb) {
    const Code* pa = a.flat().data() + size_t(ra) * a.arity();
    const Code* pb = b.flat().data() + size_t(rb) * b.arity();
    for (size_t i = 0; i < akey.size(); ++i) {
      if (pa[akey[i]] != pb[bkey[i]])
        return pa[akey[i]] < pb[bkey[i]] ? -1 : 1;
    }
    return 0;
  };

  // Sort-merge match: enumerate cross products of equal-key blocks.
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  size_t i = 0, j = 0;
  while (i < aord.size() && j < bord.size()) {
    int c = key_cmp(aord[i], bord[j]);
    if (c < 0) {
      ++i;
    } else if (c > 0) {
      ++j;
    } else {
      size_t i2 = i + 1;
      while (i2 < aord.size() && key_cmp(aord[i2], bord[j]) == 0) ++i2;
      size_t j2 = j + 1;
      while (j2 < bord.size() && key_cmp(aord[i], bord[j2]) == 0) ++j2;
      for (size_t x = i; x < i2; ++x)
        for (size_t y = j; y < j2; ++y) pairs.emplace_back(aord[x], bord[y]);
      i = i2;
      j = j2;
    }
  }

  auto emitted = kernels::emit_join(a.ring(), pairs, a.flat().data(), a.arity(),
                                    a.values().data(), b.flat().data(),
                                    b.arity(), b.values().data(), out_cols);

  RelationBuilder builder(out_schema, a.ring());
  builder.reserve(emitted.values.size());
  const size_t oarity = out_cols.size();
  for (size_t p = 0; p < emitted.values.size(); ++p) {
    builder.add({emitted.flat.data() + p * oarity, oarity},
                std::move(emitted.values[p]));
  }
  return builder.finish();
}

}  // namespace

AnnotatedRelation join(const AnnotatedRelation& a, const AnnotatedRelation& b) {
  return join_binary(a, b);
}

AnnotatedRelation join(std::span<const AnnotatedRelation* const> inputs) {
  require(!inputs.empty(), "join needs at least one input");
  // Left-deep, smallest cardinality first; ties break on schema so the
  // association is independent of the argument order.
  std::vector<const AnnotatedRelation*> order(inputs.begin(), inputs.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const AnnotatedRelation* x, const AnnotatedRelation* y) {
                     if (x->row_count() != y->row_count())
                       return x->row_count() < y->row_count();
                     return x->schema() < y->schema();
                   });
  AnnotatedRelation acc = *order[0];
  for (size_t k = 1; k < order.size(); ++k) acc = join_binary(acc, *order[k]);
  return acc;
}

AnnotatedRelation marginalize(const AnnotatedRelation& rel,
                              const Schema& out_attrs) {
  require(rel.schema().contains_all(out_attrs),
          "marginalize: attributes not in schema");
  if (out_attrs.empty()) return rel;
  const Schema keep = schema_minus(rel.schema(), out_attrs);
  std::vector<int> key_cols;
  for (AttrId a : keep.attrs()) key_cols.push_back(rel.schema().index_of(a));
  auto grouped =
      kernels::fold_groups(rel.ring(), rel.flat().data(), rel.arity(),
                           rel.row_count(), key_cols, rel.values().data());
  RelationBuilder builder(keep, rel.ring());
  // fold_groups output is already canonical; rebuild cheaply.
  const size_t ka = key_cols.size();
  builder.reserve(grouped.size());
  for (size_t g = 0; g < grouped.size(); ++g)
    builder.add({grouped.keys.data() + g * ka, ka}, std::move(grouped.values[g]));
  return builder.finish();
}

AnnotatedRelation select(const AnnotatedRelation& rel, const Predicate& pred) {
  int col = rel.schema().index_of(pred.attr);
  require(col >= 0, "select: attribute not in schema");
  auto kept = kernels::filter_rows(rel.flat().data(), rel.arity(),
                                   rel.row_count(), col, pred.cmp,
                                   pred.constant);
  RelationBuilder builder(rel.schema(), rel.ring());
  builder.reserve(kept.size());
  for (uint32_t i : kept) builder.add(rel.tuple(i), rel.value(i));
  return builder.finish();
}

AnnotatedRelation indicator_projection(const AnnotatedRelation& rel,
                                       const Schema& attrs) {
  const Schema keep = schema_intersect(rel.schema(), attrs);
  require(!keep.empty(), "indicator projection: empty attribute intersection");
  RelationBuilder builder(keep, rel.ring());
  std::vector<int> cols;
  for (AttrId a : keep.attrs()) cols.push_back(rel.schema().index_of(a));
  std::vector<Code> row(cols.size());
  builder.reserve(rel.row_count());
  const SemiringValue one = rel.ring().one();
  for (size_t i = 0; i < rel.row_count(); ++i) {
    auto t = rel.tuple(i);
    for (size_t c = 0; c < cols.size(); ++c) row[c] = t[cols[c]];
    builder.add(row, one);
  }
  // Duplicates folded to one, not summed: rebuild with constant annotations.
  AnnotatedRelation summed = builder.finish();
  RelationBuilder flat(keep, rel.ring());
  flat.reserve(summed.row_count());
  for (size_t i = 0; i < summed.row_count(); ++i) flat.add(summed.tuple(i), one);
  return flat.finish();
}

}  // namespace cjt
