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

#include <algorithm>
#include <numeric>

#include "cjt/kernels.hpp"

namespace cjt {

bool cmp_eval(Cmp c, uint32_t lhs, uint32_t rhs) {
  switch (c) {
    case Cmp::eq: return lhs == rhs;
    case Cmp::ne: return lhs != rhs;
    case Cmp::lt: return lhs < rhs;
    case Cmp::le: return lhs <= rhs;
    case Cmp::gt: return lhs > rhs;
    case Cmp::ge: return lhs >= rhs;
  }
  return false;
}

namespace kernels {

namespace {

// Lexicographic comparison of two rows on the projected columns.
inline int key_compare(const uint32_t* flat, size_t arity,
                       std::span<const int> cols, uint32_t a, uint32_t b) {
  const uint32_t* ra = flat + size_t(a) * arity;
  const uint32_t* rb = flat + size_t(b) * arity;
  for (int c : cols) {
    if (ra[c] != rb[c]) return ra[c] < rb[c] ? -1 : 1;
  }
  return 0;
}

}  // namespace

uint64_t hash_key(const uint32_t* flat, size_t arity, std::span<const int> cols,
                  uint32_t row) {
  // FNV-1a over the projected codes.
  uint64_t h = 1469598103934665603ull;
  const uint32_t* r = flat + size_t(row) * arity;
  for (int c : cols) {
    uint32_t v = r[c];
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::vector<uint32_t> sort_rows_serial(const uint32_t* flat, size_t arity,
                                       size_t n, std::span<const int> cols) {
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
    int c = key_compare(flat, arity, cols, a, b);
    return c != 0 ? c < 0 : a < b;
  });
  return idx;
}

namespace detail {

// Folds a key-sorted index sequence into unique groups. Fold order within a
// group follows the sequence, which callers arrange to be input-row order.
Grouped fold_sorted(const SemiringSpec& ring, const uint32_t* flat,
                    size_t arity, std::span<const int> key_cols,
                    const SemiringValue* values,
                    std::span<const uint32_t> order) {
  Grouped out;
  out.key_arity = key_cols.size();
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i + 1;
    while (j < order.size() &&
           key_compare(flat, arity, key_cols, order[i], order[j]) == 0)
      ++j;
    SemiringValue acc = values[order[i]];
    for (size_t k = i + 1; k < j; ++k) acc = ring.add(acc, values[order[k]]);
    if (!ring.is_zero(acc)) {
      const uint32_t* r = flat + size_t(order[i]) * arity;
      for (int c : key_cols) out.keys.push_back(r[c]);
      out.values.push_back(std::move(acc));
    }
    i = j;
  }
  return out;
}

}  // namespace detail

Grouped fold_groups_serial(const SemiringSpec& ring, const uint32_t* flat,
                           size_t arity, size_t n, std::span<const int> key_cols,
                           const SemiringValue* values) {
  if (n == 0) {
    Grouped g;
    g.key_arity = key_cols.size();
    return g;
  }
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  // Stable on row index so each group folds in input order.
  std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
    int c = key_compare(flat, arity, key_cols, a, b);
    return c != 0 ? c < 0 : a < b;
  });
  return detail::fold_sorted(ring, flat, arity, key_cols, values, idx);
}

std::vector<uint32_t> filter_rows_serial(const uint32_t* flat, size_t arity,
                                         size_t n, int col, Cmp cmp,
                                         uint32_t constant) {
  std::vector<uint32_t> kept;
  for (size_t i = 0; i < n; ++i) {
    if (cmp_eval(cmp, flat[i * arity + col], constant))
      kept.push_back(static_cast<uint32_t>(i));
  }
  return kept;
}

JoinEmit emit_join_serial(const SemiringSpec& ring,
                          std::span<const std::pair<uint32_t, uint32_t>> pairs,
                          const uint32_t* lflat, size_t larity,
                          const SemiringValue* lvals, const uint32_t* rflat,
                          size_t rarity, const SemiringValue* rvals,
                          std::span<const std::pair<int, int>> out_cols) {
  JoinEmit out;
  const size_t oarity = out_cols.size();
  out.flat.resize(pairs.size() * oarity);
  out.values.resize(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    const uint32_t* lrow = lflat + size_t(pairs[p].first) * larity;
    const uint32_t* rrow = rflat + size_t(pairs[p].second) * rarity;
    uint32_t* orow = out.flat.data() + p * oarity;
    for (size_t c = 0; c < oarity; ++c)
      orow[c] = out_cols[c].first == 0 ? lrow[out_cols[c].second]
                                       : rrow[out_cols[c].second];
    out.values[p] = ring.mul(lvals[pairs[p].first], rvals[pairs[p].second]);
  }
  return out;
}

}  // namespace kernels
}  // namespace cjt
