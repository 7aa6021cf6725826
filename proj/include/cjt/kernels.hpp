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

#ifndef CJT_KERNELS_HPP
#define CJT_KERNELS_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cjt/semiring.hpp"

namespace cjt {

/// Single-attribute comparison against an encoded constant.
enum class Cmp : uint8_t { eq, ne, lt, le, gt, ge };

bool cmp_eval(Cmp c, uint32_t lhs, uint32_t rhs);

namespace kernels {

/*
 * Row kernels over flat row-major code arrays (stride = arity). Each kernel
 * has a serial reference implementation and an OpenMP variant. Both produce
 * bit-identical results: parallel folds partition output keys by hash so the
 * per-key accumulation order equals the serial input order, which keeps
 * floating-point payloads deterministic.
 */

struct Policy {
  bool parallel = true;
  /// Inputs below this row count always take the serial path.
  size_t min_rows = 1u << 14;
};

Policy policy();
void set_policy(Policy p);

/// Row indices sorted lexicographically by the projected columns; ties break
/// by row index, so the order is total and unique.
std::vector<uint32_t> sort_rows_serial(const uint32_t* flat, size_t arity,
                                       size_t n, std::span<const int> cols);
std::vector<uint32_t> sort_rows_parallel(const uint32_t* flat, size_t arity,
                                         size_t n, std::span<const int> cols);
std::vector<uint32_t> sort_rows(const uint32_t* flat, size_t arity, size_t n,
                                std::span<const int> cols);

/// Group-and-fold: sums values per distinct projected key. Output keys are
/// sorted and unique; groups folding to zero are dropped. Per-key fold order
/// is the input row order.
struct Grouped {
  size_t key_arity = 0;
  std::vector<uint32_t> keys;  // flat, sorted
  std::vector<SemiringValue> values;
  size_t size() const { return values.size(); }
};

Grouped fold_groups_serial(const SemiringSpec& ring, const uint32_t* flat,
                           size_t arity, size_t n, std::span<const int> key_cols,
                           const SemiringValue* values);
Grouped fold_groups_parallel(const SemiringSpec& ring, const uint32_t* flat,
                             size_t arity, size_t n,
                             std::span<const int> key_cols,
                             const SemiringValue* values);
Grouped fold_groups(const SemiringSpec& ring, const uint32_t* flat, size_t arity,
                    size_t n, std::span<const int> key_cols,
                    const SemiringValue* values);

/// Indices of rows passing the comparison, ascending.
std::vector<uint32_t> filter_rows_serial(const uint32_t* flat, size_t arity,
                                         size_t n, int col, Cmp cmp,
                                         uint32_t constant);
std::vector<uint32_t> filter_rows_parallel(const uint32_t* flat, size_t arity,
                                           size_t n, int col, Cmp cmp,
                                           uint32_t constant);
std::vector<uint32_t> filter_rows(const uint32_t* flat, size_t arity, size_t n,
                                  int col, Cmp cmp, uint32_t constant);

/// Materializes join output rows for matched row pairs. out_cols maps each
/// output column to (side, column): side 0 reads the left row, side 1 the
/// right. Values multiply pairwise.
struct JoinEmit {
  std::vector<uint32_t> flat;
  std::vector<SemiringValue> values;
};

JoinEmit emit_join_serial(const SemiringSpec& ring,
                          std::span<const std::pair<uint32_t, uint32_t>> pairs,
                          const uint32_t* lflat, size_t larity,
                          const SemiringValue* lvals, const uint32_t* rflat,
                          size_t rarity, const SemiringValue* rvals,
                          std::span<const std::pair<int, int>> out_cols);
JoinEmit emit_join_parallel(const SemiringSpec& ring,
                            std::span<const std::pair<uint32_t, uint32_t>> pairs,
                            const uint32_t* lflat, size_t larity,
                            const SemiringValue* lvals, const uint32_t* rflat,
                            size_t rarity, const SemiringValue* rvals,
                            std::span<const std::pair<int, int>> out_cols);
JoinEmit emit_join(const SemiringSpec& ring,
                   std::span<const std::pair<uint32_t, uint32_t>> pairs,
                   const uint32_t* lflat, size_t larity,
                   const SemiringValue* lvals, const uint32_t* rflat,
                   size_t rarity, const SemiringValue* rvals,
                   std::span<const std::pair<int, int>> out_cols);

uint64_t hash_key(const uint32_t* flat, size_t arity,
                  std::span<const int> cols, uint32_t row);

namespace detail {
// Folds a key-sorted index sequence into unique groups (shared by both paths).
Grouped fold_sorted(const SemiringSpec& ring, const uint32_t* flat,
                    size_t arity, std::span<const int> key_cols,
                    const SemiringValue* values, std::span<const uint32_t> order);
}  // namespace detail

}  // namespace kernels
}  // namespace cjt

#endif
