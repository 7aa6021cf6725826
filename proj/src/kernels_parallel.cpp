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
#include <atomic>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cjt/kernels.hpp"

namespace cjt::kernels {

namespace {

std::atomic<bool> g_parallel{true};
std::atomic<size_t> g_min_rows{1u << 14};

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

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

Policy policy() { return Policy{g_parallel.load(), g_min_rows.load()}; }

void set_policy(Policy p) {
  g_parallel.store(p.parallel);
  g_min_rows.store(p.min_rows);
}

std::vector<uint32_t> sort_rows_parallel(const uint32_t* flat, size_t arity,
                                         size_t n, std::span<const int> cols) {
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  auto less = [&](uint32_t a, uint32_t b) {
    int c = key_compare(flat, arity, cols, a, b);
    return c != 0 ? c < 0 : a < b;
  };
  const int nt = thread_count();
  if (nt <= 1 || n < 2) {
    std::sort(idx.begin(), idx.end(), less);
    return idx;
  }
  // Sort chunks in parallel, then merge pairwise. The comparator is a total
  // order (index tie-break), so the result is unique.
  std::vector<size_t> bounds;
  for (int t = 0; t <= nt; ++t) bounds.push_back(n * t / nt);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int t = 0; t < nt; ++t)
    std::sort(idx.begin() + bounds[t], idx.begin() + bounds[t + 1], less);
  for (size_t width = 1; width < bounds.size() - 1; width *= 2) {
    for (size_t t = 0; t + width < bounds.size() - 1; t += 2 * width) {
      size_t lo = bounds[t];
      size_t mid = bounds[t + width];
      size_t hi = bounds[std::min(t + 2 * width, bounds.size() - 1)];
      std::inplace_merge(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                         less);
    }
  }
  return idx;
}

std::vector<uint32_t> sort_rows(const uint32_t* flat, size_t arity, size_t n,
                                std::span<const int> cols) {
  Policy p = policy();
  if (p.parallel && n >= p.min_rows)
    return sort_rows_parallel(flat, arity, n, cols);
  return sort_rows_serial(flat, arity, n, cols);
}

Grouped fold_groups_parallel(const SemiringSpec& ring, const uint32_t* flat,
                             size_t arity, size_t n,
                             std::span<const int> key_cols,
                             const SemiringValue* values) {
  Grouped out;
  out.key_arity = key_cols.size();
  if (n == 0) return out;
  const int nt = thread_count();
  if (nt <= 1)
    return fold_groups_serial(ring, flat, arity, n, key_cols, values);

  // Each thread owns the keys hashing to its slot and scans the full input,
  // so every group folds in input-row order exactly as the serial path does.
  std::vector<uint32_t> owner(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    owner[i] = static_cast<uint32_t>(
        hash_key(flat, arity, key_cols, static_cast<uint32_t>(i)) %
        static_cast<uint64_t>(nt));
  }
  std::vector<Grouped> parts(nt);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int t = 0; t < nt; ++t) {
    std::vector<uint32_t> mine;
    for (size_t i = 0; i < n; ++i) {
      if (owner[i] == static_cast<uint32_t>(t))
        mine.push_back(static_cast<uint32_t>(i));
    }
    std::sort(mine.begin(), mine.end(), [&](uint32_t a, uint32_t b) {
      int c = key_compare(flat, arity, key_cols, a, b);
      return c != 0 ? c < 0 : a < b;
    });
    parts[t] = detail::fold_sorted(ring, flat, arity, key_cols, values, mine);
  }

  // Key sets are disjoint across threads and each part is sorted, so a
  // k-way merge of the group streams restores the canonical order.
  size_t total = 0;
  for (auto& p : parts) total += p.size();
  const size_t ka = key_cols.size();
  out.keys.reserve(total * ka);
  out.values.reserve(total);
  std::vector<size_t> head(parts.size(), 0);
  auto part_less = [&](int a, int b) {
    const uint32_t* pa = parts[a].keys.data() + head[a] * ka;
    const uint32_t* pb = parts[b].keys.data() + head[b] * ka;
    for (size_t c = 0; c < ka; ++c)
      if (pa[c] != pb[c]) return pa[c] < pb[c];
    return a < b;
  };
  while (out.values.size() < total) {
    int best = -1;
    for (int t = 0; t < int(parts.size()); ++t) {
      if (head[t] >= parts[t].size()) continue;
      if (best < 0 || part_less(t, best)) best = t;
    }
    out.keys.insert(out.keys.end(),
                    parts[best].keys.begin() + head[best] * ka,
                    parts[best].keys.begin() + (head[best] + 1) * ka);
    out.values.push_back(std::move(parts[best].values[head[best]]));
    head[best]++;
  }
  return out;
}

Grouped fold_groups(const SemiringSpec& ring, const uint32_t* flat, size_t arity,
                    size_t n, std::span<const int> key_cols,
                    const SemiringValue* values) {
  Policy p = policy();
  if (p.parallel && n >= p.min_rows)
    return fold_groups_parallel(ring, flat, arity, n, key_cols, values);
  return fold_groups_serial(ring, flat, arity, n, key_cols, values);
}

std::vector<uint32_t> filter_rows_parallel(const uint32_t* flat, size_t arity,
                                           size_t n, int col, Cmp cmp,
                                           uint32_t constant) {
  const int nt = thread_count();
  if (nt <= 1) return filter_rows_serial(flat, arity, n, col, cmp, constant);
  std::vector<std::vector<uint32_t>> parts(nt);
  std::vector<size_t> bounds;
  for (int t = 0; t <= nt; ++t) bounds.push_back(n * t / nt);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int t = 0; t < nt; ++t) {
    for (size_t i = bounds[t]; i < bounds[t + 1]; ++i) {
      if (cmp_eval(cmp, flat[i * arity + col], constant))
        parts[t].push_back(static_cast<uint32_t>(i));
    }
  }
  std::vector<uint32_t> kept;
  for (auto& p : parts) kept.insert(kept.end(), p.begin(), p.end());
  return kept;
}

std::vector<uint32_t> filter_rows(const uint32_t* flat, size_t arity, size_t n,
                                  int col, Cmp cmp, uint32_t constant) {
  Policy p = policy();
  if (p.parallel && n >= p.min_rows)
    return filter_rows_parallel(flat, arity, n, col, cmp, constant);
  return filter_rows_serial(flat, arity, n, col, cmp, constant);
}

JoinEmit emit_join_parallel(const SemiringSpec& ring,
                            std::span<const std::pair<uint32_t, uint32_t>> pairs,
                            const uint32_t* lflat, size_t larity,
                            const SemiringValue* lvals, const uint32_t* rflat,
                            size_t rarity, const SemiringValue* rvals,
                            std::span<const std::pair<int, int>> out_cols) {
  JoinEmit out;
  const size_t oarity = out_cols.size();
  out.flat.resize(pairs.size() * oarity);
  out.values.resize(pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long p = 0; p < static_cast<long long>(pairs.size()); ++p) {
    const uint32_t* lrow = lflat + size_t(pairs[p].first) * larity;
    const uint32_t* rrow = rflat + size_t(pairs[p].second) * rarity;
    uint32_t* orow = out.flat.data() + size_t(p) * oarity;
    for (size_t c = 0; c < oarity; ++c)
      orow[c] = out_cols[c].first == 0 ? lrow[out_cols[c].second]
                                       : rrow[out_cols[c].second];
    out.values[p] = ring.mul(lvals[pairs[p].first], rvals[pairs[p].second]);
  }
  return out;
}

JoinEmit emit_join(const SemiringSpec& ring,
                   std::span<const std::pair<uint32_t, uint32_t>> pairs,
                   const uint32_t* lflat, size_t larity,
                   const SemiringValue* lvals, const uint32_t* rflat,
                   size_t rarity, const SemiringValue* rvals,
                   std::span<const std::pair<int, int>> out_cols) {
  Policy p = policy();
  if (p.parallel && pairs.size() >= p.min_rows)
    return emit_join_parallel(ring, pairs, lflat, larity, lvals, rflat, rarity,
                              rvals, out_cols);
  return emit_join_serial(ring, pairs, lflat, larity, lvals, rflat, rarity,
                          rvals, out_cols);
}

}  // namespace cjt::kernels
