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

#ifndef CJT_SEMIRING_HPP
#define CJT_SEMIRING_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cjt/error.hpp"

namespace cjt {

enum class SemiringId : uint8_t {
  nat_count,   // non-negative 64-bit counts; no additive inverse
  int_count,   // signed 64-bit counts; a ring, supports deletions
  covariance,  // (count, sum vector, matrix of pairwise product sums)
};

/// A tuple annotation. Count instances use the integer payload; the
/// covariance instance stores [c, s_0..s_{d-1}, q_00..q_{d-1,d-1}] flattened
/// row-major. Values are immutable once constructed.
class SemiringValue {
 public:
  SemiringValue() = default;
  static SemiringValue count(int64_t n) {
    SemiringValue v;
    v.n_ = n;
    return v;
  }
  static SemiringValue cov(std::vector<double> payload) {
    SemiringValue v;
    v.cov_ = std::move(payload);
    return v;
  }

  int64_t count_value() const { return n_; }
  std::span<const double> cov_payload() const { return cov_; }
  double cov_c() const { return cov_.empty() ? 0.0 : cov_[0]; }

  friend bool operator==(const SemiringValue& a, const SemiringValue& b) {
    return a.n_ == b.n_ && a.cov_ == b.cov_;
  }

 private:
  int64_t n_ = 0;
  std::vector<double> cov_;
};

/// A commutative semi-ring instance: the operations object every relation
/// and message is tagged with. add and mul are total, commutative and
/// associative; mul distributes over add; zero annihilates; mixing instances
/// or dimensions is an error.
class SemiringSpec {
 public:
  SemiringSpec() = default;
  static SemiringSpec nat_count() { return SemiringSpec(SemiringId::nat_count, 0); }
  static SemiringSpec int_count() { return SemiringSpec(SemiringId::int_count, 0); }
  static SemiringSpec covariance(uint32_t dim) {
    return SemiringSpec(SemiringId::covariance, dim);
  }

  SemiringId id() const { return id_; }
  uint32_t dim() const { return dim_; }
  bool has_additive_inverse() const { return id_ != SemiringId::nat_count; }
  std::string_view name() const;
  /// Length of the covariance payload vector (1 + d + d*d), 0 for counts.
  size_t payload_len() const {
    return id_ == SemiringId::covariance ? 1 + dim_ + size_t(dim_) * dim_ : 0;
  }

  SemiringValue zero() const;
  SemiringValue one() const;
  SemiringValue add(const SemiringValue& a, const SemiringValue& b) const;
  SemiringValue mul(const SemiringValue& a, const SemiringValue& b) const;
  /// Additive inverse; errors on instances without one.
  SemiringValue negate(const SemiringValue& a) const;
  /// Covariance only: lift a d-vector of reals to (1, x, x x^T).
  SemiringValue lift(std::span<const double> values) const;
  bool is_zero(const SemiringValue& a) const;

  friend bool operator==(const SemiringSpec&, const SemiringSpec&) = default;

 private:
  SemiringSpec(SemiringId id, uint32_t dim) : id_(id), dim_(dim) {}
  void check_value(const SemiringValue& a) const;

  SemiringId id_ = SemiringId::nat_count;
  uint32_t dim_ = 0;
};

}  // namespace cjt

#endif
