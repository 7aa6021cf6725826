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

#include "cjt/semiring.hpp"

#include <algorithm>

namespace cjt {

std::string_view SemiringSpec::name() const {
  switch (id_) {
    case SemiringId::nat_count: return "nat_count";
    case SemiringId::int_count: return "int_count";
    case SemiringId::covariance: return "covariance";
  }
  return "?";
}

void SemiringSpec::check_value(const SemiringValue& a) const {
  if (id_ == SemiringId::covariance) {
    require(a.cov_payload().size() == payload_len(),
            "semiring value dimension mismatch");
  } else {
    require(a.cov_payload().empty(), "semiring instance mismatch");
  }
}

SemiringValue SemiringSpec::zero() const {
  if (id_ == SemiringId::covariance)
    return SemiringValue::cov(std::vector<double>(payload_len(), 0.0));
  return SemiringValue::count(0);
}

SemiringValue SemiringSpec::one() const {
  if (id_ == SemiringId::covariance) {
    // Multiplicative identity: count 1, zero sums, zero products.
    std::vector<double> p(payload_len(), 0.0);
    p[0] = 1.0;
    return SemiringValue::cov(std::move(p));
  }
  return SemiringValue::count(1);
}

SemiringValue SemiringSpec::add(const SemiringValue& a,
                                const SemiringValue& b) const {
  check_value(a);
  check_value(b);
  if (id_ != SemiringId::covariance)
    return SemiringValue::count(a.count_value() + b.count_value());
  std::vector<double> out(payload_len());
  auto pa = a.cov_payload();
  auto pb = b.cov_payload();
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  return SemiringValue::cov(std::move(out));
}

SemiringValue SemiringSpec::mul(const SemiringValue& a,
                                const SemiringValue& b) const {
  check_value(a);
  check_value(b);
  if (id_ != SemiringId::covariance)
    return SemiringValue::count(a.count_value() * b.count_value());
  // (c1*c2, c1*s2 + c2*s1, c1*Q2 + c2*Q1 + s1 s2^T + s2 s1^T)
  const size_t d = dim_;
  auto pa = a.cov_payload();
  auto pb = b.cov_payload();
  const double c1 = pa[0], c2 = pb[0];
  const double* s1 = pa.data() + 1;
  const double* s2 = pb.data() + 1;
  const double* q1 = pa.data() + 1 + d;
  const double* q2 = pb.data() + 1 + d;
  std::vector<double> out(payload_len());
  out[0] = c1 * c2;
  for (size_t i = 0; i < d; ++i) out[1 + i] = c1 * s2[i] + c2 * s1[i];
  double* qo = out.data() + 1 + d;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j)
      qo[i * d + j] = c1 * q2[i * d + j] + c2 * q1[i * d + j] +
                      s1[i] * s2[j] + s2[i] * s1[j];
  return SemiringValue::cov(std::move(out));
}

SemiringValue SemiringSpec::negate(const SemiringValue& a) const {
  require(has_additive_inverse(),
          std::string(name()) +
              " has no additive inverse; deletions are unsupported");
  check_value(a);
  if (id_ != SemiringId::covariance)
    return SemiringValue::count(-a.count_value());
  std::vector<double> out(a.cov_payload().begin(), a.cov_payload().end());
  for (double& x : out) x = -x;
  return SemiringValue::cov(std::move(out));
}

SemiringValue SemiringSpec::lift(std::span<const double> values) const {
  require(id_ == SemiringId::covariance, "lift requires the covariance instance");
  require(values.size() == dim_, "lift dimension mismatch");
  const size_t d = dim_;
  std::vector<double> out(payload_len());
  out[0] = 1.0;
  for (size_t i = 0; i < d; ++i) out[1 + i] = values[i];
  double* q = out.data() + 1 + d;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) q[i * d + j] = values[i] * values[j];
  return SemiringValue::cov(std::move(out));
}

bool SemiringSpec::is_zero(const SemiringValue& a) const {
  if (id_ != SemiringId::covariance) return a.count_value() == 0;
  auto p = a.cov_payload();
  return std::all_of(p.begin(), p.end(), [](double x) { return x == 0.0; });
}

}  // namespace cjt
