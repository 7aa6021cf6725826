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

#ifndef CJT_ANALYTICS_HPP
#define CJT_ANALYTICS_HPP

#include "cjt/maintenance.hpp"

namespace cjt {

/// One calibrated pivot per size-k subset of the cube dimensions, each with
/// its own tree and absorption caches.
struct CubePivot {
  JunctionHypertree jt;
  CalibratedHandle handle;
};

struct CubeIndex {
  uint32_t k = 0;
  Schema dims;
  std::map<Schema, CubePivot> pivots;  // keyed by the pivot's group attrs
};

CubeIndex build_cube(const JunctionHypertree& base, const Schema& dims,
                     uint32_t k, const EngineConfig& cfg, MessageStats* stats);

/// Estimated steiner size of answering (group_attrs, preds) on this pivot;
/// drives pivot selection.
int olap_steiner_size(const CubePivot& pivot, const Schema& group_attrs,
                      std::span<const Predicate> preds);

/// Answers an OLAP query from the pivot whose differing annotations span the
/// smallest steiner tree.
AnnotatedRelation answer_olap(CubeIndex& cube, const Schema& group_attrs,
                              std::span<const Predicate> preds,
                              const EngineConfig& cfg, MessageStats* stats,
                              Schema* chosen_pivot = nullptr);

/// Joins a new relation into the calibrated tree. When one bag contains all
/// join keys the steiner tree is that bag plus the new one and exactly one
/// message is computed; otherwise the keys are aggregated over their steiner
/// tree, those bags are widened with the keys, and the new bag attaches to
/// the tree. Full recalibration is deferred (stale edges are invalidated).
BagId augment(JunctionHypertree& jt, CalibratedHandle& h,
              AnnotatedRelation new_rel, const Schema& join_keys,
              const EngineConfig& cfg, MessageStats* stats);

struct LinRegModel {
  std::vector<double> weights;  // one per feature
  double intercept = 0;
  double lambda = 0;
};

/// Ridge regression from the covariance aggregate absorbed at `at_bag`:
/// N, the feature sums and the product-sum matrix assemble the normal
/// equations (intercept from the count/sum terms), solved by Cholesky.
LinRegModel train_linreg(const JunctionHypertree& jt, const CalibratedHandle& h,
                         BagId at_bag, std::span<const size_t> feature_dims,
                         size_t target_dim, double lambda,
                         const EngineConfig& cfg, MessageStats* stats);

/// Re-dimensions covariance annotations: old dimension i moves to position
/// dim_map[i] in the target instance, new positions read zero.
AnnotatedRelation embed_covariance(const AnnotatedRelation& rel,
                                   const SemiringSpec& to,
                                   std::span<const size_t> dim_map);

/// Cholesky solve of a symmetric positive definite system; errors on
/// non-positive pivots.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b,
                              size_t n);

}  // namespace cjt

#endif
