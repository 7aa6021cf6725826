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

#ifndef CJT_PLANNER_HPP
#define CJT_PLANNER_HPP

#include "cjt/calibration.hpp"

namespace cjt {

enum class PlacementMode {
  single_query,    // push selections away from the root
  reuse_priority,  // pull movable annotations toward the root
};

/// Execution region for a delta query: the minimal subtree connecting the
/// bags whose annotations differ from the pivot, the chosen root, the edges
/// to recompute (leaves-first) and the cached edges crossing into the tree.
struct SteinerPlan {
  std::vector<BagId> diff_bags;
  std::vector<BagId> tree_bags;
  BagId root = kNoBag;
  std::vector<DirectedEdge> recompute_edges;
  std::vector<DirectedEdge> reused_edges;
  AnnotationPlacement merged;
};

/// Binds a query's annotations to bags. Group-by and select markers go on
/// bags holding a joined relation that carries the attribute (so the marker
/// is effective in every message direction); when a pivot is given,
/// annotations identical to the pivot's stay on the pivot's bag.
AnnotationPlacement place_annotations(const JunctionHypertree& jt,
                                      const QuerySpec& q, PlacementMode mode,
                                      BagId root,
                                      const AnnotationPlacement* pivot);

/// True iff the cached message u→v can stand in for the query's: identical
/// annotated subtree behind u, checked via subtree signatures.
bool message_reusable(const JunctionHypertree& jt, const CalibratedHandle& h,
                      BagId u, BagId v, const AnnotationPlacement& q);

SteinerPlan build_steiner(const JunctionHypertree& jt,
                          const CalibratedHandle& h, const QuerySpec& q);

/// Root with the smallest estimated recompute cost: sum over recomputed
/// edges of the product of the source bag's input cardinalities (cached
/// sizes where available). Ties break to the lowest bag id.
BagId choose_root(const JunctionHypertree& jt, const AnnotationPlacement& merged,
                  std::span<const BagId> tree_bags);

/// Executes a delta query over the calibrated tree: recomputes only the
/// steiner edges into a private overlay, absorbs at the plan root and
/// marginalizes to the query's group attributes. Repairs invalidated
/// messages the plan reads first.
AnnotatedRelation execute(JunctionHypertree& jt, CalibratedHandle& h,
                          const QuerySpec& q, const EngineConfig& cfg,
                          MessageStats* stats, SteinerPlan* plan_out = nullptr);

/// Minimum-cardinality connected subtree containing at least k annotations.
/// Each annotation lists the bags it may be placed on; multi-bag choices are
/// resolved per candidate root by nearest-to-root placement, then the
/// count-indexed edge table x[e][n] is combined bottom-up.
struct SteinerDpResult {
  std::vector<BagId> bags;
  int size = 0;
};
SteinerDpResult min_steiner_dp(const JunctionHypertree& jt,
                               const std::vector<std::vector<BagId>>& sets,
                               int k);

}  // namespace cjt

#endif
