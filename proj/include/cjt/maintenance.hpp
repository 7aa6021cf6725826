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

#ifndef CJT_MAINTENANCE_HPP
#define CJT_MAINTENANCE_HPP

#include "cjt/planner.hpp"

namespace cjt {

enum class MaintenanceMode { eager, lazy };

/// Additive change to a base relation. Deletion rows carry additive-inverse
/// annotations and require a ring instance.
struct DeltaRelation {
  RelationId rel = 0;
  AnnotatedRelation rows;
};

/// Applies the delta to the store (new version) and incrementally updates
/// every cached message oriented away from the relation's bag by adding the
/// delta message; the tree stays calibrated. Touches exactly |bags|-1
/// directed edges.
void apply_delta_eager(JunctionHypertree& jt, CalibratedHandle& h,
                       const DeltaRelation& delta, const EngineConfig& cfg,
                       MessageStats* stats);

/// Applies the delta to the store and only invalidates the away-oriented
/// half of the directed edges; repairs happen on demand at query time.
void apply_delta_lazy(JunctionHypertree& jt, CalibratedHandle& h,
                      const DeltaRelation& delta, MessageStats* stats);

/// Marks every directed edge oriented away from the relation's bag invalid
/// and syncs the pivot to the store's latest version. Idempotent.
void invalidate_lazy(JunctionHypertree& jt, CalibratedHandle& h, RelationId rel,
                     MessageStats* stats);

/// Recomputes the invalid messages the plan reads, walking back along the
/// invalid path toward the updated relation. Unread invalid messages stay
/// invalid.
void refresh_for_plan(JunctionHypertree& jt, const CalibratedHandle& h,
                      const SteinerPlan& plan, const EngineConfig& cfg,
                      MessageStats* stats);

void apply_delta(JunctionHypertree& jt, CalibratedHandle& h,
                 const DeltaRelation& delta, MaintenanceMode mode,
                 const EngineConfig& cfg, MessageStats* stats);

}  // namespace cjt

#endif
