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

#ifndef CJT_CALIBRATION_HPP
#define CJT_CALIBRATION_HPP

#include "cjt/annotations.hpp"

namespace cjt {

/*
 * Shafer–Shenoy style message passing generalized to annotated bags. A
 * message u→v joins the incoming messages of u (except from v) with u's
 * mapped relations at their placement versions, applies select annotations,
 * and marginalizes everything outside attrs(u) ∩ attrs(v) and the carried
 * group-by attributes. Messages are bit-deterministic: for a fixed placement
 * any traversal order and any root produce identical payloads.
 */

/// Computes the message u→v without touching the shared cache. Reads
/// prerequisite messages from `overlay` first, then the cache. When an
/// overlay is supplied, shared-cache reads count as reuse.
Message compute_message(const JunctionHypertree& jt, BagId u, BagId v,
                        const AnnotationPlacement& p,
                        const MessageOverlay* overlay, const EngineConfig& cfg,
                        MessageStats* stats);

/// Computes and caches the message u→v. Requires all prerequisite messages
/// of u (except from v) to be cached and valid.
Message& pass_message(JunctionHypertree& jt, BagId u, BagId v,
                      const AnnotationPlacement& p, const EngineConfig& cfg,
                      MessageStats* stats);

/// Caches one valid message per edge directed toward `root`. A custom order
/// may be supplied (any leaves-first schedule); messages are identical for
/// every valid order.
void upward_pass(JunctionHypertree& jt, BagId root, const AnnotationPlacement& p,
                 const EngineConfig& cfg, MessageStats* stats,
                 std::span<const BagId> order = {});

/// Reverses the edges and passes messages from the root outward; after an
/// upward pass this leaves a valid message on every directed edge.
void downward_pass(JunctionHypertree& jt, BagId root,
                   const AnnotationPlacement& p, const EngineConfig& cfg,
                   MessageStats* stats);

/// Upward then downward from `root` (lowest bag id when unspecified);
/// computes exactly 2(|bags|-1) messages. Fills the absorption cache when
/// the config asks for it.
CalibratedHandle calibrate(JunctionHypertree& jt, AnnotationPlacement pivot,
                           const EngineConfig& cfg, MessageStats* stats,
                           BagId root = kNoBag);

/// Join of all incoming messages and the bag's annotation-adjusted relations
/// with selections applied; no marginalization.
AnnotatedRelation absorb(const JunctionHypertree& jt, BagId b,
                         const AnnotationPlacement& p,
                         const MessageOverlay* overlay, const EngineConfig& cfg,
                         MessageStats* stats);

/// True iff every directed edge holds a valid message and, for every edge,
/// the two marginal absorption results agree exactly on the shared
/// attributes. Absorptions are evaluated at the latest relation versions, so
/// an unpropagated base update reports false.
bool is_calibrated(const JunctionHypertree& jt, const AnnotationPlacement& p,
                   const EngineConfig& cfg);

/// Stable digest of the annotated subtree behind edge u→v: bag ids, per-bag
/// annotations, relation ids and versions, combined bottom-up. Messages are
/// interchangeable between placements iff their subtree signatures match.
uint64_t subtree_signature(const JunctionHypertree& jt, BagId u, BagId v,
                           const AnnotationPlacement& p);

/// Canonical byte encoding of one bag's annotation state; placements differ
/// at a bag iff these strings differ.
std::string encode_bag_state(const JunctionHypertree& jt, BagId b,
                             const AnnotationPlacement& p);

Version effective_version(const JunctionHypertree& jt,
                          const AnnotationPlacement& p, RelationId r);

}  // namespace cjt

#endif
