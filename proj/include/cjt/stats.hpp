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

#ifndef CJT_STATS_HPP
#define CJT_STATS_HPP

#include <cstdint>
#include <map>
#include <string>

namespace cjt {

/// Instrumentation counters. computed + reused equals the directed-edge
/// demand of the plan that produced them.
struct MessageStats {
  uint64_t messages_computed = 0;
  uint64_t messages_reused = 0;
  uint64_t messages_updated = 0;
  uint64_t messages_invalidated = 0;
  uint64_t tuples_processed = 0;
  std::map<std::string, double> phase_seconds;

  MessageStats& operator+=(const MessageStats& o) {
    messages_computed += o.messages_computed;
    messages_reused += o.messages_reused;
    messages_updated += o.messages_updated;
    messages_invalidated += o.messages_invalidated;
    tuples_processed += o.tuples_processed;
    for (auto& [k, v] : o.phase_seconds) phase_seconds[k] += v;
    return *this;
  }
};

}  // namespace cjt

#endif
