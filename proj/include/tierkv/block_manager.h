/* Copyright 2026 The tierkv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tierkv/units.h"

namespace tierkv {

enum class ResizeDirection : uint8_t { kGrow, kShrink };

struct PendingResize {
  ResizeDirection direction = ResizeDirection::kGrow;
  int old_blocks = 0;
  int new_blocks = 0;
  std::vector<bool> migrated;
  int migrated_count = 0;
};

// Fixed-size block allocator over every layer's KV slot. A request always
// holds the same number of blocks on each layer, so allocation is
// all-or-nothing across layers.
//
// Resizes are two-phase. Each layer migrates to the new capacity on its first
// swap after the trigger. A grow exposes the added blocks only once every
// layer has migrated. A shrink fences blocks beyond the new size at once;
// blocks still held there are compacted when the resize completes.
class BlockManager {
 public:
  BlockManager(int n_layers, int block_size_tokens, int blocks_per_layer);

  int BlocksForTokens(int64_t tokens) const;

  // Allocates `count` more blocks on every layer for `request`. Throws
  // Error{kOutOfBlocks} and changes nothing when any layer lacks space.
  void Allocate(RequestId request, int count = 1);
  bool CanAllocate(int count) const;
  void Release(RequestId request);

  // Blocks `request` holds on each layer.
  int held(RequestId request) const;
  const std::vector<int>& blocks_of(RequestId request, LayerId layer) const;

  // Throws Error{kResizeInProgress}.
  void TriggerResize(ResizeDirection direction, int new_blocks_per_layer);

  // Records that `layer` now has its new-capacity slot. Returns true when this
  // was the last layer to migrate.
  bool MarkMigrated(LayerId layer);
  bool migrated(LayerId layer) const;
  bool resize_ready() const;

  // Finishes a resize whose layers have all migrated. For a shrink, blocks
  // above the new size move to free low blocks; if too few are free, requests
  // are released in `eviction_order` until the rest fit. Returns the evicted
  // requests.
  std::vector<RequestId> CompleteResize(
      const std::vector<RequestId>& eviction_order);

  const std::optional<PendingResize>& pending() const { return pending_; }

  int n_layers() const { return n_layers_; }
  int block_size_tokens() const { return block_size_tokens_; }
  // Capacity that allocated plus free blocks add up to.
  int exposed_blocks() const;
  // Highest block index (exclusive) new allocations may use.
  int allocation_limit() const;
  int allocatable_blocks(LayerId layer) const;
  int free_blocks(LayerId layer) const;
  int allocated_blocks(LayerId layer) const;

 private:
  int n_layers_;
  int block_size_tokens_;
  int capacity_;
  std::vector<std::set<int>> free_;
  std::vector<int> allocated_;
  std::map<RequestId, std::vector<std::vector<int>>> owned_;
  std::optional<PendingResize> pending_;
};

}  // namespace tierkv
