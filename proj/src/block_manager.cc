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

#include "tierkv/block_manager.h"

#include <algorithm>

#include <fmt/format.h>

#include "tierkv/error.h"

namespace tierkv {

BlockManager::BlockManager(int n_layers, int block_size_tokens,
                           int blocks_per_layer)
    : n_layers_(n_layers),
      block_size_tokens_(block_size_tokens),
      capacity_(blocks_per_layer),
      free_(n_layers),
      allocated_(n_layers, 0) {
  if (n_layers < 1 || block_size_tokens < 1 || blocks_per_layer < 0) {
    throw ConfigError("invalid block manager geometry", "memory");
  }
  for (auto& f : free_) {
    for (int b = 0; b < blocks_per_layer; ++b) f.insert(f.end(), b);
  }
}

int BlockManager::BlocksForTokens(int64_t tokens) const {
  return static_cast<int>((tokens + block_size_tokens_ - 1) /
                          block_size_tokens_);
}

int BlockManager::exposed_blocks() const { return capacity_; }

int BlockManager::allocation_limit() const {
  if (pending_ && pending_->direction == ResizeDirection::kShrink) {
    return pending_->new_blocks;
  }
  return capacity_;
}

int BlockManager::allocatable_blocks(LayerId layer) const {
  const std::set<int>& f = free_.at(layer);
  return static_cast<int>(std::distance(f.begin(),
                                        f.lower_bound(allocation_limit())));
}

int BlockManager::free_blocks(LayerId layer) const {
  return static_cast<int>(free_.at(layer).size());
}

int BlockManager::allocated_blocks(LayerId layer) const {
  return allocated_.at(layer);
}

bool BlockManager::CanAllocate(int count) const {
  for (LayerId l = 0; l < n_layers_; ++l) {
    if (allocatable_blocks(l) < count) return false;
  }
  return true;
}

void BlockManager::Allocate(RequestId request, int count) {
  if (count <= 0) return;
  if (!CanAllocate(count)) {
    throw Error(ErrorCode::kOutOfBlocks,
                fmt::format("cannot allocate {} blocks for request {}", count,
                            request));
  }
  auto& owned = owned_[request];
  owned.resize(n_layers_);
  for (LayerId l = 0; l < n_layers_; ++l) {
    for (int i = 0; i < count; ++i) {
      auto it = free_[l].begin();
      owned[l].push_back(*it);
      free_[l].erase(it);
    }
    allocated_[l] += count;
  }
}

void BlockManager::Release(RequestId request) {
  auto it = owned_.find(request);
  if (it == owned_.end()) return;
  for (LayerId l = 0; l < n_layers_; ++l) {
    for (int b : it->second[l]) free_[l].insert(b);
    allocated_[l] -= static_cast<int>(it->second[l].size());
  }
  owned_.erase(it);
}

int BlockManager::held(RequestId request) const {
  auto it = owned_.find(request);
  return it == owned_.end() ? 0 : static_cast<int>(it->second[0].size());
}

const std::vector<int>& BlockManager::blocks_of(RequestId request,
                                                LayerId layer) const {
  static const std::vector<int> kEmpty;
  auto it = owned_.find(request);
  return it == owned_.end() ? kEmpty : it->second.at(layer);
}

void BlockManager::TriggerResize(ResizeDirection direction,
                                 int new_blocks_per_layer) {
  if (pending_) {
    throw Error(ErrorCode::kResizeInProgress, "a resize is already pending");
  }
  PendingResize p;
  p.direction = direction;
  p.old_blocks = capacity_;
  p.new_blocks = new_blocks_per_layer;
  p.migrated.assign(n_layers_, false);
  pending_ = std::move(p);
}

bool BlockManager::MarkMigrated(LayerId layer) {
  if (!pending_ || pending_->migrated.at(layer)) return false;
  pending_->migrated[layer] = true;
  return ++pending_->migrated_count == n_layers_;
}

bool BlockManager::migrated(LayerId layer) const {
  return !pending_ || pending_->migrated.at(layer);
}

bool BlockManager::resize_ready() const {
  return pending_ && pending_->migrated_count == n_layers_;
}

std::vector<RequestId> BlockManager::CompleteResize(
    const std::vector<RequestId>& eviction_order) {
  std::vector<RequestId> evicted;
  if (!resize_ready()) return evicted;
  const int target = pending_->new_blocks;
  if (target >= capacity_) {
    for (LayerId l = 0; l < n_layers_; ++l) {
      for (int b = capacity_; b < target; ++b) free_[l].insert(b);
    }
    capacity_ = target;
    pending_.reset();
    return evicted;
  }

  auto fits = [&]() {
    for (LayerId l = 0; l < n_layers_; ++l) {
      const int high_free = static_cast<int>(
          std::distance(free_[l].lower_bound(target), free_[l].end()));
      const int high_held = capacity_ - target - high_free;
      const int low_free = free_blocks(l) - high_free;
      if (high_held > low_free) return false;
    }
    return true;
  };
  for (RequestId r : eviction_order) {
    if (fits()) break;
    if (owned_.count(r) == 0) continue;
    Release(r);
    evicted.push_back(r);
  }
  if (!fits()) {
    throw Error(ErrorCode::kOutOfBlocks, "shrink cannot compact held blocks");
  }

  for (auto& [request, per_layer] : owned_) {
    for (LayerId l = 0; l < n_layers_; ++l) {
      for (int& b : per_layer[l]) {
        if (b < target) continue;
        auto low = free_[l].begin();
        const int moved = *low;
        free_[l].erase(low);
        free_[l].insert(b);
        b = moved;
      }
    }
  }
  for (auto& f : free_) f.erase(f.lower_bound(target), f.end());
  capacity_ = target;
  pending_.reset();
  return evicted;
}

}  // namespace tierkv
