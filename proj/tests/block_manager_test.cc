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

#include <gtest/gtest.h>

#include "tierkv/error.h"

namespace tierkv {
namespace {

TEST(BlockManagerTest, BlocksForTokensRoundsUp) {
  BlockManager b(2, 16, 10);
  EXPECT_EQ(b.BlocksForTokens(0), 0);
  EXPECT_EQ(b.BlocksForTokens(1), 1);
  EXPECT_EQ(b.BlocksForTokens(16), 1);
  EXPECT_EQ(b.BlocksForTokens(17), 2);
}

TEST(BlockManagerTest, AllocationIsAllOrNothingAcrossLayers) {
  BlockManager b(3, 16, 4);
  b.Allocate(1, 3);
  EXPECT_EQ(b.held(1), 3);
  for (LayerId l = 0; l < 3; ++l) EXPECT_EQ(b.allocated_blocks(l), 3);
  EXPECT_FALSE(b.CanAllocate(2));
  EXPECT_THROW(b.Allocate(2, 2), Error);
  EXPECT_EQ(b.held(2), 0);
  b.Release(1);
  EXPECT_EQ(b.allocated_blocks(0), 0);
  EXPECT_TRUE(b.CanAllocate(4));
}

TEST(BlockManagerTest, GrowAddsBlocksOnceEveryLayerMigrated) {
  BlockManager b(2, 16, 4);
  b.Allocate(1, 4);
  b.TriggerResize(ResizeDirection::kGrow, 6);
  EXPECT_THROW(b.TriggerResize(ResizeDirection::kGrow, 7), Error);
  EXPECT_FALSE(b.CanAllocate(1));
  EXPECT_FALSE(b.MarkMigrated(0));
  EXPECT_FALSE(b.resize_ready());
  EXPECT_TRUE(b.MarkMigrated(1));
  EXPECT_TRUE(b.resize_ready());
  EXPECT_TRUE(b.CompleteResize({}).empty());
  EXPECT_EQ(b.exposed_blocks(), 6);
  EXPECT_TRUE(b.CanAllocate(2));
}

TEST(BlockManagerTest, ShrinkStopsAllocatingAboveTargetImmediately) {
  BlockManager b(1, 16, 6);
  b.TriggerResize(ResizeDirection::kShrink, 4);
  EXPECT_EQ(b.exposed_blocks(), 6);
  EXPECT_EQ(b.allocatable_blocks(0), 4);
  EXPECT_FALSE(b.CanAllocate(5));
}

TEST(BlockManagerTest, ShrinkCompactsHeldBlocksBelowTarget) {
  BlockManager b(2, 16, 6);
  b.Allocate(1, 2);  // 0, 1
  b.Allocate(2, 3);  // 2, 3, 4
  b.Release(1);
  b.TriggerResize(ResizeDirection::kShrink, 4);
  b.MarkMigrated(0);
  b.MarkMigrated(1);
  EXPECT_TRUE(b.CompleteResize({2}).empty());
  EXPECT_EQ(b.exposed_blocks(), 4);
  for (LayerId l = 0; l < 2; ++l) {
    for (int blk : b.blocks_of(2, l)) EXPECT_LT(blk, 4);
    EXPECT_EQ(b.free_blocks(l), 1);
  }
}

TEST(BlockManagerTest, ShrinkEvictsInGivenOrderUntilItFits) {
  BlockManager b(1, 16, 6);
  b.Allocate(1, 2);
  b.Allocate(2, 2);
  b.Allocate(3, 2);
  b.TriggerResize(ResizeDirection::kShrink, 3);
  b.MarkMigrated(0);
  const std::vector<RequestId> evicted = b.CompleteResize({3, 2, 1});
  EXPECT_EQ(evicted, (std::vector<RequestId>{3, 2}));
  EXPECT_EQ(b.held(1), 2);
  EXPECT_EQ(b.free_blocks(0), 1);
}

}  // namespace
}  // namespace tierkv
