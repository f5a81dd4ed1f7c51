// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <thread>

#include "mctok/common.hpp"
#include "mctok/nn/paged_cache.hpp"
#include "mctok/rng.hpp"

namespace mctok::nn {
namespace {

TEST(PagePool, AllocateReleaseRestoresCount) {
  PagePool pool(16, 4, 2, 8);
  const PageId p = pool.allocate();
  EXPECT_EQ(pool.pages_in_use(), 1u);
  EXPECT_EQ(pool.pages_free(), 3u);
  pool.release(p);
  EXPECT_EQ(pool.pages_in_use(), 0u);
  EXPECT_EQ(pool.pages_free(), 4u);
}

TEST(PagePool, ExhaustionIsCapacityError) {
  PagePool pool(4, 2, 1, 2);
  pool.allocate();
  pool.allocate();
  EXPECT_THROW(pool.allocate(), CapacityError);
}

TEST(PagePool, DoubleFreeIsContractViolation) {
  PagePool pool(4, 2, 1, 2);
  const PageId p = pool.allocate();
  pool.release(p);
  EXPECT_THROW(pool.release(p), ContractViolation);
  EXPECT_THROW(pool.release(17), ContractViolation);
}

TEST(PagePool, PagesDoNotAlias) {
  PagePool pool(2, 3, 2, 4);
  std::set<const float*> seen;
  for (PageId p = 0; p < 3; ++p) {
    for (std::size_t layer = 0; layer < 2; ++layer) {
      for (std::size_t slot = 0; slot < 2; ++slot) {
        EXPECT_TRUE(seen.insert(pool.key(p, layer, slot)).second);
        EXPECT_TRUE(seen.insert(pool.value(p, layer, slot)).second);
      }
    }
  }
}

TEST(AttentionCache, PageSizePlusOneHoldsTwoPages) {
  PagePool pool(16, 8, 1, 4);
  AttentionCache cache(pool, 128);
  cache.extend(1);
  EXPECT_EQ(cache.used_len(), 1u);
  EXPECT_EQ(cache.pages_held(), 1u);
  cache.extend(16);
  EXPECT_EQ(cache.used_len(), 17u);
  EXPECT_EQ(cache.pages_held(), 2u);
}

TEST(AttentionCache, DestructorReturnsPages) {
  PagePool pool(4, 8, 1, 4);
  {
    AttentionCache cache(pool, 64);
    cache.extend(10);
    EXPECT_EQ(pool.pages_in_use(), 3u);
    AttentionCache moved(std::move(cache));
    EXPECT_EQ(pool.pages_in_use(), 3u);
    EXPECT_EQ(moved.used_len(), 10u);
  }
  EXPECT_EQ(pool.pages_in_use(), 0u);
}

TEST(AttentionCache, FailedExtendKeepsNothing) {
  PagePool pool(4, 3, 1, 4);
  AttentionCache a(pool, 64);
  a.extend(4);
  AttentionCache b(pool, 64);
  EXPECT_THROW(b.extend(12), CapacityError);
  EXPECT_EQ(b.used_len(), 0u);
  EXPECT_EQ(b.pages_held(), 0u);
  EXPECT_EQ(pool.pages_in_use(), 1u);
}

TEST(AttentionCache, MaxPositionsOverflowIsAnError) {
  PagePool pool(4, 8, 1, 4);
  AttentionCache cache(pool, 6);
  cache.extend(6);
  EXPECT_THROW(cache.extend(1), CapacityError);
  EXPECT_EQ(cache.used_len(), 6u);
}

TEST(AttentionCache, SequencesNeverSharePages) {
  PagePool pool(2, 32, 1, 2);
  AttentionCache a(pool, 64), b(pool, 64);
  for (int i = 0; i < 10; ++i) {
    a.extend(1 + i % 3);
    b.extend(2);
  }
  std::set<PageId> pa(a.page_table().begin(), a.page_table().end());
  for (PageId p : b.page_table()) EXPECT_EQ(pa.count(p), 0u);
}

// Random extend/release traffic over several sequences against a shadow
// count of the pages each sequence should hold.
TEST(AttentionCache, RandomTrafficMatchesShadowAccounting) {
  constexpr std::size_t kPage = 5, kPages = 40;
  PagePool pool(kPage, kPages, 2, 3);
  std::vector<AttentionCache> seqs;
  for (int i = 0; i < 6; ++i) seqs.emplace_back(pool, 1000);
  std::vector<std::size_t> shadow_len(6, 0);
  Rng rng(11);
  for (int op = 0; op < 5000; ++op) {
    const std::size_t s = rng.below(6);
    if (rng.below(4) == 0) {
      seqs[s].release();
      shadow_len[s] = 0;
    } else {
      const std::size_t n = 1 + rng.below(7);
      std::size_t shadow_pages = 0;
      for (std::size_t i = 0; i < 6; ++i) shadow_pages += (shadow_len[i] + kPage - 1) / kPage;
      const std::size_t need = (shadow_len[s] + n + kPage - 1) / kPage - (shadow_len[s] + kPage - 1) / kPage;
      if (shadow_pages + need > kPages) {
        EXPECT_THROW(seqs[s].extend(n), CapacityError);
      } else {
        seqs[s].extend(n);
        shadow_len[s] += n;
      }
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      ASSERT_EQ(seqs[i].used_len(), shadow_len[i]);
      ASSERT_EQ(seqs[i].pages_held(), (shadow_len[i] + kPage - 1) / kPage);
      expected += seqs[i].pages_held();
    }
    ASSERT_EQ(pool.pages_in_use(), expected);
    ASSERT_EQ(pool.pages_in_use() + pool.pages_free(), kPages);
  }
}

TEST(PagePool, ConcurrentSessionsKeepAccountingExact) {
  PagePool pool(4, 64, 1, 2);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&pool, t] {
      Rng rng(static_cast<std::uint64_t>(t));
      for (int i = 0; i < 500; ++i) {
        AttentionCache cache(pool, 64);
        cache.extend(1 + rng.below(60));
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(pool.pages_in_use(), 0u);
  EXPECT_EQ(pool.pages_free(), 64u);
}

}  // namespace
}  // namespace mctok::nn
