// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <vector>

#include "mctok/nn/kv_store.hpp"

namespace mctok::nn {

using PageId = std::uint32_t;

// Fixed pool of key/value pages. A page holds `page_size` positions of keys
// and values for every layer. All storage is reserved up front; allocate and
// release are internally synchronized so concurrent sessions may share a pool.
class PagePool {
 public:
  PagePool(std::size_t page_size, std::size_t num_pages, std::size_t layers, std::size_t kv_dim);

  PagePool(const PagePool&) = delete;
  PagePool& operator=(const PagePool&) = delete;

  // Throws CapacityError when no page is free.
  PageId allocate();
  // Throws ContractViolation on an unknown id or a page that is already free.
  void release(PageId page);

  std::size_t page_size() const { return page_size_; }
  std::size_t num_pages() const { return num_pages_; }
  std::size_t layers() const { return layers_; }
  std::size_t kv_dim() const { return kv_dim_; }
  std::size_t pages_free() const;
  std::size_t pages_in_use() const;

  float* key(PageId page, std::size_t layer, std::size_t slot) { return data_.data() + offset(page, layer, slot, 0); }
  float* value(PageId page, std::size_t layer, std::size_t slot) { return data_.data() + offset(page, layer, slot, 1); }
  const float* key(PageId page, std::size_t layer, std::size_t slot) const {
    return data_.data() + offset(page, layer, slot, 0);
  }
  const float* value(PageId page, std::size_t layer, std::size_t slot) const {
    return data_.data() + offset(page, layer, slot, 1);
  }

 private:
  std::size_t offset(PageId page, std::size_t layer, std::size_t slot, std::size_t which) const {
    return (((static_cast<std::size_t>(page) * layers_ + layer) * 2 + which) * page_size_ + slot) * kv_dim_;
  }

  std::size_t page_size_;
  std::size_t num_pages_;
  std::size_t layers_;
  std::size_t kv_dim_;
  std::vector<float> data_;

  mutable std::mutex mu_;
  std::vector<PageId> free_list_;
  std::vector<bool> in_use_;
};

// One sequence's view into a PagePool: an ordered page table and a position
// count. Owns its pages; destruction or release() returns them to the pool.
// Single writer.
class AttentionCache final : public KvStore {
 public:
  AttentionCache(PagePool& pool, std::size_t max_positions);
  ~AttentionCache() override;

  AttentionCache(const AttentionCache&) = delete;
  AttentionCache& operator=(const AttentionCache&) = delete;
  AttentionCache(AttentionCache&& other) noexcept;
  AttentionCache& operator=(AttentionCache&&) = delete;

  // Reserves `n` more positions and returns the first new position. Pages
  // are taken from the pool as needed; on failure nothing is kept and
  // CapacityError propagates.
  std::size_t extend(std::size_t n);

  // Returns every page to the pool and empties the sequence.
  void release();

  std::size_t used_len() const { return used_len_; }
  std::size_t max_positions() const { return max_positions_; }
  std::size_t pages_held() const { return page_table_.size(); }
  const std::vector<PageId>& page_table() const { return page_table_; }
  const PagePool& pool() const { return *pool_; }

  float* key(std::size_t layer, std::size_t pos) override {
    return pool_->key(page_table_[pos / page_size_], layer, pos % page_size_);
  }
  float* value(std::size_t layer, std::size_t pos) override {
    return pool_->value(page_table_[pos / page_size_], layer, pos % page_size_);
  }
  const float* key(std::size_t layer, std::size_t pos) const {
    return pool_->key(page_table_[pos / page_size_], layer, pos % page_size_);
  }
  const float* value(std::size_t layer, std::size_t pos) const {
    return pool_->value(page_table_[pos / page_size_], layer, pos % page_size_);
  }

 private:
  PagePool* pool_;
  std::size_t page_size_;
  std::size_t max_positions_;
  std::size_t used_len_ = 0;
  std::vector<PageId> page_table_;
};

}  // namespace mctok::nn
