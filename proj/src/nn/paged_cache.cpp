// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/paged_cache.hpp"

#include <stdexcept>
#include <string>

#include "mctok/common.hpp"

namespace mctok::nn {

PagePool::PagePool(std::size_t page_size, std::size_t num_pages, std::size_t layers, std::size_t kv_dim)
    : page_size_(page_size), num_pages_(num_pages), layers_(layers), kv_dim_(kv_dim) {
  if (page_size == 0 || num_pages == 0 || layers == 0 || kv_dim == 0) {
    throw std::invalid_argument("PagePool: all dimensions must be positive");
  }
  data_.assign(num_pages * layers * 2 * page_size * kv_dim, 0.0f);
  free_list_.reserve(num_pages);
  // Lowest ids are handed out first.
  for (std::size_t i = num_pages; i-- > 0;) free_list_.push_back(static_cast<PageId>(i));
  in_use_.assign(num_pages, false);
}

PageId PagePool::allocate() {
  std::lock_guard lock(mu_);
  if (free_list_.empty()) {
    throw CapacityError("page pool exhausted (" + std::to_string(num_pages_) + " pages of " +
                        std::to_string(page_size_) + " positions)");
  }
  const PageId id = free_list_.back();
  free_list_.pop_back();
  in_use_[id] = true;
  return id;
}

void PagePool::release(PageId page) {
  std::lock_guard lock(mu_);
  if (page >= num_pages_) throw ContractViolation("release of unknown page " + std::to_string(page));
  if (!in_use_[page]) throw ContractViolation("double free of page " + std::to_string(page));
  in_use_[page] = false;
  free_list_.push_back(page);
}

std::size_t PagePool::pages_free() const {
  std::lock_guard lock(mu_);
  return free_list_.size();
}

std::size_t PagePool::pages_in_use() const {
  std::lock_guard lock(mu_);
  return num_pages_ - free_list_.size();
}

AttentionCache::AttentionCache(PagePool& pool, std::size_t max_positions)
    : pool_(&pool), page_size_(pool.page_size()), max_positions_(max_positions) {
  page_table_.reserve((max_positions + page_size_ - 1) / page_size_);
}

AttentionCache::~AttentionCache() {
  if (pool_ != nullptr) release();
}

AttentionCache::AttentionCache(AttentionCache&& other) noexcept
    : pool_(other.pool_),
      page_size_(other.page_size_),
      max_positions_(other.max_positions_),
      used_len_(other.used_len_),
      page_table_(std::move(other.page_table_)) {
  other.pool_ = nullptr;
  other.used_len_ = 0;
  other.page_table_.clear();
}

std::size_t AttentionCache::extend(std::size_t n) {
  if (used_len_ + n > max_positions_) {
    throw CapacityError("sequence would exceed max_seq (" + std::to_string(used_len_ + n) + " > " +
                        std::to_string(max_positions_) + ")");
  }
  const std::size_t start = used_len_;
  const std::size_t needed = (used_len_ + n + page_size_ - 1) / page_size_;
  const std::size_t held_before = page_table_.size();
  try {
    while (page_table_.size() < needed) page_table_.push_back(pool_->allocate());
  } catch (...) {
    while (page_table_.size() > held_before) {
      pool_->release(page_table_.back());
      page_table_.pop_back();
    }
    throw;
  }
  used_len_ += n;
  return start;
}

void AttentionCache::release() {
  for (PageId id : page_table_) pool_->release(id);
  page_table_.clear();
  used_len_ = 0;
}

}  // namespace mctok::nn
