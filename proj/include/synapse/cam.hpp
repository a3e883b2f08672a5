/*
 * Copyright 2026 The Synapse Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYNAPSE_CAM_HPP_
#define SYNAPSE_CAM_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "synapse/core.hpp"

namespace synapse {

struct CamEntry {
    Key key;
    ActionRef action;
    friend bool operator==(const CamEntry&, const CamEntry&) = default;
};

/// Fully associative (key, action) store with LRU replacement.
///
/// Occupied slots are threaded on an intrusive doubly linked list, head =
/// most recently used. Lookups under the block's installed mask resolve
/// through a hash index, which gives the same verdict as a parallel CAM
/// search since all stored keys were inserted under that mask; any other
/// mask falls back to a scan in MRU order.
class CamBlock {
  public:
    explicit CamBlock(std::size_t capacity, ByteMask mask = ByteMask::all()) : mask_(mask), slots_(capacity) {
        if (capacity == 0) throw ValidationError("CAM block capacity must be positive");
        reset_free_list();
    }

    std::size_t capacity() const noexcept { return slots_.size(); }
    std::size_t size() const noexcept { return index_.size(); }
    const ByteMask& mask() const noexcept { return mask_; }

    std::optional<ActionRef> lookup(const Key& key, const ByteMask& mask) {
        const int s = find(key, mask);
        if (s < 0) return std::nullopt;
        touch(s);
        return slots_[s].entry.action;
    }

    std::optional<ActionRef> peek(const Key& key, const ByteMask& mask) const {
        const int s = find(key, mask);
        if (s < 0) return std::nullopt;
        return slots_[s].entry.action;
    }

    /// Inserts at the LRU head. A key already present is refreshed in place;
    /// otherwise a full block evicts and returns its LRU tail.
    std::optional<CamEntry> insert(const Key& key, ActionRef action) {
        const Key stored = apply_mask(key, mask_);
        if (auto it = index_.find(stored); it != index_.end()) {
            slots_[it->second].entry.action = action;
            touch(it->second);
            return std::nullopt;
        }
        std::optional<CamEntry> evicted;
        if (free_.empty()) {
            const int victim = tail_;
            evicted = slots_[victim].entry;
            unlink(victim);
            index_.erase(slots_[victim].entry.key);
            free_.push_back(victim);
        }
        const int s = free_.back();
        free_.pop_back();
        slots_[s].entry = {stored, action};
        index_.emplace(stored, s);
        push_front(s);
        return evicted;
    }

    /// Empties the block and installs a new key mask.
    void flush(ByteMask mask) {
        mask_ = mask;
        index_.clear();
        head_ = tail_ = -1;
        reset_free_list();
    }

    /// Entries from most to least recently used.
    std::vector<CamEntry> lru_order() const {
        std::vector<CamEntry> out;
        for (int s = head_; s >= 0; s = slots_[s].next) out.push_back(slots_[s].entry);
        return out;
    }

  private:
    struct Slot {
        CamEntry entry;
        int prev = -1;
        int next = -1;
    };

    int find(const Key& key, const ByteMask& mask) const {
        if (mask == mask_) {
            auto it = index_.find(apply_mask(key, mask_));
            return it == index_.end() ? -1 : it->second;
        }
        for (int s = head_; s >= 0; s = slots_[s].next)
            if (masked_eq(slots_[s].entry.key, key, mask)) return s;
        return -1;
    }

    void reset_free_list() {
        free_.clear();
        for (int s = static_cast<int>(slots_.size()) - 1; s >= 0; --s) free_.push_back(s);
    }

    void unlink(int s) {
        Slot& n = slots_[s];
        (n.prev >= 0 ? slots_[n.prev].next : head_) = n.next;
        (n.next >= 0 ? slots_[n.next].prev : tail_) = n.prev;
        n.prev = n.next = -1;
    }

    void push_front(int s) {
        slots_[s].prev = -1;
        slots_[s].next = head_;
        if (head_ >= 0) slots_[head_].prev = s;
        head_ = s;
        if (tail_ < 0) tail_ = s;
    }

    void touch(int s) {
        if (s == head_) return;
        unlink(s);
        push_front(s);
    }

    ByteMask mask_;
    std::vector<Slot> slots_;
    std::vector<int> free_;
    std::unordered_map<Key, int, KeyHash> index_;
    int head_ = -1;
    int tail_ = -1;
};

} // namespace synapse

#endif // SYNAPSE_CAM_HPP_
