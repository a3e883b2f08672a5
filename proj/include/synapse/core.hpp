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

#ifndef SYNAPSE_CORE_HPP_
#define SYNAPSE_CORE_HPP_

#include <algorithm>
#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synapse/errors.hpp"
#include "synapse/hash.hpp"

namespace synapse {

using Cycle = std::uint64_t;
using ReqId = std::uint64_t;
using PmuId = std::uint32_t;
using VmtId = std::uint32_t;
using NodeId = std::uint32_t;

inline constexpr std::size_t kMaxKeyBytes = 64;

/// Fixed-capacity byte string; bytes at positions >= width() are always zero.
class Key {
  public:
    Key() = default;

    explicit Key(std::span<const std::uint8_t> bytes) {
        if (bytes.size() > kMaxKeyBytes)
            throw ValidationError("key wider than " + std::to_string(kMaxKeyBytes) + " bytes");
        std::copy(bytes.begin(), bytes.end(), bytes_.begin());
        width_ = static_cast<std::uint8_t>(bytes.size());
    }

    /// Big-endian encoding of `value` in `width` bytes (width <= 8).
    static Key from_uint(std::uint64_t value, std::size_t width) {
        if (width > 8) throw ValidationError("from_uint supports at most 8 bytes");
        Key k;
        k.width_ = static_cast<std::uint8_t>(width);
        for (std::size_t i = 0; i < width; ++i)
            k.bytes_[width - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
        return k;
    }

    static Key from_hex(std::string_view hex) {
        if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
        if (hex.size() % 2 != 0) throw ValidationError("odd-length hex key: " + std::string(hex));
        if (hex.size() / 2 > kMaxKeyBytes) throw ValidationError("hex key too wide");
        auto nibble = [&](char c) -> std::uint8_t {
            if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
            throw ValidationError("bad hex digit in key: " + std::string(hex));
        };
        Key k;
        k.width_ = static_cast<std::uint8_t>(hex.size() / 2);
        for (std::size_t i = 0; i < k.width_; ++i)
            k.bytes_[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
        return k;
    }

    std::string to_hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * width_);
        for (std::size_t i = 0; i < width_; ++i) {
            out.push_back(digits[bytes_[i] >> 4]);
            out.push_back(digits[bytes_[i] & 0xF]);
        }
        return out;
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t bit_width() const noexcept { return 8u * width_; }
    std::uint8_t operator[](std::size_t i) const noexcept { return bytes_[i]; }
    std::span<const std::uint8_t> bytes() const noexcept { return {bytes_.data(), width_}; }

    void set_byte(std::size_t i, std::uint8_t v) {
        if (i >= width_) throw ValidationError("key byte index out of range");
        bytes_[i] = v;
    }

    /// Bit `i` counted from the most significant bit of byte 0.
    bool bit(std::size_t i) const noexcept { return (bytes_[i / 8] >> (7 - i % 8)) & 1u; }

    void set_bit(std::size_t i, bool v) {
        if (i >= bit_width()) throw ValidationError("key bit index out of range");
        const auto m = static_cast<std::uint8_t>(1u << (7 - i % 8));
        bytes_[i / 8] = v ? (bytes_[i / 8] | m) : (bytes_[i / 8] & ~m);
    }

    /// Integer value of bits [first, first + count), MSB first; count <= 32.
    std::uint32_t bits(std::size_t first, std::size_t count) const noexcept {
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < count; ++i) v = (v << 1) | (bit(first + i) ? 1u : 0u);
        return v;
    }

    friend bool operator==(const Key& a, const Key& b) noexcept {
        return a.width_ == b.width_ && a.bytes_ == b.bytes_;
    }
    friend auto operator<=>(const Key& a, const Key& b) noexcept {
        if (auto c = a.width_ <=> b.width_; c != 0) return c;
        return a.bytes_ <=> b.bytes_;
    }

  private:
    std::array<std::uint8_t, kMaxKeyBytes> bytes_{};
    std::uint8_t width_ = 0;
};

struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept { return lookup3(k.bytes(), 0x5eedU); }
};

/// Per-byte validity mask over the maximum key width.
class ByteMask {
  public:
    ByteMask() = default;

    static ByteMask first(std::size_t width) {
        ByteMask m;
        for (std::size_t i = 0; i < std::min(width, kMaxKeyBytes); ++i) m.valid_.set(i);
        return m;
    }
    static ByteMask all() { return first(kMaxKeyBytes); }
    static ByteMask none() { return {}; }

    bool test(std::size_t i) const { return valid_.test(i); }
    ByteMask& set(std::size_t i, bool v = true) {
        valid_.set(i, v);
        return *this;
    }
    std::size_t count() const noexcept { return valid_.count(); }

    friend bool operator==(const ByteMask& a, const ByteMask& b) noexcept { return a.valid_ == b.valid_; }

  private:
    std::bitset<kMaxKeyBytes> valid_;
};

/// True iff a and b agree on every byte whose mask bit is set.
inline bool masked_eq(const Key& a, const Key& b, const ByteMask& mask) noexcept {
    for (std::size_t i = 0; i < kMaxKeyBytes; ++i)
        if (mask.test(i) && a[i] != b[i]) return false;
    return true;
}

/// Copy of `k` with every byte outside `mask` cleared.
inline Key apply_mask(const Key& k, const ByteMask& mask) {
    Key out = k;
    for (std::size_t i = 0; i < k.width(); ++i)
        if (!mask.test(i)) out.set_byte(i, 0);
    return out;
}

/// Index into an action segment. `not_found()` models the pointer to the
/// nops segment returned on a cache miss.
struct ActionRef {
    static constexpr std::uint32_t kNotFoundId = 0xFFFFFFFFU;

    std::uint32_t id = kNotFoundId;

    static constexpr ActionRef not_found() noexcept { return {}; }
    constexpr bool found() const noexcept { return id != kNotFoundId; }

    friend constexpr bool operator==(ActionRef, ActionRef) = default;
};

struct AppliedAction {
    VmtId vmt = 0;
    ActionRef action;
    friend bool operator==(const AppliedAction&, const AppliedAction&) = default;
};

/// Packet header vector travelling through the table graph.
struct Phv {
    std::uint64_t phv_id = 0;
    std::uint64_t flow_id = 0;
    std::uint32_t path_seed = 0;
    std::vector<Key> keys; ///< indexed by VMT id
    Cycle arrival_cycle = 0;
    NodeId current_node = 0;
    std::vector<AppliedAction> actions;
};

struct LookupRequest {
    ReqId req_id = 0;
    Key key;
    ByteMask mask;
    VmtId vmt_id = 0;
    PmuId pmu_id = 0;
};

/// `valid == false` is the early miss notification and always carries NOT_FOUND.
struct LookupResponse {
    ReqId req_id = 0;
    ActionRef action;
    bool valid = false;
    VmtId vmt_id = 0;
    PmuId pmu_id = 0;

    static LookupResponse hit(const LookupRequest& r, ActionRef a) { return {r.req_id, a, true, r.vmt_id, r.pmu_id}; }
    static LookupResponse miss(const LookupRequest& r) {
        return {r.req_id, ActionRef::not_found(), false, r.vmt_id, r.pmu_id};
    }
};

/// Bounded FIFO. A push into a full queue is refused, which is the
/// backpressure signal; nothing is ever dropped silently.
template <typename T>
class ClockedQueue {
  public:
    explicit ClockedQueue(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ValidationError("queue capacity must be positive");
    }

    bool try_push(T item) {
        if (items_.size() >= capacity_) return false;
        items_.push_back(std::move(item));
        return true;
    }

    T pop() {
        if (items_.empty()) throw ProtocolFault("pop from empty queue");
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }

    const T& front() const { return items_.front(); }
    T& front() { return items_.front(); }
    bool empty() const noexcept { return items_.empty(); }
    bool full() const noexcept { return items_.size() >= capacity_; }
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t free_slots() const noexcept { return capacity_ - items_.size(); }

    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

  private:
    std::size_t capacity_;
    std::deque<T> items_;
};

} // namespace synapse

#endif // SYNAPSE_CORE_HPP_
