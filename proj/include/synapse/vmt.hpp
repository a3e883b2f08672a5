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

#ifndef SYNAPSE_VMT_HPP_
#define SYNAPSE_VMT_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "synapse/core.hpp"
#include "synapse/hash.hpp"

namespace synapse {

struct LookupEntry {
    bool valid = false;
    PmuId pmu = 0;
    friend bool operator==(const LookupEntry&, const LookupEntry&) = default;
};

/// The VMT's 2^N-entry steering table: bucket index -> PMU id.
class LookupTable {
  public:
    explicit LookupTable(std::size_t size = 256) : entries_(size) {
        if (size == 0 || (size & (size - 1)) != 0)
            throw ValidationError("lookup table size must be a power of two, got " + std::to_string(size));
    }

    std::size_t size() const noexcept { return entries_.size(); }
    const LookupEntry& operator[](std::size_t i) const { return entries_[i]; }
    LookupEntry& operator[](std::size_t i) { return entries_[i]; }

    /// Position of bucket i on the 32-bit hash ring.
    std::uint32_t ring_position(std::size_t i) const noexcept {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(i) << 32) / entries_.size());
    }

    friend bool operator==(const LookupTable&, const LookupTable&) = default;

  private:
    std::vector<LookupEntry> entries_;
};

/// Consistent-hash ring with `vnodes_per_pmu` virtual nodes per PMU.
class HashRing {
  public:
    struct VirtualNode {
        std::uint32_t position;
        PmuId pmu;
        friend auto operator<=>(const VirtualNode&, const VirtualNode&) = default;
    };

    HashRing(std::span<const PmuId> pmus, std::uint32_t vnodes_per_pmu, std::uint32_t seed)
        : vnodes_per_pmu_(vnodes_per_pmu), seed_(seed) {
        if (vnodes_per_pmu == 0) throw ValidationError("vnodes_per_pmu must be positive");
        nodes_.reserve(pmus.size() * vnodes_per_pmu);
        for (PmuId p : pmus)
            for (std::uint32_t v = 0; v < vnodes_per_pmu; ++v) nodes_.push_back({vnode_position(p, v, seed), p});
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    }

    static std::uint32_t vnode_position(PmuId pmu, std::uint32_t vnode, std::uint32_t seed) {
        return lookup3_words(pmu, vnode, seed);
    }

    bool empty() const noexcept { return nodes_.empty(); }
    std::span<const VirtualNode> nodes() const noexcept { return nodes_; }

    /// Index into nodes() of the first virtual node clockwise from `position`
    /// (inclusive), wrapping past the top of the ring.
    std::size_t successor_index(std::uint32_t position) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), position,
                                   [](const VirtualNode& n, std::uint32_t pos) { return n.position < pos; });
        return it == nodes_.end() ? 0 : static_cast<std::size_t>(it - nodes_.begin());
    }

    std::optional<PmuId> owner(std::uint32_t position) const {
        if (nodes_.empty()) return std::nullopt;
        return nodes_[successor_index(position)].pmu;
    }

  private:
    std::vector<VirtualNode> nodes_;
    std::uint32_t vnodes_per_pmu_;
    std::uint32_t seed_;
};

struct RingParams {
    std::uint32_t vnodes_per_pmu = 64;
    std::uint32_t seed = 0;
};

/// Precomputes every bucket's owner by a binary search over the ring.
inline LookupTable build_lookup_table(std::span<const PmuId> pmus, std::size_t size, RingParams ring = {}) {
    LookupTable table(size);
    if (pmus.empty()) return table;
    const HashRing hr(pmus, ring.vnodes_per_pmu, ring.seed);
    for (std::size_t i = 0; i < size; ++i) table[i] = {true, *hr.owner(table.ring_position(i))};
    return table;
}

/// Moves `table` (built from `old_set`) to the table for `new_set`, touching
/// only buckets that can change owner: those owned by a removed PMU and those
/// falling in an arc claimed by a virtual node of an added PMU. Returns the
/// indices whose entry actually changed, ascending.
inline std::vector<std::size_t> update_lookup_table(LookupTable& table, std::span<const PmuId> old_set,
                                                    std::span<const PmuId> new_set, RingParams ring = {}) {
    std::vector<PmuId> olds(old_set.begin(), old_set.end());
    std::vector<PmuId> news(new_set.begin(), new_set.end());
    std::sort(olds.begin(), olds.end());
    std::sort(news.begin(), news.end());
    std::vector<PmuId> removed;
    std::vector<PmuId> added;
    std::set_difference(olds.begin(), olds.end(), news.begin(), news.end(), std::back_inserter(removed));
    std::set_difference(news.begin(), news.end(), olds.begin(), olds.end(), std::back_inserter(added));

    std::vector<std::size_t> changed;
    if (removed.empty() && added.empty()) return changed;

    const std::size_t v = table.size();
    if (news.empty()) {
        for (std::size_t i = 0; i < v; ++i)
            if (table[i].valid) {
                table[i] = {};
                changed.push_back(i);
            }
        return changed;
    }

    const HashRing hr(news, ring.vnodes_per_pmu, ring.seed);
    std::vector<bool> candidate(v, false);
    for (std::size_t i = 0; i < v; ++i)
        if (!table[i].valid || std::binary_search(removed.begin(), removed.end(), table[i].pmu)) candidate[i] = true;

    // Bucket i sits at position i*2^32/v, so the buckets inside the arc
    // (lo, hi] are a contiguous (possibly wrapping) index range.
    auto first_bucket_at_or_after = [&](std::uint64_t pos) {
        return static_cast<std::size_t>((pos * v + (std::uint64_t{1} << 32) - 1) >> 32);
    };
    const auto nodes = hr.nodes();
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (!std::binary_search(added.begin(), added.end(), nodes[n].pmu)) continue;
        const std::uint64_t hi = nodes[n].position;
        const std::uint64_t lo = nodes[n == 0 ? nodes.size() - 1 : n - 1].position;
        auto mark = [&](std::uint64_t from_excl, std::uint64_t to_incl) {
            for (std::size_t i = first_bucket_at_or_after(from_excl + 1); i < v && table.ring_position(i) <= to_incl; ++i)
                candidate[i] = true;
        };
        if (n == 0) {
            // wrapping arc (lo, 2^32) + [0, hi]
            if (lo < 0xFFFFFFFFULL) mark(lo, 0xFFFFFFFFULL);
            for (std::size_t i = 0; i < v && table.ring_position(i) <= hi; ++i) candidate[i] = true;
        } else if (lo < hi) {
            mark(lo, hi);
        }
    }

    for (std::size_t i = 0; i < v; ++i) {
        if (!candidate[i]) continue;
        const LookupEntry next{true, *hr.owner(table.ring_position(i))};
        if (!(table[i] == next)) {
            table[i] = next;
            changed.push_back(i);
        }
    }
    return changed;
}

inline std::size_t bucket_of(const Key& key, std::size_t table_size, std::uint32_t hash_seed = 0) {
    return lookup3(key.bytes(), hash_seed) & (table_size - 1);
}

/// Steering decision: a PMU id, or nullopt for "apply the default action".
inline std::optional<PmuId> classify_key(const LookupTable& table, const Key& key, std::uint32_t hash_seed = 0) {
    const LookupEntry& e = table[bucket_of(key, table.size(), hash_seed)];
    if (!e.valid) return std::nullopt;
    return e.pmu;
}

inline Phv apply_action(Phv phv, VmtId vmt, ActionRef action) {
    if (!action.found()) throw ProtocolFault("NOT_FOUND reached the action unit of VMT " + std::to_string(vmt));
    phv.actions.push_back({vmt, action});
    return phv;
}

struct VmtConfig {
    VmtId id = 0;
    std::string name = "vmt0";
    std::size_t table_size = 256;
    RingParams ring;
    std::uint32_t hash_seed = 0;
    std::size_t await_depth = 64;
    ActionRef default_action{0};
    std::size_t key_width = 4;
    bool strict_order = false;
};

enum class EmitPath { hit, resolved_miss, default_action };

struct Emission {
    Phv phv;
    EmitPath path = EmitPath::hit;
    Cycle latency = 0; ///< produce -> emit, lookups only
};

struct VmtCounters {
    std::uint64_t packets_in = 0;
    std::uint64_t packets_out = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t defaults = 0;
    std::uint64_t producer_stalls = 0;
    std::uint64_t reorders = 0;
    std::uint64_t non_front_resolutions = 0;
};

/// Runtime state of one virtual match table: steering, the request producer,
/// and the response consumer with its FIFO await buffer.
class Vmt {
  public:
    explicit Vmt(VmtConfig cfg) : cfg_(std::move(cfg)), table_(cfg_.table_size) {
        if (cfg_.await_depth == 0) throw ValidationError("await depth must be positive");
        if (cfg_.key_width == 0 || cfg_.key_width > kMaxKeyBytes) throw ValidationError("bad key width");
    }

    const VmtConfig& config() const noexcept { return cfg_; }
    VmtId id() const noexcept { return cfg_.id; }
    ByteMask mask() const { return ByteMask::first(cfg_.key_width); }

    const LookupTable& table() const noexcept { return table_; }
    const std::vector<PmuId>& pmus() const noexcept { return pmus_; }

    /// Replaces the associated PMU set; returns the buckets that changed.
    std::vector<std::size_t> set_pmus(std::vector<PmuId> pmus) {
        std::sort(pmus.begin(), pmus.end());
        auto changed = update_lookup_table(table_, pmus_, pmus, cfg_.ring);
        pmus_ = std::move(pmus);
        return changed;
    }

    std::optional<PmuId> classify(const Key& key) const { return classify_key(table_, key, cfg_.hash_seed); }

    bool can_produce() const noexcept { return records_.size() < cfg_.await_depth; }
    std::size_t outstanding() const noexcept { return records_.size(); }
    std::size_t await_occupancy() const noexcept { return await_.size(); }
    std::size_t in_flight() const noexcept { return records_.size() + held_.size(); }
    const VmtCounters& counters() const noexcept { return counters_; }
    void note_stall() noexcept { ++counters_.producer_stalls; }

    /// Registers `phv` as outstanding and builds its lookup request. On a full
    /// await structure returns nullopt and leaves `phv` untouched.
    std::optional<LookupRequest> produce_request(Phv& phv, PmuId pmu, Cycle now) {
        if (!can_produce()) return std::nullopt;
        if (phv.keys.size() <= cfg_.id) throw ProtocolFault("PHV carries no key for VMT " + cfg_.name);
        LookupRequest req;
        req.req_id = (static_cast<ReqId>(cfg_.id) << 40) | next_req_++;
        req.key = phv.keys[cfg_.id];
        req.mask = mask();
        req.vmt_id = cfg_.id;
        req.pmu_id = pmu;
        records_.emplace(req.req_id, Record{std::move(phv), next_seq_++, now, false});
        ++counters_.packets_in;
        return req;
    }

    /// Default-action path for keys steered to an invalid bucket.
    std::vector<Emission> emit_default(Phv phv) {
        ++counters_.packets_in;
        ++counters_.defaults;
        Emission e{apply_action(std::move(phv), cfg_.id, cfg_.default_action), EmitPath::default_action, 0};
        return release(next_seq_++, std::move(e));
    }

    std::vector<Emission> consume_response(const LookupResponse& resp, Cycle now) {
        auto it = records_.find(resp.req_id);
        if (it == records_.end())
            throw ProtocolFault("VMT " + cfg_.name + ": response for unknown req_id " + std::to_string(resp.req_id));
        Record& rec = it->second;

        if (!resp.valid) {
            if (resp.action.found()) throw ProtocolFault("miss notification carrying an action");
            if (rec.buffered) throw ProtocolFault("duplicate miss notification for req " + std::to_string(resp.req_id));
            rec.buffered = true;
            await_.push_back(resp.req_id);
            ++counters_.misses;
            return {};
        }

        EmitPath path = EmitPath::hit;
        if (rec.buffered) {
            path = EmitPath::resolved_miss;
            if (await_.front() == resp.req_id) {
                await_.pop_front();
            } else {
                ++counters_.non_front_resolutions;
                await_.erase(std::find(await_.begin(), await_.end(), resp.req_id));
            }
        } else {
            ++counters_.hits;
        }
        Emission e{apply_action(std::move(rec.phv), cfg_.id, resp.action), path, now - rec.produced};
        const std::uint64_t seq = rec.seq;
        records_.erase(it);
        return release(seq, std::move(e));
    }

  private:
    struct Record {
        Phv phv;
        std::uint64_t seq;
        Cycle produced;
        bool buffered;
    };

    std::vector<Emission> release(std::uint64_t seq, Emission e) {
        std::vector<Emission> out;
        if (!cfg_.strict_order) {
            if (any_emitted_ && seq < max_emitted_) ++counters_.reorders;
            max_emitted_ = any_emitted_ ? std::max(max_emitted_, seq) : seq;
            any_emitted_ = true;
            ++counters_.packets_out;
            out.push_back(std::move(e));
            return out;
        }
        held_.emplace(seq, std::move(e));
        while (!held_.empty() && held_.begin()->first == next_release_) {
            out.push_back(std::move(held_.begin()->second));
            held_.erase(held_.begin());
            ++next_release_;
            ++counters_.packets_out;
        }
        return out;
    }

    VmtConfig cfg_;
    LookupTable table_;
    std::vector<PmuId> pmus_;
    std::unordered_map<ReqId, Record> records_;
    std::deque<ReqId> await_;
    std::map<std::uint64_t, Emission> held_;
    std::uint64_t next_req_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_release_ = 0;
    std::uint64_t max_emitted_ = 0;
    bool any_emitted_ = false;
    VmtCounters counters_;
};

} // namespace synapse

#endif // SYNAPSE_VMT_HPP_
