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

#ifndef SYNAPSE_ELU_HPP_
#define SYNAPSE_ELU_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "synapse/core.hpp"
#include "synapse/pmu.hpp"
#include "synapse/trie.hpp"

namespace synapse {

/// Outstanding request buffer: a ring with `commit` (oldest) and `issue`
/// (next free) cursors. Entries complete in any order; replies leave only
/// from the commit cursor, so they come out in issue order.
class Orb {
  public:
    struct Entry {
        LookupRequest request;
        ActionRef action;
        bool valid = false;
    };

    explicit Orb(std::size_t capacity) : ring_(capacity) {
        if (capacity == 0) throw ValidationError("ORB capacity must be positive");
    }

    std::size_t capacity() const noexcept { return ring_.size(); }
    std::size_t outstanding() const noexcept { return static_cast<std::size_t>(issue_ - commit_); }
    bool full() const noexcept { return outstanding() == ring_.size(); }
    bool empty() const noexcept { return issue_ == commit_; }
    std::uint64_t commit_cursor() const noexcept { return commit_; }
    std::uint64_t issue_cursor() const noexcept { return issue_; }

    bool issue(const LookupRequest& req) {
        if (full()) return false;
        if (index_.contains(req.req_id)) throw ProtocolFault("request " + std::to_string(req.req_id) + " issued twice");
        ring_[issue_ % ring_.size()] = {req, ActionRef::not_found(), false};
        index_.emplace(req.req_id, issue_);
        ++issue_;
        return true;
    }

    void complete(ReqId req_id, ActionRef action) {
        auto it = index_.find(req_id);
        if (it == index_.end()) throw ProtocolFault("ORB completion for unknown request " + std::to_string(req_id));
        Entry& e = ring_[it->second % ring_.size()];
        if (e.valid) throw ProtocolFault("ORB double completion for request " + std::to_string(req_id));
        e.action = action;
        e.valid = true;
    }

    /// Pops up to `max_replies` consecutive valid entries from the commit cursor.
    std::vector<MissResolution> commit(std::size_t max_replies) {
        std::vector<MissResolution> out;
        while (out.size() < max_replies && !empty()) {
            Entry& e = ring_[commit_ % ring_.size()];
            if (!e.valid) break;
            out.push_back({e.request, e.action});
            index_.erase(e.request.req_id);
            ++commit_;
        }
        return out;
    }

  private:
    std::vector<Entry> ring_;
    std::unordered_map<ReqId, std::uint64_t> index_;
    std::uint64_t commit_ = 0;
    std::uint64_t issue_ = 0;
};

struct MemoryModel {
    unsigned banks = 8;
    unsigned latency = 50;            ///< pipeline cycles per access
    unsigned initiation_interval = 2; ///< per bank port
    unsigned node_bytes = 64;
    double cycle_time_ns = 4.0;
    unsigned replication = 1; ///< trie copies; multiplies per-bank ports
};

/// External memory traffic in GB/s.
inline double memory_bandwidth(std::uint64_t bank_reads, unsigned node_bytes, std::uint64_t elapsed_cycles,
                               double cycle_time_ns) {
    if (elapsed_cycles == 0) throw ValidationError("elapsed cycles must be positive");
    return static_cast<double>(bank_reads) * node_bytes / (static_cast<double>(elapsed_cycles) * cycle_time_ns);
}

struct EluConfig {
    MemoryModel memory;
    unsigned stride = 4;
    std::size_t orb_size = 64;
    std::size_t drain_width = 1;
    unsigned overhead = 4;
    std::size_t miss_queue = 64;  ///< Q_m^G
    std::size_t reply_queue = 16; ///< Q_l^G
};

struct EluStats {
    std::uint64_t issued = 0;
    std::uint64_t replies = 0;
    std::uint64_t bank_reads = 0;
};

/// External lookup unit. Misses enter through Q_m^G, register in the ORB and
/// walk their policy trie one level per memory access. A level cannot start
/// before the previous one returned, but different lookups overlap across
/// banks. Replies leave through Q_l^G in issue order.
class Elu {
  public:
    explicit Elu(EluConfig cfg)
        : cfg_(cfg), orb_(cfg.orb_size), q_miss_(cfg.miss_queue), q_reply_(cfg.reply_queue) {
        if (cfg.memory.banks == 0 || cfg.memory.latency == 0 || cfg.memory.initiation_interval == 0 ||
            cfg.memory.replication == 0)
            throw ValidationError("memory model parameters must be positive");
        if (cfg.drain_width == 0) throw ValidationError("ORB drain width must be positive");
        ports_.assign(static_cast<std::size_t>(cfg.memory.banks) * cfg.memory.replication, 0);
    }

    const EluConfig& config() const noexcept { return cfg_; }
    const EluStats& stats() const noexcept { return stats_; }
    const Orb& orb() const noexcept { return orb_; }
    std::size_t pending() const noexcept { return lookups_.size(); }

    ClockedQueue<LookupRequest>& miss_queue() noexcept { return q_miss_; }
    ClockedQueue<MissResolution>& reply_queue() noexcept { return q_reply_; }
    const ClockedQueue<LookupRequest>& miss_queue() const noexcept { return q_miss_; }
    const ClockedQueue<MissResolution>& reply_queue() const noexcept { return q_reply_; }

    void install_policy(VmtId vmt, Trie trie) {
        if (trie.banks() != cfg_.memory.banks) throw ValidationError("trie bank count differs from memory model");
        policies_.insert_or_assign(vmt, std::move(trie));
    }
    const Trie& policy(VmtId vmt) const {
        auto it = policies_.find(vmt);
        if (it == policies_.end()) throw ProtocolFault("no policy installed for VMT " + std::to_string(vmt));
        return it->second;
    }

    bool idle() const noexcept { return q_miss_.empty() && orb_.empty() && q_reply_.empty(); }

    /// Records the cycle every access starts, per bank; test instrumentation.
    void record_access_starts(bool on) { record_starts_ = on; }
    const std::map<unsigned, std::vector<Cycle>>& access_starts() const noexcept { return starts_; }

    void tick(Cycle now) {
        // 1. register one new miss in the ORB
        if (!q_miss_.empty() && !orb_.full()) {
            LookupRequest req = q_miss_.pop();
            TrieLookup walk = policy(req.vmt_id).lookup(req.key);
            orb_.issue(req);
            ++stats_.issued;
            lookups_.push_back({req.req_id, walk.action, std::move(walk.accesses), 0, now, 0});
        }

        // 2. start memory accesses, oldest lookup first
        for (auto& l : lookups_) {
            if (l.next_access >= l.accesses.size() || l.ready > now) continue;
            const unsigned bank = l.accesses[l.next_access].bank;
            Cycle* port = nullptr;
            for (unsigned r = 0; r < cfg_.memory.replication; ++r) {
                Cycle& p = ports_[static_cast<std::size_t>(bank) * cfg_.memory.replication + r];
                if (p <= now) {
                    port = &p;
                    break;
                }
            }
            if (!port) continue;
            *port = now + cfg_.memory.initiation_interval;
            l.ready = now + cfg_.memory.latency;
            ++l.next_access;
            ++stats_.bank_reads;
            if (record_starts_) starts_[bank].push_back(now);
            if (l.next_access == l.accesses.size()) l.finish = l.ready + cfg_.overhead;
        }

        // 3. completions, in any order
        for (auto it = lookups_.begin(); it != lookups_.end();) {
            if (it->next_access == it->accesses.size() && it->finish <= now) {
                orb_.complete(it->req_id, it->action);
                it = lookups_.erase(it);
            } else {
                ++it;
            }
        }

        // 4. in-order replies onto Q_l^G
        const std::size_t room = std::min(cfg_.drain_width, q_reply_.free_slots());
        for (auto& r : orb_.commit(room)) {
            q_reply_.try_push(std::move(r));
            ++stats_.replies;
        }
    }

  private:
    struct Walk {
        ReqId req_id;
        ActionRef action;
        std::vector<BankAccess> accesses;
        std::size_t next_access;
        Cycle ready;
        Cycle finish;
    };

    EluConfig cfg_;
    Orb orb_;
    ClockedQueue<LookupRequest> q_miss_;
    ClockedQueue<MissResolution> q_reply_;
    std::map<VmtId, Trie> policies_;
    std::vector<Walk> lookups_;
    std::vector<Cycle> ports_;
    EluStats stats_;
    bool record_starts_ = false;
    std::map<unsigned, std::vector<Cycle>> starts_;
};

} // namespace synapse

#endif // SYNAPSE_ELU_HPP_
