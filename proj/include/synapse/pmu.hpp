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

#ifndef SYNAPSE_PMU_HPP_
#define SYNAPSE_PMU_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>

#include "synapse/cam.hpp"
#include "synapse/core.hpp"

namespace synapse {

struct PmuTiming {
    unsigned lookup_latency = 2;      ///< tau_c, local cycles
    unsigned initiation_interval = 2; ///< II_c, local cycles
    double clock_ratio = 1.0;         ///< PMU clock / pipeline clock
};

struct PmuQueueDepths {
    std::size_t request = 16;
    std::size_t response = 16;
    std::size_t miss = 16;
};

struct PmuConfig {
    std::size_t block_size = 256;
    PmuTiming timing;
    PmuQueueDepths queues;
    bool negative_caching = false;
};

enum class PmuPhase { free, transient, associated };

inline const char* to_string(PmuPhase p) {
    switch (p) {
    case PmuPhase::free: return "free";
    case PmuPhase::transient: return "transient";
    case PmuPhase::associated: return "associated";
    }
    return "?";
}

struct PmuState {
    PmuPhase phase = PmuPhase::free;
    VmtId vmt = 0;
    ByteMask mask;
    ActionRef default_action{0};

    static PmuState free() { return {}; }
    static PmuState transient() { return {PmuPhase::transient, 0, {}, {}}; }
    static PmuState associated(VmtId vmt, ByteMask mask, ActionRef default_action) {
        return {PmuPhase::associated, vmt, mask, default_action};
    }
};

/// Resolution of a missed key coming back from the external lookup unit.
struct MissResolution {
    LookupRequest request;
    ActionRef action; ///< NOT_FOUND when no rule matched
};

struct PmuStats {
    std::uint64_t lookups = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t fills = 0;
    std::uint64_t evictions = 0;
    std::uint64_t output_stalls = 0;
};

/// Physical match unit: an LRU CAM shard behind request/response/miss queues.
///
/// Lookups start at most once per II_c local cycles and finish tau_c local
/// cycles later. A lookup only starts when Q_p and Q_m both have room for
/// every in-flight result plus the new one, so completions never block; a
/// full output queue leaves the request at the head of Q_r instead.
class Pmu {
  public:
    Pmu(PmuId id, const PmuConfig& cfg)
        : id_(id),
          cfg_(cfg),
          cam_(cfg.block_size),
          q_request_(cfg.queues.request),
          q_response_(cfg.queues.response),
          q_miss_(cfg.queues.miss) {
        if (cfg.timing.lookup_latency < 1 || cfg.timing.initiation_interval < 1)
            throw ValidationError("PMU latency and initiation interval must be >= 1");
        if (!(cfg.timing.clock_ratio > 0.0)) throw ValidationError("PMU clock ratio must be positive");
        ratio_ppm_ = static_cast<std::uint64_t>(std::llround(cfg.timing.clock_ratio * kPpm));
        if (ratio_ppm_ == 0) throw ValidationError("PMU clock ratio too small");
    }

    PmuId id() const noexcept { return id_; }
    const PmuState& state() const noexcept { return state_; }
    const CamBlock& cam() const noexcept { return cam_; }
    CamBlock& cam() noexcept { return cam_; }
    const PmuStats& stats() const noexcept { return stats_; }
    std::size_t outstanding_misses() const noexcept { return outstanding_misses_; }
    std::size_t in_flight() const noexcept { return pipeline_.size(); }

    ClockedQueue<LookupRequest>& request_queue() noexcept { return q_request_; }
    ClockedQueue<LookupResponse>& response_queue() noexcept { return q_response_; }
    ClockedQueue<LookupRequest>& miss_queue() noexcept { return q_miss_; }
    const ClockedQueue<LookupRequest>& request_queue() const noexcept { return q_request_; }
    const ClockedQueue<LookupResponse>& response_queue() const noexcept { return q_response_; }
    const ClockedQueue<LookupRequest>& miss_queue() const noexcept { return q_miss_; }

    /// Entry point of the request network. Requests are refused when Q_r is
    /// full, when the unit is free, or when they target a different VMT.
    bool accept_request(const LookupRequest& req) {
        if (state_.phase == PmuPhase::free || req.vmt_id != state_.vmt) return false;
        return q_request_.try_push(req);
    }

    /// Cache fill and final response for a previously missed key.
    bool accept_resolution(const MissResolution& r) {
        if (r.request.pmu_id != id_) throw ProtocolFault("resolution delivered to the wrong PMU");
        if (outstanding_misses_ == 0) throw ProtocolFault("resolution without an outstanding miss");
        if (q_response_.free_slots() <= pipeline_.size()) return false;
        fill(r.request.key, r.action);
        const ActionRef reply = r.action.found() ? r.action : state_.default_action;
        q_response_.try_push(LookupResponse::hit(r.request, reply));
        --outstanding_misses_;
        return true;
    }

    /// Inserts a resolved rule. NOT_FOUND is cached (as the default action)
    /// only when negative caching is enabled.
    void fill(const Key& key, ActionRef action) {
        if (!action.found()) {
            if (!cfg_.negative_caching) return;
            action = state_.default_action;
        }
        ++stats_.fills;
        if (cam_.insert(key, action)) ++stats_.evictions;
    }

    /// Legal moves: free->associated (flushes the CAM and installs the mask),
    /// associated->transient, transient->free once drained().
    bool set_state(const PmuState& target) {
        switch (state_.phase) {
        case PmuPhase::free:
            if (target.phase != PmuPhase::associated) return false;
            cam_.flush(target.mask);
            state_ = target;
            return true;
        case PmuPhase::associated:
            if (target.phase != PmuPhase::transient) return false;
            state_.phase = PmuPhase::transient;
            return true;
        case PmuPhase::transient:
            if (target.phase != PmuPhase::free || !drained()) return false;
            state_ = PmuState::free();
            return true;
        }
        return false;
    }

    bool drained() const noexcept {
        return q_request_.empty() && pipeline_.empty() && q_response_.empty() && q_miss_.empty() &&
               outstanding_misses_ == 0;
    }

    /// Advances one pipeline cycle; the local clock fires floor(ratio) or
    /// ceil(ratio) times depending on the accumulated phase.
    void tick() {
        phase_ppm_ += ratio_ppm_;
        while (phase_ppm_ >= kPpm) {
            phase_ppm_ -= kPpm;
            local_step();
        }
    }

    std::uint64_t local_cycle() const noexcept { return local_cycle_; }

    /// Same as `cycles` calls to tick() on an idle unit, in O(1).
    void skip_idle(std::uint64_t cycles) {
        if (!q_request_.empty() || !pipeline_.empty()) throw ProtocolFault("skip_idle on a busy PMU");
        const std::uint64_t total = phase_ppm_ + ratio_ppm_ * cycles;
        local_cycle_ += total / kPpm;
        phase_ppm_ = total % kPpm;
    }

  private:
    static constexpr std::uint64_t kPpm = 1'000'000;

    struct InFlight {
        LookupRequest req;
        std::optional<ActionRef> result;
        std::uint64_t done;
    };

    void local_step() {
        ++local_cycle_;
        while (!pipeline_.empty() && pipeline_.front().done <= local_cycle_) {
            InFlight f = std::move(pipeline_.front());
            pipeline_.pop_front();
            if (f.result) {
                q_response_.try_push(LookupResponse::hit(f.req, *f.result));
            } else {
                q_response_.try_push(LookupResponse::miss(f.req));
                q_miss_.try_push(std::move(f.req));
                ++outstanding_misses_;
            }
        }
        if (state_.phase == PmuPhase::free || q_request_.empty() || local_cycle_ < next_issue_) return;
        const std::size_t reserved = pipeline_.size() + 1;
        if (q_response_.free_slots() < reserved || q_miss_.free_slots() < reserved) {
            ++stats_.output_stalls;
            return;
        }
        LookupRequest req = q_request_.pop();
        auto result = cam_.lookup(req.key, req.mask);
        ++stats_.lookups;
        ++(result ? stats_.hits : stats_.misses);
        pipeline_.push_back({std::move(req), result, local_cycle_ + cfg_.timing.lookup_latency});
        next_issue_ = local_cycle_ + cfg_.timing.initiation_interval;
    }

    PmuId id_;
    PmuConfig cfg_;
    PmuState state_;
    CamBlock cam_;
    ClockedQueue<LookupRequest> q_request_;
    ClockedQueue<LookupResponse> q_response_;
    ClockedQueue<LookupRequest> q_miss_;
    std::deque<InFlight> pipeline_;
    std::uint64_t local_cycle_ = 0;
    std::uint64_t next_issue_ = 0;
    std::uint64_t ratio_ppm_ = kPpm;
    std::uint64_t phase_ppm_ = 0;
    std::size_t outstanding_misses_ = 0;
    PmuStats stats_;
};

} // namespace synapse

#endif // SYNAPSE_PMU_HPP_
