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

#ifndef SYNAPSE_INTERCONNECT_HPP_
#define SYNAPSE_INTERCONNECT_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "synapse/core.hpp"

namespace synapse {

/// Contiguous partition of PMUs into channels:
/// channel(p) = floor(p / ceil(P / C)).
class ChannelMap {
  public:
    ChannelMap(std::size_t pmus, std::size_t channels) : pmus_(pmus), channels_(channels) {
        if (pmus == 0 || channels == 0) throw ValidationError("PMU and channel counts must be positive");
        if (channels > pmus) channels_ = pmus;
        per_channel_ = (pmus_ + channels_ - 1) / channels_;
        channels_ = (pmus_ + per_channel_ - 1) / per_channel_;
    }

    std::size_t pmus() const noexcept { return pmus_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t channel_of(PmuId p) const {
        if (p >= pmus_) throw ValidationError("PMU id " + std::to_string(p) + " out of range");
        return p / per_channel_;
    }

  private:
    std::size_t pmus_;
    std::size_t channels_;
    std::size_t per_channel_ = 1;
};

struct RequestNetworkStats {
    std::uint64_t issued = 0;
    std::uint64_t delivered = 0;
    std::uint64_t deferrals = 0; ///< request-cycles spent waiting
};

/// Segmented-channel request network. Per cycle each channel grants one
/// request: the oldest deferred one if any, otherwise the first new arrival
/// in VMT-index order. Everything else waits in the channel's FIFO.
class RequestNetwork {
  public:
    RequestNetwork(ChannelMap map, std::size_t deferred_depth)
        : map_(map), deferred_(map.channels()), arrivals_(map.channels()), depth_(deferred_depth) {
        if (deferred_depth == 0) throw ValidationError("deferred FIFO depth must be positive");
    }

    const ChannelMap& channels() const noexcept { return map_; }
    const RequestNetworkStats& stats() const noexcept { return stats_; }

    /// False when the target channel's deferred FIFO could overflow; the
    /// producer must stall.
    bool can_offer(PmuId pmu) const {
        const std::size_t ch = map_.channel_of(pmu);
        return deferred_[ch].size() + arrivals_[ch].size() < depth_;
    }

    /// Queues a request for this cycle's arbitration. Callers offer in VMT order.
    void offer(LookupRequest req) {
        if (!can_offer(req.pmu_id)) throw ProtocolFault("request network overflow");
        const std::size_t ch = map_.channel_of(req.pmu_id);
        arrivals_[ch].push_back(std::move(req));
        ++stats_.issued;
    }

    /// Runs one cycle of arbitration. `deliver(req)` pushes into the target
    /// PMU's Q_r and returns false when it is full.
    void route(const std::function<bool(const LookupRequest&)>& deliver) {
        for (std::size_t ch = 0; ch < deferred_.size(); ++ch) {
            auto& fifo = deferred_[ch];
            auto& fresh = arrivals_[ch];
            if (!fifo.empty()) {
                if (deliver(fifo.front())) {
                    fifo.pop_front();
                    ++stats_.delivered;
                }
                for (auto& r : fresh) fifo.push_back(std::move(r));
            } else if (!fresh.empty()) {
                const bool ok = deliver(fresh.front());
                if (ok) ++stats_.delivered;
                for (std::size_t i = ok ? 1 : 0; i < fresh.size(); ++i) fifo.push_back(std::move(fresh[i]));
            }
            fresh.clear();
            stats_.deferrals += fifo.size();
        }
    }

    std::size_t deferred(std::size_t channel) const { return deferred_.at(channel).size(); }
    std::size_t deferred_total() const noexcept {
        std::size_t n = 0;
        for (const auto& f : deferred_) n += f.size();
        return n;
    }
    std::size_t pending_for(PmuId pmu) const {
        std::size_t n = 0;
        for (const auto& r : deferred_[map_.channel_of(pmu)]) n += r.pmu_id == pmu;
        for (const auto& r : arrivals_[map_.channel_of(pmu)]) n += r.pmu_id == pmu;
        return n;
    }

  private:
    ChannelMap map_;
    std::vector<std::deque<LookupRequest>> deferred_;
    std::vector<std::vector<LookupRequest>> arrivals_;
    std::size_t depth_;
    RequestNetworkStats stats_;
};

/// PMU -> VMT response network: contention-free, fixed latency, order
/// preserved.
class ResponseNetwork {
  public:
    explicit ResponseNetwork(unsigned latency = 1) : latency_(latency) {
        if (latency == 0) throw ValidationError("response latency must be >= 1");
    }

    void send(LookupResponse resp, Cycle now) { in_transit_.push_back({now + latency_, std::move(resp)}); }

    /// Responses whose delivery cycle is <= now, in send order.
    std::vector<LookupResponse> deliver(Cycle now) {
        std::vector<LookupResponse> out;
        while (!in_transit_.empty() && in_transit_.front().first <= now) {
            out.push_back(std::move(in_transit_.front().second));
            in_transit_.pop_front();
        }
        return out;
    }

    std::size_t in_transit() const noexcept { return in_transit_.size(); }
    unsigned latency() const noexcept { return latency_; }

  private:
    unsigned latency_;
    std::deque<std::pair<Cycle, LookupResponse>> in_transit_;
};

/// Shared bus between the PMUs' Q_m and the ELU's Q_m^G: one transfer per
/// cycle, round-robin over PMUs.
class MissBus {
  public:
    explicit MissBus(std::size_t pmus) : pmus_(pmus) {}

    template <typename PmuRange>
    bool transfer(PmuRange& pmus, ClockedQueue<LookupRequest>& global) {
        if (global.full()) return false;
        for (std::size_t k = 0; k < pmus_; ++k) {
            const std::size_t p = (next_ + k) % pmus_;
            auto& q = pmus[p].miss_queue();
            if (q.empty()) continue;
            global.try_push(q.pop());
            next_ = (p + 1) % pmus_;
            return true;
        }
        return false;
    }

  private:
    std::size_t pmus_;
    std::size_t next_ = 0;
};

} // namespace synapse

#endif // SYNAPSE_INTERCONNECT_HPP_
