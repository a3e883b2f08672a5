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

#ifndef SYNAPSE_METRICS_HPP_
#define SYNAPSE_METRICS_HPP_

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace synapse {

/// Per-lookup latency in cycles: log2 histogram plus exact percentiles.
class LatencyStats {
  public:
    void record(std::uint64_t cycles) {
        const std::size_t bucket = cycles == 0 ? 0 : static_cast<std::size_t>(std::bit_width(cycles));
        if (buckets_.size() <= bucket) buckets_.resize(bucket + 1, 0);
        ++buckets_[bucket];
        samples_.push_back(cycles);
        sorted_ = false;
    }

    std::size_t count() const noexcept { return samples_.size(); }

    /// Nearest-rank percentile, q in (0, 1]; 0 when empty.
    std::uint64_t percentile(double q) const {
        if (samples_.empty()) return 0;
        sort();
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples_.size())));
        rank = std::clamp<std::size_t>(rank, 1, samples_.size());
        return samples_[rank - 1];
    }

    double mean() const {
        if (samples_.empty()) return 0.0;
        double s = 0.0;
        for (auto v : samples_) s += static_cast<double>(v);
        return s / static_cast<double>(samples_.size());
    }

    /// Bucket 0 holds zero-cycle samples, bucket k holds [2^(k-1), 2^k).
    const std::vector<std::uint64_t>& buckets() const noexcept { return buckets_; }

  private:
    void sort() const {
        if (!sorted_) {
            std::sort(samples_.begin(), samples_.end());
            sorted_ = true;
        }
    }

    std::vector<std::uint64_t> buckets_;
    mutable std::vector<std::uint64_t> samples_;
    mutable bool sorted_ = true;
};

struct VmtMetrics {
    std::string name;
    std::uint64_t packets_in = 0;
    std::uint64_t packets_out = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t defaults = 0;
    std::uint64_t reorders = 0;
    std::uint64_t producer_stalls = 0;

    double hit_rate() const {
        const auto n = hits + misses;
        return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    }
};

struct WindowSample {
    std::uint64_t index = 0;
    std::uint64_t end_cycle = 0;
    std::uint64_t injected = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t bank_reads = 0;
    std::size_t active_pmus = 0;
};

struct Metrics {
    std::uint64_t cycles = 0;          ///< total simulated, including drain
    std::uint64_t duration_cycles = 0; ///< injection window
    double cycle_ns = 4.0;
    std::uint64_t injected = 0;
    std::uint64_t delivered = 0;
    std::uint64_t delivered_in_window = 0;
    std::uint64_t dropped_at_source = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t bank_reads = 0;
    std::uint64_t bank_reads_in_window = 0;
    std::uint64_t reallocations = 0;
    std::uint64_t pmu_moves = 0;
    std::uint64_t non_front_resolutions = 0;
    double active_pmus_mean = 0.0;
    unsigned node_bytes = 64;
    LatencyStats latency;
    std::vector<VmtMetrics> vmts;
    std::vector<WindowSample> windows;

    std::uint64_t hits() const {
        std::uint64_t h = 0;
        for (const auto& v : vmts) h += v.hits;
        return h;
    }
    std::uint64_t misses() const {
        std::uint64_t m = 0;
        for (const auto& v : vmts) m += v.misses;
        return m;
    }
    double hit_rate() const {
        const auto n = hits() + misses();
        return n ? static_cast<double>(hits()) / static_cast<double>(n) : 0.0;
    }
    double window_seconds() const { return static_cast<double>(duration_cycles) * cycle_ns * 1e-9; }
    /// Packets delivered to the sink during the injection window, per second.
    double throughput_pps() const {
        return duration_cycles ? static_cast<double>(delivered_in_window) / window_seconds() : 0.0;
    }
    /// External memory read bandwidth over the injection window, GB/s.
    double mem_gbps() const {
        return duration_cycles ? static_cast<double>(bank_reads_in_window) * node_bytes /
                                     (static_cast<double>(duration_cycles) * cycle_ns)
                               : 0.0;
    }
};

inline nlohmann::ordered_json to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["cycles"] = m.cycles;
    j["duration_cycles"] = m.duration_cycles;
    j["injected"] = m.injected;
    j["delivered"] = m.delivered;
    j["dropped_at_source"] = m.dropped_at_source;
    j["in_flight"] = m.in_flight;
    j["hits"] = m.hits();
    j["misses"] = m.misses();
    j["hit_rate"] = m.hit_rate();
    j["throughput_pps"] = m.throughput_pps();
    j["mem_gbps"] = m.mem_gbps();
    j["bank_reads"] = m.bank_reads;
    j["reallocations"] = m.reallocations;
    j["pmu_moves"] = m.pmu_moves;
    j["active_pmus_mean"] = m.active_pmus_mean;
    j["non_front_resolutions"] = m.non_front_resolutions;
    auto& lat = j["latency_cycles"];
    lat["count"] = m.latency.count();
    lat["mean"] = m.latency.mean();
    lat["p50"] = m.latency.percentile(0.50);
    lat["p95"] = m.latency.percentile(0.95);
    lat["p99"] = m.latency.percentile(0.99);
    lat["log2_buckets"] = m.latency.buckets();
    auto& vs = j["vmts"];
    vs = nlohmann::ordered_json::array();
    for (const auto& v : m.vmts) {
        nlohmann::ordered_json o;
        o["name"] = v.name;
        o["packets_in"] = v.packets_in;
        o["packets_out"] = v.packets_out;
        o["hits"] = v.hits;
        o["misses"] = v.misses;
        o["hit_rate"] = v.hit_rate();
        o["defaults"] = v.defaults;
        o["reorders"] = v.reorders;
        o["producer_stall_cycles"] = v.producer_stalls;
        vs.push_back(std::move(o));
    }
    return j;
}

inline void write_windows_csv(std::ostream& out, const Metrics& m) {
    out << "window,end_cycle,injected,delivered,dropped,hits,misses,hit_rate,throughput_pps,mem_gbps,active_pmus\n";
    std::uint64_t prev_end = 0;
    for (const auto& w : m.windows) {
        const double ns = static_cast<double>(w.end_cycle - prev_end) * m.cycle_ns;
        prev_end = w.end_cycle;
        const auto lookups = w.hits + w.misses;
        out << w.index << ',' << w.end_cycle << ',' << w.injected << ',' << w.delivered << ',' << w.dropped << ','
            << w.hits << ',' << w.misses << ','
            << (lookups ? static_cast<double>(w.hits) / static_cast<double>(lookups) : 0.0) << ','
            << (ns > 0 ? static_cast<double>(w.delivered) / ns * 1e9 : 0.0) << ','
            << (ns > 0 ? static_cast<double>(w.bank_reads) * m.node_bytes / ns : 0.0) << ',' << w.active_pmus
            << '\n';
    }
}

} // namespace synapse

#endif // SYNAPSE_METRICS_HPP_
