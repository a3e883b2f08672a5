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

#ifndef SYNAPSE_EXPERIMENTS_HPP_
#define SYNAPSE_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <ostream>
#include <string>
#include <vector>

#include "synapse/config.hpp"
#include "synapse/engine.hpp"
#include "synapse/metrics.hpp"
#include "synapse/usl.hpp"

namespace synapse {

// ---------------------------------------------------------------------------
// Block size x capacity sweep

struct SweepRow {
    std::size_t block_size = 0;
    std::size_t capacity = 0;
    bool valid = false;
    double hit_rate = 0.0;
    std::uint64_t p50 = 0;
    std::uint64_t p95 = 0;
    double mem_gbps = 0.0;
};

/// One run per (block, capacity) cell over a shared workload. Capacity is
/// per VMT; cells where it is not a positive multiple of the block size are
/// reported as invalid.
inline std::vector<SweepRow> experiment_sweep(const SimConfig& base, const std::vector<std::size_t>& blocks,
                                              const std::vector<std::size_t>& capacities) {
    std::vector<SweepRow> rows;
    if (blocks.empty() || capacities.empty()) return rows;
    const Workload wl = build_workload(base);
    for (std::size_t block : blocks) {
        for (std::size_t cap : capacities) {
            SweepRow r{block, cap};
            if (block == 0 || cap == 0 || cap % block != 0) {
                rows.push_back(r);
                continue;
            }
            SimConfig c = base;
            c.pmu.block_size = block;
            c.pmu_count = cap / block * c.vmts.size();
            for (auto& v : c.vmts) v.pmus = cap / block;
            c.opt_enabled = false;
            const Metrics m = Simulator(c, wl).run();
            r.valid = true;
            r.hit_rate = m.hit_rate();
            r.p50 = m.latency.percentile(0.50);
            r.p95 = m.latency.percentile(0.95);
            r.mem_gbps = m.mem_gbps();
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "block_size,vmt_capacity,hit_rate,p50_cycles,p95_cycles,mem_gbps\n";
    out.precision(12);
    for (const auto& r : rows) {
        out << r.block_size << ',' << r.capacity << ',';
        if (r.valid)
            out << r.hit_rate << ',' << r.p50 << ',' << r.p95 << ',' << r.mem_gbps << '\n';
        else
            out << "skipped,,,\n";
    }
}

// ---------------------------------------------------------------------------
// Input-rate stress

struct StressRow {
    double input_rate_pps = 0.0;
    std::size_t pmu_count = 0;
    double throughput_pps = 0.0;
    double mem_gbps = 0.0;
    double hit_rate = 0.0;
};

/// Throughput against offered rate; the flow population grows with the
/// rate (flows_per_mpps), so higher rates also mean more distinct keys.
inline std::vector<StressRow> experiment_stress(const SimConfig& base, const std::vector<double>& rates_mpps,
                                                const std::vector<std::size_t>& pmu_counts) {
    std::vector<StressRow> rows;
    for (std::size_t n : pmu_counts) {
        for (double rate : rates_mpps) {
            SimConfig c = base;
            c.pmu_count = n * c.vmts.size();
            for (auto& v : c.vmts) v.pmus = n;
            c.rate_mpps = rate;
            c.flows = static_cast<std::size_t>(rate * c.stress_flows_per_mpps + 0.5);
            c.profile.clear();
            c.opt_enabled = false;
            const Metrics m = run_simulation(c);
            rows.push_back({rate * 1e6, n, m.throughput_pps(), m.mem_gbps(), m.hit_rate()});
        }
    }
    return rows;
}

inline void write_stress_csv(std::ostream& out, const std::vector<StressRow>& rows) {
    out << "input_rate_pps,pmu_count,throughput_pps,mem_gbps\n";
    out.precision(12);
    for (const auto& r : rows) out << r.input_rate_pps << ',' << r.pmu_count << ',' << r.throughput_pps << ',' << r.mem_gbps << '\n';
}

// ---------------------------------------------------------------------------
// Static provisioning vs runtime optimizer

struct CalibrationSample {
    UslSample sample;
    double hit_rate = 0.0;
};

/// Measures throughput over a grid of (constant offered load, PMU count)
/// using the configured flow model, for the capacity-model regression.
inline std::vector<CalibrationSample> calibrate(const SimConfig& base, const std::vector<double>& loads_mpps,
                                                const std::vector<std::size_t>& pmus) {
    std::vector<CalibrationSample> out;
    for (std::size_t n : pmus) {
        for (double load : loads_mpps) {
            SimConfig c = base;
            c.pmu_count = n * c.vmts.size();
            for (auto& v : c.vmts) v.pmus = n;
            c.opt_enabled = false;
            c.duration_us = base.adaptive_calibration_us;
            c.profile = "0:" + detail::format_config_value(load);
            const Metrics m = run_simulation(c);
            const double us = static_cast<double>(m.duration_cycles) * m.cycle_ns * 1e-3;
            out.push_back({{static_cast<double>(m.injected) / us, m.throughput_pps() * 1e-6, static_cast<int>(n)},
                           m.hit_rate()});
        }
    }
    return out;
}

struct AdaptiveResult {
    Metrics static_run;
    Metrics adaptive_run;
    UslParams usl;
    bool fitted = false;
    std::vector<CalibrationSample> calibration;
};

/// Runs the same profile twice: every PMU statically assigned, and the
/// optimizer reallocating from a calibrated capacity model.
inline AdaptiveResult experiment_adaptive(const SimConfig& base) {
    if (base.profile.empty()) throw ValidationError("adaptive experiment needs traffic.profile");
    AdaptiveResult r;
    r.usl = parse_usl("optimizer.usl", base.usl);
    const auto loads = parse_list<double>("adaptive.calibration_loads_mpps", base.adaptive_calibration_loads_mpps);
    const auto pmus = parse_list<std::size_t>("adaptive.calibration_pmus", base.adaptive_calibration_pmus);
    if (!loads.empty() && !pmus.empty()) {
        r.calibration = calibrate(base, loads, pmus);
        std::vector<UslSample> samples;
        for (const auto& c : r.calibration) samples.push_back(c.sample);
        try {
            r.usl = fit_usl(samples);
            r.fitted = true;
        } catch (const FitError&) {
            r.fitted = false;
        }
    }

    const Workload wl = build_workload(base);
    SimConfig s = base;
    s.opt_enabled = false;
    for (auto& v : s.vmts) v.pmus = 0;
    r.static_run = Simulator(s, wl).run();

    SimConfig a = base;
    a.opt_enabled = true;
    a.opt_period = base.adaptive_opt_period;
    a.opt_headroom = base.adaptive_headroom;
    std::ostringstream usl;
    usl.precision(17);
    usl << r.usl.alpha0 << ',' << r.usl.alpha1 << ',' << r.usl.beta0 << ',' << r.usl.beta1;
    a.usl = usl.str();
    for (auto& v : a.vmts) {
        v.pmus = 0;
        v.usl.clear();
    }
    r.adaptive_run = Simulator(a, wl).run();
    return r;
}

inline void write_adaptive_csv(std::ostream& out, const AdaptiveResult& r) {
    out << "window,end_cycle,offered_pps,static_hit_rate,static_throughput_pps,static_active_pmus,"
           "adaptive_hit_rate,adaptive_throughput_pps,adaptive_active_pmus\n";
    out.precision(12);
    const auto& s = r.static_run.windows;
    const auto& a = r.adaptive_run.windows;
    const double ns_per_cycle = r.static_run.cycle_ns;
    auto rate = [](const WindowSample& w) {
        const auto n = w.hits + w.misses;
        return n ? static_cast<double>(w.hits) / static_cast<double>(n) : 0.0;
    };
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < std::min(s.size(), a.size()); ++i) {
        const double sec = static_cast<double>(s[i].end_cycle - prev) * ns_per_cycle * 1e-9;
        prev = s[i].end_cycle;
        out << i << ',' << s[i].end_cycle << ',' << static_cast<double>(s[i].injected) / sec << ',' << rate(s[i]) << ','
            << static_cast<double>(s[i].delivered) / sec << ',' << s[i].active_pmus << ',' << rate(a[i]) << ','
            << static_cast<double>(a[i].delivered) / sec << ',' << a[i].active_pmus << '\n';
    }
}

inline void write_calibration_csv(std::ostream& out, const std::vector<CalibrationSample>& samples) {
    out << "pmu_count,offered_mpps,throughput_mpps,hit_rate\n";
    out.precision(12);
    for (const auto& c : samples)
        out << c.sample.pmus << ',' << c.sample.load << ',' << c.sample.throughput << ',' << c.hit_rate << '\n';
}

} // namespace synapse

#endif // SYNAPSE_EXPERIMENTS_HPP_
