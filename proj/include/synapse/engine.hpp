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

#ifndef SYNAPSE_ENGINE_HPP_
#define SYNAPSE_ENGINE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "synapse/cfg.hpp"
#include "synapse/config.hpp"
#include "synapse/core.hpp"
#include "synapse/elu.hpp"
#include "synapse/errors.hpp"
#include "synapse/interconnect.hpp"
#include "synapse/metrics.hpp"
#include "synapse/optimizer.hpp"
#include "synapse/pmu.hpp"
#include "synapse/rules.hpp"
#include "synapse/traffic.hpp"
#include "synapse/trie.hpp"
#include "synapse/vmt.hpp"

namespace synapse {

// ---------------------------------------------------------------------------
// Workload assembly

struct Workload {
    RuleSchema schema;
    std::vector<Rule> rules;
    Trace trace;
    CfgGraph cfg;
};

inline std::vector<Rule> build_rules(const SimConfig& c, const RuleSchema& schema) {
    if (!c.rules_file.empty()) {
        std::ifstream in(c.rules_file);
        if (!in) throw ValidationError("cannot open ruleset " + c.rules_file);
        return read_ruleset(schema, in);
    }
    RulesetSpec spec;
    spec.schema = schema;
    spec.count = c.rule_count;
    spec.histogram = parse_histogram(c.histogram);
    spec.seed = c.rules_seed ? c.rules_seed : c.seed;
    return gen_ruleset(spec);
}

inline FlowSizeDistribution build_size_dist(const SimConfig& c) {
    if (c.size_dist == "cdf") return read_cdf(c.cdf_file);
    if (c.size_dist == "pareto") return FlowSizeDistribution::pareto(c.size_param, c.size_min, c.size_max);
    if (c.size_dist == "uniform")
        return FlowSizeDistribution::uniform(static_cast<std::size_t>(c.size_min), static_cast<std::size_t>(c.size_max));
    return FlowSizeDistribution::zipf(c.size_param, static_cast<std::size_t>(c.size_max));
}

inline RateProfile parse_profile(const std::string& text) {
    RateProfile p;
    for (const auto& item : parse_list<std::string>("traffic.profile", text)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("profile point '" + item + "' needs 't_us:rate_mpps'");
        const double t = detail::parse_config_value<double>("traffic.profile", item.substr(0, colon));
        const double r = detail::parse_config_value<double>("traffic.profile", item.substr(colon + 1));
        p.points.emplace_back(t * 1e3, r * 1e6);
    }
    p.validate();
    return p;
}

inline Trace build_trace(const SimConfig& c, const RuleSchema& schema, const std::vector<Rule>& rules) {
    if (!c.trace_file.empty()) return read_trace(c.trace_file, c.seed);
    KeyBinding binding;
    binding.schema = schema;
    binding.rules = rules;
    binding.zipf_exponent = c.zipf_exponent;
    binding.keys_per_rule = c.keys_per_rule;
    const auto dist = build_size_dist(c);
    if (!c.profile.empty()) {
        ProfileTraceSpec spec;
        spec.profile = parse_profile(c.profile);
        spec.flow_lifetime_ns = c.flow_lifetime_us * 1e3;
        spec.duration_ns = c.duration_us * 1e3;
        spec.seed = c.seed;
        return gen_profile_trace(dist, spec, binding);
    }
    TraceSpec spec;
    spec.flow_count = c.flows;
    spec.target_rate_pps = c.rate_mpps * 1e6;
    spec.duration_ns = c.duration_us * 1e3;
    spec.seed = c.seed;
    if (spec.duration_ns <= 0.0) return {};
    return gen_trace(dist, spec, binding);
}

/// The CFG file's node names must be exactly the VMT names; nodes are
/// renumbered to VMT order. Without a file the VMTs form a chain.
inline CfgGraph build_cfg(const SimConfig& c) {
    std::vector<std::string> names;
    for (const auto& v : c.vmts) names.push_back(v.name);
    if (c.cfg_file.empty()) return CfgGraph::chain(names);
    const CfgGraph file = read_cfg(c.cfg_file);
    if (file.size() != names.size()) throw ValidationError("CFG nodes do not match the VMT list");
    CfgGraph g;
    std::vector<std::size_t> map(file.size());
    for (const auto& n : names) g.add_node(n);
    for (std::size_t i = 0; i < file.size(); ++i) {
        const auto idx = g.index_of(file.name(i));
        if (!idx) throw ValidationError("CFG node '" + file.name(i) + "' is not a VMT");
        map[i] = *idx;
    }
    for (const auto& e : file.source_edges()) g.set_source_edge(map[e.to], e.prob);
    for (std::size_t i = 0; i < file.size(); ++i) {
        for (const auto& e : file.out_edges(i)) g.set_edge(map[i], e.to == CfgGraph::kSink ? e.to : map[e.to], e.prob);
        if (const auto& p = file.usl(i)) g.set_usl(map[i], *p);
    }
    g.validate();
    return g;
}

inline Workload build_workload(const SimConfig& c) {
    Workload w;
    w.schema = RuleSchema::parse(c.schema);
    w.rules = build_rules(c, w.schema);
    w.trace = build_trace(c, w.schema, w.rules);
    w.cfg = build_cfg(c);
    return w;
}

// ---------------------------------------------------------------------------
// Simulator

/// The cycle loop. Per cycle, in order: traffic injection, VMT produce,
/// request network, PMU ticks, miss bus, ELU tick, resolution delivery,
/// response network, VMT consume, PHV hand-off, reallocation progress and,
/// at window boundaries, counters and the optimizer.
class Simulator {
  public:
    Simulator(SimConfig cfg, Workload wl)
        : cfg_(std::move(cfg)),
          wl_(std::move(wl)),
          channels_(cfg_.pmu_count, cfg_.channels),
          reqnet_(channels_, cfg_.deferred_depth),
          respnet_(cfg_.response_latency),
          missbus_(cfg_.pmu_count),
          elu_(cfg_.elu),
          counters_(cfg_.vmts.size()) {
        validate_config(cfg_);
        if (wl_.cfg.size() != cfg_.vmts.size()) throw ValidationError("CFG size differs from VMT count");
        wl_.cfg.validate();
        const std::size_t key_width = wl_.schema.key_width();
        for (std::size_t i = 0; i < cfg_.vmts.size(); ++i) {
            const auto& s = cfg_.vmts[i];
            VmtConfig vc;
            vc.id = static_cast<VmtId>(i);
            vc.name = s.name;
            vc.table_size = std::size_t{1} << s.table_exp;
            vc.ring = RingParams{s.vnodes, s.ring_seed};
            vc.hash_seed = s.hash_seed;
            vc.await_depth = s.await_depth;
            vc.default_action = ActionRef{s.default_action};
            vc.key_width = key_width;
            vc.strict_order = cfg_.strict_order;
            vmts_.emplace_back(vc);
            names_.push_back(s.name);
            usl_.push_back(s.usl.empty() ? parse_usl("optimizer.usl", cfg_.usl) : parse_usl("vmt.usl", s.usl));
            if (const auto& p = wl_.cfg.usl(i); p && s.usl.empty()) usl_.back() = *p;
        }
        ingress_.resize(vmts_.size());
        for (std::size_t p = 0; p < cfg_.pmu_count; ++p) pmus_.emplace_back(static_cast<PmuId>(p), cfg_.pmu);

        const Trie trie = compile_policy(wl_.schema, wl_.rules, cfg_.elu.stride, cfg_.elu.memory.banks);
        for (std::size_t i = 0; i < vmts_.size(); ++i) elu_.install_policy(static_cast<VmtId>(i), trie);

        set_allocation(initial_allocation());
        for (const auto& pkt : wl_.trace.packets)
            if (to_cycle(pkt.time_ns) < cfg_.duration_cycles()) ++trace_end_;
        trace_index_ = 0;
    }

    const SimConfig& config() const noexcept { return cfg_; }
    const Workload& workload() const noexcept { return wl_; }
    Cycle now() const noexcept { return now_; }
    Vmt& vmt(std::size_t i) { return vmts_.at(i); }
    Pmu& pmu(std::size_t i) { return pmus_.at(i); }
    Elu& elu() { return elu_; }
    const Metrics& metrics() const noexcept { return m_; }
    std::size_t active_pmus() const {
        std::size_t n = 0;
        for (const auto& p : pmus_) n += p.state().phase != PmuPhase::free;
        return n;
    }
    Allocation allocation() const {
        Allocation a(vmts_.size(), 0);
        for (std::size_t v = 0; v < vmts_.size(); ++v) a[v] = static_cast<int>(vmts_[v].pmus().size());
        return a;
    }

    /// Even split of the unassigned pool over VMTs without an explicit count.
    Allocation initial_allocation() const {
        Allocation a(vmts_.size(), 0);
        std::size_t fixed = 0;
        std::size_t open = 0;
        for (std::size_t v = 0; v < vmts_.size(); ++v) {
            a[v] = static_cast<int>(cfg_.vmts[v].pmus);
            fixed += cfg_.vmts[v].pmus;
            open += cfg_.vmts[v].pmus == 0;
        }
        if (open) {
            const std::size_t pool = cfg_.pmu_count - fixed;
            std::size_t k = 0;
            for (std::size_t v = 0; v < vmts_.size(); ++v)
                if (cfg_.vmts[v].pmus == 0) a[v] = static_cast<int>(pool / open + (k++ < pool % open ? 1 : 0));
        }
        return a;
    }

    /// Starts a transition towards `target`. Moves whose PMU is still busy
    /// complete in later cycles; returns false while a previous plan runs.
    bool request_allocation(const Allocation& target) {
        if (!pending_.empty()) return false;
        if (allocation_total(target) > static_cast<int>(cfg_.pmu_count))
            throw ValidationError("allocation exceeds the PMU pool");
        std::vector<std::vector<PmuId>> current;
        for (const auto& v : vmts_) current.push_back(v.pmus());
        std::vector<PmuId> free_pool;
        for (const auto& p : pmus_)
            if (p.state().phase == PmuPhase::free) free_pool.push_back(p.id());
        const auto plan = plan_reallocation(current, target, free_pool);
        if (plan.empty()) return true;
        ++m_.reallocations;
        m_.pmu_moves += plan.moves.size();
        for (const auto& mv : plan.moves) {
            if (mv.from != kNoVmt) {
                auto owned = vmts_[mv.from].pmus();
                owned.erase(std::find(owned.begin(), owned.end(), mv.pmu));
                vmts_[mv.from].set_pmus(owned);
                pmus_[mv.pmu].set_state(PmuState::transient());
                pending_.push_back(mv);
            } else {
                associate(mv.pmu, mv.to);
            }
        }
        advance_pending();
        return true;
    }

    bool reallocation_pending() const noexcept { return !pending_.empty(); }

    /// Inserts a rule into the PMU owning `key` for VMT `v` (cache warm-up).
    void prewarm(std::size_t v, const Key& key, ActionRef action) {
        const auto owner = vmts_.at(v).classify(key);
        if (!owner) throw ValidationError("cannot prewarm: no PMU owns this key");
        pmus_[*owner].fill(key, action);
    }

    bool finished() const {
        return trace_index_ >= trace_end_ && now_ >= cfg_.duration_cycles() && idle();
    }

    void step() {
        if (now_ == cfg_.duration_cycles()) snapshot_window_reads();
        active_cycles_ += active_pmus();
        inject();
        produce();
        reqnet_.route([this](const LookupRequest& r) { return pmus_[r.pmu_id].accept_request(r); });
        for (auto& p : pmus_) p.tick();
        missbus_.transfer(pmus_, elu_.miss_queue());
        elu_.tick(now_);
        auto& replies = elu_.reply_queue();
        if (!replies.empty() && pmus_[replies.front().request.pmu_id].accept_resolution(replies.front()))
            replies.pop();
        for (auto& p : pmus_)
            if (!p.response_queue().empty()) respnet_.send(p.response_queue().pop(), now_);
        for (const auto& resp : respnet_.deliver(now_)) handle(vmts_.at(resp.vmt_id).consume_response(resp, now_), resp.vmt_id);
        for (auto& [node, phv] : handoff_) ingress_[node].push_back(std::move(phv));
        handoff_.clear();
        advance_pending();
        ++now_;
        if (now_ % cfg_.window_cycles() == 0) close_window();
    }

    Metrics run() {
        const Cycle limit_base = cfg_.duration_cycles();
        while (!finished()) {
            if (idle() && pending_.empty()) skip_idle();
            if (finished()) break;
            step();
            const Cycle last = std::max(limit_base, last_injection_);
            if (now_ > last + cfg_.drain_timeout) throw DeadlockError("drain timeout exceeded", diagnostics());
        }
        return finalize();
    }

    Metrics finalize() {
        m_.cycles = now_;
        m_.duration_cycles = cfg_.duration_cycles();
        m_.cycle_ns = cfg_.cycle_ns();
        m_.node_bytes = cfg_.elu.memory.node_bytes;
        m_.bank_reads = elu_.stats().bank_reads;
        m_.in_flight = in_flight();
        if (!reads_snapshot_) snapshot_window_reads();
        m_.non_front_resolutions = 0;
        m_.vmts.clear();
        for (const auto& v : vmts_) {
            const auto& c = v.counters();
            m_.vmts.push_back({v.config().name, c.packets_in, c.packets_out, c.hits, c.misses, c.defaults, c.reorders,
                               c.producer_stalls});
            m_.non_front_resolutions += c.non_front_resolutions;
        }
        m_.active_pmus_mean = now_ ? static_cast<double>(active_cycles_) / static_cast<double>(now_) : 0.0;
        return m_;
    }

    /// Packets inside the system: ingress queues, VMT records, reorder holds.
    std::uint64_t in_flight() const {
        std::uint64_t n = handoff_.size();
        for (const auto& q : ingress_) n += q.size();
        for (const auto& v : vmts_) n += v.in_flight();
        return n;
    }

    bool idle() const {
        if (in_flight() != 0 || reqnet_.deferred_total() != 0 || respnet_.in_transit() != 0 || !elu_.idle() ||
            elu_.pending() != 0)
            return false;
        for (const auto& p : pmus_)
            if (!p.drained()) return false;
        return true;
    }

    std::string diagnostics() const {
        std::ostringstream os;
        os << "cycle " << now_ << ", in-flight packets " << in_flight() << '\n';
        for (std::size_t v = 0; v < vmts_.size(); ++v)
            os << "  vmt " << vmts_[v].config().name << ": ingress " << ingress_[v].size() << ", outstanding "
               << vmts_[v].outstanding() << ", await " << vmts_[v].await_occupancy() << ", pmus "
               << vmts_[v].pmus().size() << '\n';
        for (const auto& p : pmus_)
            os << "  pmu " << p.id() << " [" << to_string(p.state().phase) << " vmt " << p.state().vmt << "]: Q_r "
               << p.request_queue().size() << ", in-flight " << p.in_flight() << ", Q_p " << p.response_queue().size()
               << ", Q_m " << p.miss_queue().size() << ", outstanding misses " << p.outstanding_misses() << '\n';
        os << "  elu: Q_m^G " << elu_.miss_queue().size() << ", ORB " << elu_.orb().outstanding() << ", walks "
           << elu_.pending() << ", Q_l^G " << elu_.reply_queue().size() << '\n';
        os << "  request network deferred " << reqnet_.deferred_total() << ", responses in transit "
           << respnet_.in_transit() << ", pending moves " << pending_.size() << '\n';
        return os.str();
    }

  private:
    Cycle to_cycle(std::uint64_t time_ns) const {
        return static_cast<Cycle>(static_cast<double>(time_ns) * cfg_.frequency_mhz / 1000.0);
    }

    void set_allocation(const Allocation& a) {
        if (allocation_total(a) > static_cast<int>(cfg_.pmu_count)) throw ValidationError("allocation exceeds pool");
        PmuId next = 0;
        for (std::size_t v = 0; v < a.size(); ++v)
            for (int k = 0; k < a[v]; ++k) associate(next++, static_cast<VmtId>(v));
    }

    void associate(PmuId pmu, VmtId v) {
        const auto& vmt = vmts_[v];
        if (!pmus_[pmu].set_state(PmuState::associated(v, vmt.mask(), vmt.config().default_action)))
            throw ProtocolFault("PMU " + std::to_string(pmu) + " cannot associate from its current state");
        auto owned = vmt.pmus();
        owned.push_back(pmu);
        vmts_[v].set_pmus(owned);
    }

    /// Transient PMUs become free once drained with nothing left in the
    /// request network for them, then join their destination VMT.
    void advance_pending() {
        for (auto it = pending_.begin(); it != pending_.end();) {
            Pmu& p = pmus_[it->pmu];
            if (p.drained() && reqnet_.pending_for(it->pmu) == 0 && p.set_state(PmuState::free())) {
                if (it->to != kNoVmt) associate(it->pmu, it->to);
                it = pending_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void inject() {
        const auto& pkts = wl_.trace.packets;
        while (trace_index_ < trace_end_ && to_cycle(pkts[trace_index_].time_ns) <= now_) {
            const TracePacket& pkt = pkts[trace_index_++];
            const FlowSpec& flow = wl_.trace.flows[pkt.flow_id];
            ++m_.injected;
            ++win_.injected;
            last_injection_ = now_;
            const std::size_t first = route_phv(flow.path_seed, wl_.cfg, std::nullopt);
            counters_.record(counters_.source(), first == CfgGraph::kSink ? counters_.sink() : first);
            Phv phv;
            phv.phv_id = next_phv_++;
            phv.flow_id = pkt.flow_id;
            phv.path_seed = flow.path_seed;
            phv.keys.assign(vmts_.size(), flow.key);
            phv.arrival_cycle = now_;
            if (first == CfgGraph::kSink) {
                deliver();
                continue;
            }
            if (ingress_[first].size() >= cfg_.ingress_depth) {
                ++m_.dropped_at_source;
                ++win_.dropped;
                continue;
            }
            phv.current_node = static_cast<NodeId>(first);
            ingress_[first].push_back(std::move(phv));
        }
    }

    void produce() {
        for (std::size_t v = 0; v < vmts_.size(); ++v) {
            auto& q = ingress_[v];
            if (q.empty()) continue;
            Vmt& vmt = vmts_[v];
            Phv& phv = q.front();
            const auto target = vmt.classify(phv.keys[v]);
            if (!target) {
                Phv out = std::move(phv);
                q.pop_front();
                handle(vmt.emit_default(std::move(out)), static_cast<VmtId>(v));
                continue;
            }
            if (!vmt.can_produce() || !reqnet_.can_offer(*target)) {
                vmt.note_stall();
                continue;
            }
            auto req = vmt.produce_request(phv, *target, now_);
            q.pop_front();
            reqnet_.offer(std::move(*req));
        }
    }

    void handle(std::vector<Emission> out, VmtId v) {
        for (auto& e : out) {
            if (e.path != EmitPath::default_action) m_.latency.record(e.latency);
            const std::size_t next = route_phv(e.phv.path_seed, wl_.cfg, static_cast<std::size_t>(v));
            counters_.record(v, next == CfgGraph::kSink ? counters_.sink() : next);
            if (next == CfgGraph::kSink) {
                deliver();
            } else {
                e.phv.current_node = static_cast<NodeId>(next);
                handoff_.emplace_back(next, std::move(e.phv));
            }
        }
    }

    void snapshot_window_reads() {
        m_.bank_reads_in_window = elu_.stats().bank_reads;
        reads_snapshot_ = true;
    }

    void deliver() {
        ++m_.delivered;
        ++win_.delivered;
        if (now_ < cfg_.duration_cycles()) ++m_.delivered_in_window;
    }

    /// Jumps over cycles in which nothing can happen: up to the next arrival,
    /// window boundary or the end of the injection window.
    void skip_idle() {
        Cycle target = std::numeric_limits<Cycle>::max();
        if (trace_index_ < trace_end_) target = to_cycle(wl_.trace.packets[trace_index_].time_ns);
        if (now_ < cfg_.duration_cycles()) target = std::min(target, cfg_.duration_cycles());
        const Cycle w = cfg_.window_cycles();
        target = std::min(target, (now_ / w + 1) * w - 1);
        if (target == std::numeric_limits<Cycle>::max() || target <= now_) return;
        const Cycle gap = target - now_;
        for (auto& p : pmus_) p.skip_idle(gap);
        active_cycles_ += gap * active_pmus();
        now_ = target;
    }

    void close_window() {
        std::uint64_t hits = 0, misses = 0;
        for (const auto& v : vmts_) {
            hits += v.counters().hits;
            misses += v.counters().misses;
        }
        const std::uint64_t reads = elu_.stats().bank_reads;
        win_.index = m_.windows.size();
        win_.end_cycle = now_;
        win_.hits = hits - prev_hits_;
        win_.misses = misses - prev_misses_;
        win_.bank_reads = reads - prev_reads_;
        win_.active_pmus = active_pmus();
        prev_hits_ = hits;
        prev_misses_ = misses;
        prev_reads_ = reads;
        m_.windows.push_back(win_);
        period_injected_ += win_.injected;
        win_ = {};

        transitions_ = estimate_transition_matrix(counters_, transitions_.empty() ? nullptr : &transitions_,
                                                  cfg_.opt_gamma);
        counters_.reset();
        if (cfg_.opt_enabled && m_.windows.size() % cfg_.opt_period == 0) run_optimizer();
        if (m_.windows.size() % cfg_.opt_period == 0) period_injected_ = 0;
    }

    void run_optimizer() {
        const double period_us = static_cast<double>(cfg_.opt_period) * cfg_.window_us;
        const double rate_mpps = static_cast<double>(period_injected_) / period_us * cfg_.opt_headroom;
        const CfgGraph g = cfg_from_matrix(transitions_, names_);
        Allocation floors(g.size(), 0);
        const auto active = active_nodes(g);
        for (std::size_t j = 0; j < g.size(); ++j) floors[j] = active[j] ? cfg_.opt_floor : 0;
        if (allocation_total(floors) > static_cast<int>(cfg_.pmu_count)) return;
        const auto mode = cfg_.opt_mode == "exact" ? SolveMode::exact : SolveMode::heuristic;
        const auto res = solve_allocation(g, static_cast<int>(cfg_.pmu_count), usl_, rate_mpps, mode, floors);
        request_allocation(res.alloc);
    }

  private:
    SimConfig cfg_;
    Workload wl_;
    ChannelMap channels_;
    RequestNetwork reqnet_;
    ResponseNetwork respnet_;
    MissBus missbus_;
    Elu elu_;
    std::vector<Vmt> vmts_;
    std::vector<Pmu> pmus_;
    std::vector<std::string> names_;
    std::vector<UslParams> usl_;
    std::vector<std::deque<Phv>> ingress_;
    std::vector<std::pair<std::size_t, Phv>> handoff_;
    std::vector<PmuMove> pending_;
    EdgeCounters counters_;
    TransitionMatrix transitions_;
    Metrics m_;
    WindowSample win_;
    std::uint64_t prev_hits_ = 0;
    std::uint64_t prev_misses_ = 0;
    std::uint64_t prev_reads_ = 0;
    std::uint64_t period_injected_ = 0;
    std::uint64_t active_cycles_ = 0;
    std::uint64_t next_phv_ = 0;
    std::size_t trace_index_ = 0;
    std::size_t trace_end_ = 0;
    Cycle last_injection_ = 0;
    bool reads_snapshot_ = false;
    Cycle now_ = 0;
};

inline Metrics run_simulation(const SimConfig& cfg) { return Simulator(cfg, build_workload(cfg)).run(); }

} // namespace synapse

#endif // SYNAPSE_ENGINE_HPP_
