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

#ifndef SYNAPSE_OPTIMIZER_HPP_
#define SYNAPSE_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "synapse/cfg.hpp"
#include "synapse/core.hpp"
#include "synapse/errors.hpp"
#include "synapse/usl.hpp"

namespace synapse {

// ---------------------------------------------------------------------------
// Transition estimation

/// Per-window edge transit counts. Index V stands for the source on the
/// `from` side and for the sink on the `to` side.
class EdgeCounters {
  public:
    explicit EdgeCounters(std::size_t nodes = 0) : v_(nodes), counts_((nodes + 1) * (nodes + 1), 0) {}

    std::size_t nodes() const noexcept { return v_; }
    std::size_t source() const noexcept { return v_; }
    std::size_t sink() const noexcept { return v_; }

    void record(std::size_t from, std::size_t to, std::uint64_t n = 1) { counts_.at(from * (v_ + 1) + to) += n; }
    std::uint64_t count(std::size_t from, std::size_t to) const { return counts_.at(from * (v_ + 1) + to); }
    std::uint64_t row_total(std::size_t from) const {
        std::uint64_t s = 0;
        for (std::size_t j = 0; j <= v_; ++j) s += count(from, j);
        return s;
    }
    void reset() { std::fill(counts_.begin(), counts_.end(), 0); }

  private:
    std::size_t v_;
    std::vector<std::uint64_t> counts_;
};

/// Dense (V+1)x(V+1) matrix laid out like EdgeCounters.
using TransitionMatrix = std::vector<std::vector<double>>;

/// MLE of the row-stochastic transition matrix. Observed rows are blended
/// with the prior as gamma*prior + (1-gamma)*MLE; unobserved rows keep the
/// prior (or stay zero when there is none).
inline TransitionMatrix estimate_transition_matrix(const EdgeCounters& c, const TransitionMatrix* prior = nullptr,
                                                   double gamma = 0.5) {
    const std::size_t w = c.nodes() + 1;
    if (prior && (prior->size() != w)) throw ValidationError("prior transition matrix has wrong shape");
    TransitionMatrix p(w, std::vector<double>(w, 0.0));
    for (std::size_t i = 0; i < w; ++i) {
        const std::uint64_t total = c.row_total(i);
        if (total == 0) {
            if (prior) p[i] = (*prior)[i];
            continue;
        }
        for (std::size_t j = 0; j < w; ++j) {
            const double mle = static_cast<double>(c.count(i, j)) / static_cast<double>(total);
            p[i][j] = prior ? gamma * (*prior)[i][j] + (1.0 - gamma) * mle : mle;
        }
    }
    return p;
}

/// Builds a CFG from an estimated matrix; entries below `min_prob` are dropped.
inline CfgGraph cfg_from_matrix(const TransitionMatrix& p, const std::vector<std::string>& names,
                                double min_prob = 0.0) {
    const std::size_t v = names.size();
    if (p.size() != v + 1) throw ValidationError("transition matrix does not match node list");
    CfgGraph g;
    for (const auto& n : names) g.add_node(n);
    for (std::size_t j = 0; j < v; ++j)
        if (p[v][j] > min_prob) g.set_source_edge(j, p[v][j]);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < v; ++j)
            if (i != j && p[i][j] > min_prob) g.set_edge(i, j, p[i][j]);
    return g;
}

// ---------------------------------------------------------------------------
// Flow propagation

using Allocation = std::vector<int>;

inline int allocation_total(const Allocation& a) {
    int s = 0;
    for (int n : a) s += n;
    return s;
}

/// Throughput of one node: min(X, s(X, n)) clamped at zero. A node without
/// PMUs processes nothing. Where the denominator leaves the model domain the
/// capacity diverges (negative contention) or collapses (positive).
inline double node_throughput(double load, int pmus, const UslParams& p) {
    if (!(load > 0.0) || pmus <= 0) return 0.0;
    const double a = p.contention(pmus);
    const double den = 1.0 + a * (load - 1.0);
    if (!(den > 0.0)) return a < 0.0 ? load : 0.0;
    return std::clamp(load / den + p.coherency(pmus) * load, 0.0, load);
}

struct EdgeFlow {
    std::size_t from = 0; ///< CfgGraph node, or kSourceNode
    std::size_t to = 0;   ///< CfgGraph node, or CfgGraph::kSink
    double flow = 0.0;
};

struct FlowAssignment {
    static constexpr std::size_t kSourceNode = std::numeric_limits<std::size_t>::max() - 1;

    std::vector<double> inflow;     ///< X_j
    std::vector<double> throughput; ///< t_j
    std::vector<EdgeFlow> edges;
    double objective = 0.0; ///< rate delivered to the sink
};

inline const UslParams& node_params(const CfgGraph& g, const std::vector<UslParams>& params, std::size_t j) {
    if (j < params.size()) return params[j];
    if (const auto& p = g.usl(j)) return *p;
    static const UslParams identity{};
    return identity;
}

/// Deterministic topological propagation; every edge carries t_j * P_jk.
inline FlowAssignment propagate_flows(const CfgGraph& g, const Allocation& alloc, const std::vector<UslParams>& params,
                                      double source_rate) {
    if (alloc.size() != g.size()) throw ValidationError("allocation size does not match the CFG");
    if (source_rate < 0.0) throw ValidationError("negative source rate");
    const auto order = g.topological_order();
    FlowAssignment fa;
    fa.inflow.assign(g.size(), 0.0);
    fa.throughput.assign(g.size(), 0.0);
    for (const auto& e : g.source_edges()) {
        const double f = source_rate * e.prob;
        fa.inflow[e.to] += f;
        fa.edges.push_back({FlowAssignment::kSourceNode, e.to, f});
    }
    for (std::size_t j : order) {
        const double t = node_throughput(fa.inflow[j], alloc[j], node_params(g, params, j));
        fa.throughput[j] = t;
        for (const auto& e : g.out_edges(j)) {
            if (e.to == CfgGraph::kSink) continue;
            const double f = t * e.prob;
            fa.inflow[e.to] += f;
            fa.edges.push_back({j, e.to, f});
        }
        const double to_sink = t * g.sink_probability(j);
        fa.edges.push_back({j, CfgGraph::kSink, to_sink});
        fa.objective += to_sink;
    }
    return fa;
}

// ---------------------------------------------------------------------------
// Allocation solvers

enum class SolveMode { exact, heuristic };

/// Nodes that receive flow when capacities are unbounded.
inline std::vector<bool> active_nodes(const CfgGraph& g) {
    std::vector<double> reach(g.size(), 0.0);
    for (const auto& e : g.source_edges()) reach[e.to] += e.prob;
    for (std::size_t j : g.topological_order())
        for (const auto& e : g.out_edges(j))
            if (e.to != CfgGraph::kSink) reach[e.to] += reach[j] * e.prob;
    std::vector<bool> active(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) active[j] = reach[j] > 0.0;
    return active;
}

inline Allocation default_floors(const CfgGraph& g, int floor = 1) {
    const auto active = active_nodes(g);
    Allocation f(g.size(), 0);
    for (std::size_t j = 0; j < g.size(); ++j) f[j] = active[j] ? floor : 0;
    return f;
}

namespace detail {

inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Strict preference: larger objective, then smaller total, then lexicographically smaller.
inline bool better_allocation(double obj, const Allocation& a, double best_obj, const Allocation& best) {
    if (!nearly_equal(obj, best_obj)) return obj > best_obj;
    const int ta = allocation_total(a);
    const int tb = allocation_total(best);
    if (ta != tb) return ta < tb;
    return a < best;
}

} // namespace detail

struct SolveResult {
    Allocation alloc;
    double objective = 0.0;
};

/// Exact mode enumerates every integer allocation above the floors with
/// total <= N. Heuristic mode is greedy marginal gain with a two-unit
/// lookahead on plateaus, then single-unit moves between nodes until no move
/// improves the objective.
inline SolveResult solve_allocation(const CfgGraph& g, int total_pmus, const std::vector<UslParams>& params,
                                    double source_rate, SolveMode mode, Allocation floors = {}) {
    const std::size_t v = g.size();
    if (floors.empty()) floors = default_floors(g);
    if (floors.size() != v) throw ValidationError("floor vector does not match the CFG");
    for (int f : floors)
        if (f < 0) throw ValidationError("negative PMU floor");
    if (total_pmus < allocation_total(floors))
        throw ValidationError("infeasible allocation: " + std::to_string(total_pmus) + " PMUs below required minimum " +
                              std::to_string(allocation_total(floors)));
    auto eval = [&](const Allocation& a) { return propagate_flows(g, a, params, source_rate).objective; };

    if (mode == SolveMode::exact) {
        Allocation cur = floors;
        SolveResult best{floors, eval(floors)};
        int spare = total_pmus - allocation_total(floors);
        auto rec = [&](auto&& self, std::size_t i, int left) -> void {
            if (i == v) {
                const double obj = eval(cur);
                if (detail::better_allocation(obj, cur, best.objective, best.alloc)) best = {cur, obj};
                return;
            }
            for (int extra = 0; extra <= left; ++extra) {
                cur[i] = floors[i] + extra;
                self(self, i + 1, left - extra);
            }
            cur[i] = floors[i];
        };
        rec(rec, 0, spare);
        return best;
    }

    Allocation cur = floors;
    double obj = eval(cur);
    int left = total_pmus - allocation_total(cur);
    auto gain_tol = [](double base) { return 1e-12 * std::max(1.0, std::abs(base)); };
    while (left > 0) {
        std::optional<std::size_t> pick;
        double best = obj;
        for (std::size_t i = 0; i < v; ++i) {
            ++cur[i];
            const double o = eval(cur);
            --cur[i];
            if (o > best + gain_tol(obj)) {
                best = o;
                pick = i;
            }
        }
        if (pick) {
            ++cur[*pick];
            obj = best;
            --left;
            continue;
        }
        if (left < 2) break;
        std::optional<std::pair<std::size_t, std::size_t>> pair;
        for (std::size_t i = 0; i < v; ++i)
            for (std::size_t j = i; j < v; ++j) {
                ++cur[i];
                ++cur[j];
                const double o = eval(cur);
                --cur[i];
                --cur[j];
                if (o > best + gain_tol(obj)) {
                    best = o;
                    pair = {i, j};
                }
            }
        if (!pair) break;
        ++cur[pair->first];
        ++cur[pair->second];
        obj = best;
        left -= 2;
    }
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t i = 0; i < v && !moved; ++i) {
            if (cur[i] <= floors[i]) continue;
            for (std::size_t j = 0; j < v && !moved; ++j) {
                if (i == j) continue;
                --cur[i];
                ++cur[j];
                const double o = eval(cur);
                if (o > obj + gain_tol(obj)) {
                    obj = o;
                    moved = true;
                } else {
                    ++cur[i];
                    --cur[j];
                }
            }
        }
    }
    return {cur, obj};
}

// ---------------------------------------------------------------------------
// Reallocation planning

inline constexpr VmtId kNoVmt = std::numeric_limits<VmtId>::max();

struct PmuMove {
    PmuId pmu = 0;
    VmtId from = kNoVmt; ///< kNoVmt: the PMU is currently free
    VmtId to = kNoVmt;   ///< kNoVmt: the PMU is released to the free pool
    friend bool operator==(const PmuMove&, const PmuMove&) = default;
};

struct ReallocationPlan {
    std::vector<PmuMove> moves;
    bool empty() const noexcept { return moves.empty(); }
};

/// Keep-first matching: each VMT keeps its PMUs up to the new count and
/// releases its lowest ids first. Receivers, in VMT order, take free PMUs
/// (lowest id first) and then released ones (lowest id first).
inline ReallocationPlan plan_reallocation(const std::vector<std::vector<PmuId>>& current, const Allocation& target,
                                          std::vector<PmuId> free_pool) {
    if (current.size() != target.size()) throw ValidationError("allocation size does not match the VMT count");
    std::sort(free_pool.begin(), free_pool.end());
    std::vector<PmuMove> released;
    for (std::size_t v = 0; v < current.size(); ++v) {
        if (target[v] < 0) throw ValidationError("negative PMU count in allocation");
        auto owned = current[v];
        std::sort(owned.begin(), owned.end());
        const std::size_t keep = std::min<std::size_t>(owned.size(), static_cast<std::size_t>(target[v]));
        for (std::size_t k = 0; k < owned.size() - keep; ++k)
            released.push_back({owned[k], static_cast<VmtId>(v), kNoVmt});
    }
    std::sort(released.begin(), released.end(), [](const PmuMove& a, const PmuMove& b) { return a.pmu < b.pmu; });

    std::size_t need_total = 0;
    for (std::size_t v = 0; v < current.size(); ++v)
        if (static_cast<std::size_t>(target[v]) > current[v].size())
            need_total += static_cast<std::size_t>(target[v]) - current[v].size();
    if (need_total > free_pool.size() + released.size())
        throw ValidationError("allocation exceeds the available PMUs");

    ReallocationPlan plan;
    std::size_t fi = 0;
    std::size_t ri = 0;
    for (std::size_t v = 0; v < current.size(); ++v) {
        for (std::size_t k = current[v].size(); k < static_cast<std::size_t>(target[v]); ++k) {
            if (fi < free_pool.size()) {
                plan.moves.push_back({free_pool[fi++], kNoVmt, static_cast<VmtId>(v)});
            } else {
                PmuMove m = released[ri++];
                m.to = static_cast<VmtId>(v);
                plan.moves.push_back(m);
            }
        }
    }
    for (; ri < released.size(); ++ri) plan.moves.push_back(released[ri]);
    return plan;
}

} // namespace synapse

#endif // SYNAPSE_OPTIMIZER_HPP_
