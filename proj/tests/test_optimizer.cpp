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

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "synapse/optimizer.hpp"
#include "synapse/usl.hpp"

using namespace synapse;

namespace {

std::vector<UslSample> synth(const UslParams& p, std::vector<int> ns, int points, double noise, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<UslSample> out;
    for (int n : ns)
        for (int i = 0; i < points; ++i) {
            const double x = 5.0 + 395.0 * i / (points - 1);
            double s = usl_capacity(x, n, p);
            if (noise > 0) s *= 1.0 + noise * rng.normal();
            out.push_back({x, s, n});
        }
    return out;
}

// Relative error, or error against `scale` when the true value is zero.
double rel_err(double got, double want, double scale) {
    return want != 0.0 ? std::abs(got - want) / std::abs(want) : std::abs(got) / scale;
}

CfgGraph parallel_pair(double left = 0.5) {
    CfgGraph g(2);
    g.set_source_edge(0, left);
    g.set_source_edge(1, 1.0 - left);
    return g;
}

} // namespace

TEST(Usl, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(usl_capacity(123.0, 4, UslParams{}), 123.0);
    const UslParams p{1e-4, 1e-3, 2e-4, 3e-4};
    EXPECT_DOUBLE_EQ(usl_capacity(1.0, 3, p), 1.0 + 3 * 2e-4 + 3e-4);
    const UslParams q{1e-4, 1e-3, 0.0, 1e-3};
    const double hand = 100.0 / (1.0 + (3 * 1e-4 + 1e-3) * 99.0) + 1e-3 * 100.0;
    EXPECT_NEAR(usl_capacity(100.0, 3, q), hand, 1e-12);
    EXPECT_THROW(usl_capacity(-1.0, 3, q), DomainError);
    EXPECT_THROW(usl_capacity(100.0, 1, UslParams{0.0, -0.5, 0.0, 0.0}), DomainError);
}

TEST(Usl, NodeThroughputEdgeCases) {
    const UslParams p{1e-4, 1e-3, 0.0, 0.0};
    EXPECT_EQ(node_throughput(50.0, 0, p), 0.0);
    EXPECT_EQ(node_throughput(0.0, 3, p), 0.0);
    EXPECT_LE(node_throughput(50.0, 3, UslParams{0, 0, 0, 0.5}), 50.0);
    EXPECT_EQ(node_throughput(50.0, 3, UslParams{0, -0.5, 0, 0}), 50.0);
    EXPECT_EQ(node_throughput(50.0, 3, UslParams{0, 0, 0, -5.0}), 0.0);
}

TEST(PropagateFlows, Examples) {
    const CfgGraph one = CfgGraph::chain({"a"});
    EXPECT_DOUBLE_EQ(propagate_flows(one, {2}, {UslParams{}}, 40.0).objective, 40.0);

    const UslParams limited{0.0, 0.01, 0.0, 0.0};
    const double cap = usl_capacity(40.0, 2, limited);
    ASSERT_LT(cap, 40.0);
    EXPECT_NEAR(propagate_flows(one, {2}, {limited}, 40.0).objective, cap, 1e-12);

    // two branches, the second one capacity bound
    const CfgGraph pair = parallel_pair();
    const auto fa = propagate_flows(pair, {1, 1}, {UslParams{}, limited}, 80.0);
    EXPECT_NEAR(fa.objective, 40.0 + usl_capacity(40.0, 1, limited), 1e-12);
    EXPECT_NEAR(fa.inflow[1], 40.0, 1e-12);

    CfgGraph cyc(2);
    cyc.set_source_edge(0, 1.0);
    cyc.set_edge(0, 1, 1.0);
    cyc.set_edge(1, 0, 1.0);
    EXPECT_THROW(propagate_flows(cyc, {1, 1}, {}, 1.0), ValidationError);
}

TEST(PropagateFlows, CapacityAndConservationInequalities) {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.below(6);
        const CfgGraph g = oracle::random_dag(rng, v);
        std::vector<UslParams> params;
        Allocation alloc;
        for (std::size_t i = 0; i < v; ++i) {
            params.push_back(oracle::random_usl(rng));
            alloc.push_back(static_cast<int>(rng.below(5)));
        }
        const double rate = 10.0 + 300.0 * rng.uniform();
        const auto fa = propagate_flows(g, alloc, params, rate);
        for (const auto& e : fa.edges) {
            if (e.from == FlowAssignment::kSourceNode) continue;
            const double p = e.to == CfgGraph::kSink ? g.sink_probability(e.from) : [&] {
                for (const auto& o : g.out_edges(e.from))
                    if (o.to == e.to) return o.prob;
                return 0.0;
            }();
            const double tol = 1e-9 * std::max(1.0, e.flow);
            EXPECT_LE(e.flow, p * fa.inflow[e.from] + tol);
            const double cap = node_throughput(fa.inflow[e.from], alloc[e.from], params[e.from]);
            EXPECT_LE(e.flow, cap * p + tol);
        }
        EXPECT_NEAR(fa.objective, oracle::sink_rate(g, alloc, params, rate), 1e-9 * std::max(1.0, fa.objective));
    }
}

TEST(SolveAllocation, ExactMatchesBruteForce) {
    Rng rng(606);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t v = 1 + rng.below(5);
        const CfgGraph g = oracle::random_dag(rng, v);
        std::vector<UslParams> params;
        for (std::size_t i = 0; i < v; ++i) params.push_back(oracle::random_usl(rng));
        const auto floors = default_floors(g);
        const int n = std::max(allocation_total(floors), static_cast<int>(1 + rng.below(6)));
        const double rate = 20.0 + 300.0 * rng.uniform();
        const auto exact = solve_allocation(g, n, params, rate, SolveMode::exact);
        const auto brute = oracle::brute_force_best(g, n, params, rate, floors);
        ASSERT_NEAR(exact.objective, brute.objective, 1e-9 * std::max(1.0, brute.objective)) << "trial " << trial;
        EXPECT_EQ(exact.alloc, brute.alloc) << "trial " << trial;
        EXPECT_LE(allocation_total(exact.alloc), n);
        const auto heur = solve_allocation(g, n, params, rate, SolveMode::heuristic);
        EXPECT_GE(heur.objective, 0.95 * exact.objective - 1e-12) << "trial " << trial;
        EXPECT_LE(allocation_total(heur.alloc), n);
    }
}

TEST(SolveAllocation, ExactMonotoneInPoolSize) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t v = 1 + rng.below(4);
        const CfgGraph g = oracle::random_dag(rng, v);
        std::vector<UslParams> params;
        for (std::size_t i = 0; i < v; ++i) params.push_back(oracle::random_usl(rng));
        double prev = -1.0;
        for (int n = allocation_total(default_floors(g)); n <= 8; ++n) {
            const double obj = solve_allocation(g, n, params, 150.0, SolveMode::exact).objective;
            EXPECT_GE(obj, prev - 1e-12);
            prev = obj;
        }
    }
}

TEST(SolveAllocation, SymmetricBranchesSplitEvenly) {
    // three units saturate a 200 Mpps branch, two do not
    const CfgGraph g = parallel_pair();
    const UslParams p{-5e-4, 1.5e-2, 0.3, 0.0};
    const auto r = solve_allocation(g, 6, {p, p}, 400.0, SolveMode::exact);
    EXPECT_EQ(r.alloc, (Allocation{3, 3}));
    EXPECT_NEAR(r.objective, 400.0, 1e-9);
}

TEST(SolveAllocation, SingleNodeAndFloors) {
    const CfgGraph one = CfgGraph::chain({"a"});
    const UslParams p{-5e-4, 1.5e-2, 0.0, 0.0};
    const auto r = solve_allocation(one, 5, {p}, 400.0, SolveMode::exact);
    EXPECT_EQ(r.alloc, (Allocation{5}));
    // identity capacity: one unit already carries everything
    EXPECT_EQ(solve_allocation(one, 5, {UslParams{}}, 400.0, SolveMode::exact).alloc, (Allocation{1}));
    EXPECT_THROW(solve_allocation(CfgGraph::chain({"a", "b", "c"}), 2, {}, 1.0, SolveMode::exact), ValidationError);
    CfgGraph dead(2);
    dead.set_source_edge(0, 1.0);
    EXPECT_EQ(default_floors(dead), (Allocation{1, 0}));
}

TEST(SolveAllocation, HeuristicScalesToLongChains) {
    std::vector<std::string> names;
    for (int i = 0; i < 100; ++i) names.push_back("t" + std::to_string(i));
    const CfgGraph g = CfgGraph::chain(names);
    const std::vector<UslParams> params(100, UslParams{-5e-4, 1.5e-2, 0.0, 0.0});
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = solve_allocation(g, 300, params, 200.0, SolveMode::heuristic);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(sec, 1.0);
    EXPECT_LE(allocation_total(r.alloc), 300);
    for (int n : r.alloc) EXPECT_GE(n, 1);
}

TEST(TransitionMatrix, MleAndPrior) {
    EdgeCounters c(2);
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        c.record(c.source(), 0);
        c.record(0, rng.uniform() < 0.75 ? 1 : c.sink());
    }
    const auto p = estimate_transition_matrix(c);
    EXPECT_DOUBLE_EQ(p[2][0], 1.0);
    EXPECT_NEAR(p[0][1], 0.75, 0.02);
    EXPECT_NEAR(p[0][2], 0.25, 0.02);
    EXPECT_EQ(p[1], (std::vector<double>{0, 0, 0}));

    TransitionMatrix prior = p;
    prior[1] = {0.0, 0.0, 1.0};
    c.reset();
    c.record(c.source(), 0, 10);
    c.record(0, 1, 10);
    const auto q = estimate_transition_matrix(c, &prior, 0.5);
    EXPECT_EQ(q[1], prior[1]) << "unobserved row keeps the prior";
    EXPECT_NEAR(q[0][1], 0.5 * p[0][1] + 0.5, 1e-12);

    const CfgGraph g = cfg_from_matrix(q, {"a", "b"});
    EXPECT_EQ(g.source_edges().size(), 1u);
    EXPECT_NEAR(g.sink_probability(0), 1.0 - q[0][1], 1e-12);
}

TEST(FitUsl, NoiselessRecovery) {
    const UslParams truth{2e-4, 1e-3, 0.0, 5e-4};
    const auto fit = fit_usl(synth(truth, {3, 4, 5}, 40, 0.0, 1));
    EXPECT_LT(rel_err(fit.alpha0, truth.alpha0, truth.alpha0), 0.05);
    EXPECT_LT(rel_err(fit.alpha1, truth.alpha1, truth.alpha1), 0.05);
    EXPECT_LT(rel_err(fit.beta0, truth.beta0, truth.beta1), 0.05);
    EXPECT_LT(rel_err(fit.beta1, truth.beta1, truth.beta1), 0.05);
}

TEST(FitUsl, NoisyRecovery) {
    const UslParams truth{-1.5e-4, 1.7e-3, 8.4e-3, 5.0e-2};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto fit = fit_usl(synth(truth, {1, 2, 3, 4, 5, 6, 7, 8}, 100, 0.01, seed));
        EXPECT_LT(rel_err(fit.alpha0, truth.alpha0, 1), 0.15) << seed;
        EXPECT_LT(rel_err(fit.alpha1, truth.alpha1, 1), 0.15) << seed;
        EXPECT_LT(rel_err(fit.beta0, truth.beta0, 1), 0.15) << seed;
        EXPECT_LT(rel_err(fit.beta1, truth.beta1, 1), 0.15) << seed;
    }
}

TEST(FitUsl, IdentityAndErrors) {
    const auto fit = fit_usl(synth(UslParams{}, {2, 3}, 10, 0.0, 1));
    EXPECT_NEAR(fit.alpha0, 0.0, 1e-6);
    EXPECT_NEAR(fit.alpha1, 0.0, 1e-6);
    EXPECT_NEAR(fit.beta0, 0.0, 1e-6);
    EXPECT_NEAR(fit.beta1, 0.0, 1e-6);
    auto three = synth(UslParams{}, {2, 3}, 10, 0.0, 1);
    three.resize(3);
    EXPECT_THROW(fit_usl(three), FitError);
    EXPECT_THROW(fit_usl(synth(UslParams{}, {4}, 10, 0.0, 1)), FitError);
}

TEST(Reallocation, PlanExamples) {
    EXPECT_TRUE(plan_reallocation({{0, 1, 2}, {3}}, {3, 1}, {}).empty());
    const auto plan = plan_reallocation({{0, 1, 2}, {3}}, {2, 2}, {});
    ASSERT_EQ(plan.moves.size(), 1u);
    EXPECT_EQ(plan.moves[0], (PmuMove{0, 0, 1}));

    const auto grow = plan_reallocation({{0}, {}}, {1, 2}, {5, 3});
    EXPECT_EQ(grow.moves, (std::vector<PmuMove>{{3, kNoVmt, 1}, {5, kNoVmt, 1}}));
    const auto shrink = plan_reallocation({{4, 1}}, {1}, {});
    EXPECT_EQ(shrink.moves, (std::vector<PmuMove>{{1, 0, kNoVmt}}));
    EXPECT_THROW(plan_reallocation({{0}}, {3}, {1}), ValidationError);
}

TEST(CfgGraph, ParseAndValidate) {
    std::istringstream in("# two tables\n"
                          "edge s a 1.0\n"
                          "edge a b 0.6\n"
                          "edge a t 0.4\n"
                          "node b usl 0 0.01 0 0\n");
    const CfgGraph g = parse_cfg(in);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g.name(0), "a");
    EXPECT_NEAR(g.sink_probability(0), 0.4, 1e-12);
    ASSERT_TRUE(g.usl(1));
    EXPECT_DOUBLE_EQ(g.usl(1)->alpha1, 0.01);
    std::ostringstream out;
    write_cfg(out, g);
    std::istringstream back(out.str());
    const CfgGraph h = parse_cfg(back);
    EXPECT_EQ(h.size(), 2u);
    EXPECT_NEAR(h.out_edges(0)[0].prob, 0.6, 1e-12);

    CfgGraph over(2);
    over.set_source_edge(0, 1.0);
    over.set_edge(0, 1, 0.7);
    over.set_edge(0, CfgGraph::kSink, 0.7);
    EXPECT_THROW(over.validate(), ValidationError);
    EXPECT_THROW(over.set_edge(1, 1, 0.5), ValidationError);
    EXPECT_THROW(over.add_node("s"), ValidationError);
}
