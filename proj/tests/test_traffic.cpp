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

#include <map>
#include <sstream>

#include "synapse/traffic.hpp"
#include "synapse/trie.hpp"

using namespace synapse;

namespace {

KeyBinding binding_for(const std::vector<Rule>& rules, const RuleSchema& schema, std::uint32_t kpr = 1) {
    KeyBinding b;
    b.schema = schema;
    b.rules = rules;
    b.keys_per_rule = kpr;
    return b;
}

std::vector<Rule> small_ruleset(std::size_t n = 100) {
    RulesetSpec spec;
    spec.schema = RuleSchema::parse("dst:32");
    spec.count = n;
    spec.histogram = {{16, 0.5}, {24, 0.5}};
    spec.seed = 3;
    return gen_ruleset(spec);
}

std::string trace_csv(const Trace& t) {
    std::ostringstream os;
    write_trace(os, t);
    return os.str();
}

} // namespace

TEST(GenRuleset, DeterministicUniqueAndHistogram) {
    RulesetSpec spec;
    spec.schema = RuleSchema::parse("src:32,dst:32");
    spec.count = 1000;
    spec.histogram = {{8, 0.5}, {16, 0.5}};
    spec.seed = 11;
    const auto a = gen_ruleset(spec);
    EXPECT_EQ(a, gen_ruleset(spec));
    ASSERT_EQ(a.size(), 1000u);
    std::map<unsigned, int> lens;
    for (const auto& r : a) ++lens[std::get<PrefixMatch>(r.fields[0]).length];
    EXPECT_NEAR(lens[8], 500, 40);
    EXPECT_NEAR(lens[16], 500, 40);
    std::set<int> prios;
    for (const auto& r : a) prios.insert(r.priority);
    EXPECT_EQ(prios.size(), a.size());

    spec.count = 1;
    EXPECT_EQ(gen_ruleset(spec).size(), 1u);
    spec.seed = 12;
    spec.count = 1000;
    EXPECT_NE(gen_ruleset(spec), a);
}

TEST(GenRuleset, InfeasibleRequests) {
    RulesetSpec spec;
    spec.schema = RuleSchema::parse("dst:32");
    spec.count = 1000;
    spec.histogram = {{8, 1.0}};
    EXPECT_THROW(gen_ruleset(spec), ValidationError) << "only 256 distinct /8 prefixes";
    // a mix still fits: the /8 share is capped by its domain and /16 fills the rest
    spec.histogram = {{8, 0.5}, {16, 0.5}};
    EXPECT_EQ(gen_ruleset(spec).size(), 1000u);
    spec.schema = RuleSchema::parse("a:8");
    spec.histogram = {{8, 1.0}};
    spec.count = 300;
    EXPECT_THROW(gen_ruleset(spec), ValidationError);
    spec.histogram = {{40, 1.0}};
    spec.count = 1;
    EXPECT_THROW(gen_ruleset(spec), ValidationError);
}

TEST(RuleKey, KeyMatchesItsRule) {
    const auto rules = small_ruleset();
    const auto schema = RuleSchema::parse("dst:32");
    for (std::size_t i = 0; i < rules.size(); ++i)
        for (std::uint64_t salt = 0; salt < 4; ++salt) {
            const Key k = rule_key(schema, rules[i], salt * 7919);
            bool hit = false;
            for (const auto& p : expand_rules(schema, {rules[i]})) hit |= p.matches(k);
            EXPECT_TRUE(hit) << "rule " << i;
        }
}

TEST(FlowSizes, DistributionsAndCdfIo) {
    const auto u = FlowSizeDistribution::uniform(1, 3);
    EXPECT_DOUBLE_EQ(u.mean(), 2.0);
    const auto z = FlowSizeDistribution::zipf(1.1, 1000);
    Rng rng(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) sum += z.sample(rng);
    EXPECT_NEAR(sum / 100000, z.mean(), 0.05 * z.mean());
    const auto p = FlowSizeDistribution::pareto(1.2, 1, 1000);
    EXPECT_GT(p.mean(), 1.0);
    EXPECT_LT(p.mean(), 1000.0);

    std::stringstream io;
    write_cdf(io, z);
    const auto back = read_cdf(io);
    ASSERT_EQ(back.points().size(), z.points().size());
    EXPECT_NEAR(back.mean(), z.mean(), 1e-6 * z.mean());

    EXPECT_THROW(FlowSizeDistribution({{2, 0.5}, {1, 1.0}}), ValidationError);
    EXPECT_THROW(FlowSizeDistribution({{1, 0.5}, {2, 0.9}}), ValidationError);
    std::istringstream bad("bytes,p\n1,1\n");
    EXPECT_THROW(read_cdf(bad), ValidationError);
}

TEST(ZipfSampler, RankOrder) {
    ZipfSampler s(50, 1.0);
    Rng rng(2);
    std::vector<int> counts(50, 0);
    for (int i = 0; i < 200000; ++i) ++counts[s.sample(rng)];
    EXPECT_GT(counts[0], counts[1]);
    EXPECT_GT(counts[1], counts[9]);
    EXPECT_NEAR(static_cast<double>(counts[0]) / counts[1], 2.0, 0.1);
}

TEST(GenTrace, EmptyAndSingleFlow) {
    const KeyBinding none;
    TraceSpec spec;
    EXPECT_TRUE(gen_trace(FlowSizeDistribution::uniform(1, 1), spec, none).packets.empty());

    spec.flow_count = 1;
    spec.target_rate_pps = 1e6;
    spec.duration_ns = 1e7;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        spec.seed = seed;
        const Trace t = gen_trace(FlowSizeDistribution::uniform(1, 1), spec, none);
        ASSERT_GT(t.packets.size(), 9000u);
        const double mean_gap =
            static_cast<double>(t.packets.back().time_ns - t.packets.front().time_ns) / (t.packets.size() - 1);
        EXPECT_NEAR(mean_gap, 1000.0, 50.0) << "seed " << seed;
    }
}

TEST(GenTrace, AggregateRateAndFixedKeys) {
    const auto rules = small_ruleset();
    TraceSpec spec;
    spec.flow_count = 10000;
    spec.target_rate_pps = 1e7;
    spec.duration_ns = 1e8;
    spec.seed = 4;
    const Trace t = gen_trace(FlowSizeDistribution::zipf(1.1, 10000), spec,
                              binding_for(rules, RuleSchema::parse("dst:32")));
    const double rate = t.packets.size() / (spec.duration_ns * 1e-9);
    EXPECT_NEAR(rate, 1e7, 2e5);
    for (std::size_t i = 1; i < t.packets.size(); ++i) ASSERT_LE(t.packets[i - 1].time_ns, t.packets[i].time_ns);
    for (const auto& p : t.packets) ASSERT_LT(p.time_ns, 100000000u);
    EXPECT_EQ(t.flows.size(), 10000u);
}

TEST(GenTrace, ByteIdenticalForSameSeed) {
    const auto rules = small_ruleset();
    const auto b = binding_for(rules, RuleSchema::parse("dst:32"), 4);
    TraceSpec spec;
    spec.flow_count = 500;
    spec.target_rate_pps = 5e6;
    spec.seed = 8;
    const auto dist = FlowSizeDistribution::zipf(1.1, 1000);
    EXPECT_EQ(trace_csv(gen_trace(dist, spec, b)), trace_csv(gen_trace(dist, spec, b)));
    spec.seed = 9;
    EXPECT_NE(trace_csv(gen_trace(dist, spec, b)), trace_csv(gen_trace(dist, TraceSpec{500, 5e6, 1e6, 8}, b)));
}

TEST(GenTrace, KeysPerRuleSpreadsVariants) {
    const auto rules = small_ruleset(1);
    TraceSpec spec;
    spec.flow_count = 200;
    const auto one = gen_trace(FlowSizeDistribution::uniform(1, 1), spec, binding_for(rules, RuleSchema::parse("dst:32")));
    const auto four =
        gen_trace(FlowSizeDistribution::uniform(1, 1), spec, binding_for(rules, RuleSchema::parse("dst:32"), 4));
    std::set<Key> k1, k4;
    for (const auto& f : one.flows) k1.insert(f.key);
    for (const auto& f : four.flows) k4.insert(f.key);
    EXPECT_EQ(k1.size(), 1u);
    EXPECT_EQ(k4.size(), 4u);
}

TEST(TraceIo, RoundTrip) {
    const auto rules = small_ruleset();
    TraceSpec spec;
    spec.flow_count = 300;
    spec.target_rate_pps = 3e6;
    const Trace t = gen_trace(FlowSizeDistribution::uniform(1, 10), spec,
                              binding_for(rules, RuleSchema::parse("dst:32")));
    std::istringstream in(trace_csv(t));
    const Trace back = read_trace(in);
    ASSERT_EQ(back.packets.size(), t.packets.size());
    for (std::size_t i = 0; i < t.packets.size(); ++i) {
        ASSERT_EQ(back.packets[i].time_ns, t.packets[i].time_ns);
        ASSERT_EQ(back.key_of(back.packets[i]), t.key_of(t.packets[i]));
    }
    std::istringstream again(trace_csv(back));
    EXPECT_EQ(trace_csv(read_trace(again)), trace_csv(back));

    std::istringstream unsorted("time_ns,flow_id,vmt_entry_key_hex\n5,0,00000001\n4,0,00000001\n");
    EXPECT_THROW(read_trace(unsorted), ValidationError);
    std::istringstream rekey("time_ns,flow_id,vmt_entry_key_hex\n1,0,00000001\n2,0,00000002\n");
    EXPECT_THROW(read_trace(rekey), ValidationError);
    std::istringstream header("time,flow,key\n");
    EXPECT_THROW(read_trace(header), ValidationError);
}

TEST(ProfileTrace, FollowsRateProfile) {
    ProfileTraceSpec spec;
    spec.profile.points = {{0, 5e6}, {1e7, 5e6}, {1.000001e7, 2e7}};
    spec.flow_lifetime_ns = 1e4;
    spec.duration_ns = 2e7;
    spec.seed = 3;
    const Trace t = gen_profile_trace(FlowSizeDistribution::uniform(1, 20), spec, KeyBinding{});
    std::size_t first = 0, second = 0;
    for (const auto& p : t.packets) (p.time_ns < 10000000 ? first : second) += 1;
    EXPECT_NEAR(first / 1e-2, 5e6, 0.05 * 5e6);
    EXPECT_NEAR(second / 1e-2, 2e7, 0.05 * 2e7);
    const Trace again = gen_profile_trace(FlowSizeDistribution::uniform(1, 20), spec, KeyBinding{});
    EXPECT_EQ(trace_csv(t), trace_csv(again));

    ProfileTraceSpec bad = spec;
    bad.profile.points = {{5, 1}, {5, 2}};
    EXPECT_THROW(gen_profile_trace(FlowSizeDistribution::uniform(1, 2), bad, KeyBinding{}), ValidationError);
}

TEST(RoutePhv, RowSemantics) {
    CfgGraph g(3);
    g.set_source_edge(0, 1.0);
    g.set_edge(0, 1, 0.5);
    g.set_edge(0, 2, 0.5);
    std::map<std::size_t, int> counts;
    for (std::uint32_t f = 0; f < 10000; ++f) {
        const std::uint32_t seed = detail::path_seed_for(42, f);
        EXPECT_EQ(route_phv(seed, g, std::nullopt), 0u);
        const std::size_t next = route_phv(seed, g, 0);
        EXPECT_EQ(route_phv(seed, g, 0), next) << "path is fixed per flow";
        ++counts[next];
        EXPECT_EQ(route_phv(seed, g, next), CfgGraph::kSink) << "residual-only row";
    }
    EXPECT_NEAR(counts[1] / 10000.0, 0.5, 0.03);
    EXPECT_NEAR(counts[2] / 10000.0, 0.5, 0.03);
}
