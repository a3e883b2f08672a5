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

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "synapse/rules.hpp"
#include "synapse/traffic.hpp"
#include "synapse/trie.hpp"

using namespace synapse;

namespace {

PrefixRule prefix(std::uint32_t value, unsigned len, std::uint32_t action, int prio = 0, std::size_t width = 4) {
    PrefixRule r;
    r.value = Key::from_uint(len == 0 ? 0 : value & ~((len >= 32 ? 0u : 0xFFFFFFFFu >> len)), width);
    r.length = len;
    r.action = ActionRef{action};
    r.priority = prio;
    return r;
}

std::vector<PrefixRule> random_prefixes(Rng& rng, std::size_t n) {
    std::vector<PrefixRule> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(prefix(static_cast<std::uint32_t>(rng.next()), static_cast<unsigned>(rng.below(33)),
                             static_cast<std::uint32_t>(i + 1), static_cast<int>(i)));
    return out;
}

} // namespace

TEST(RangeExpansion, AllEightBitRanges) {
    for (unsigned lo = 0; lo < 256; ++lo)
        for (unsigned hi = lo; hi < 256; ++hi) {
            const auto ps = expand_range(lo, hi, 8);
            const auto got = oracle::covered(ps, 8);
            ASSERT_EQ(got.size(), hi - lo + 1) << lo << "-" << hi;
            ASSERT_EQ(*got.begin(), lo);
            ASSERT_EQ(*got.rbegin(), hi);
        }
}

TEST(RangeExpansion, MinimalCoverExample) {
    auto ps = expand_range(1, 6, 8);
    std::set<std::pair<std::uint64_t, unsigned>> got;
    for (const auto& p : ps) got.insert({p.value, p.length});
    const std::set<std::pair<std::uint64_t, unsigned>> want{{1, 8}, {2, 7}, {4, 7}, {6, 8}};
    EXPECT_EQ(got, want);
    EXPECT_EQ(expand_range(0, 255, 8).size(), 1u);
    EXPECT_EQ(expand_range(0, 255, 8)[0].length, 0u);
    EXPECT_EQ(expand_range(5, 5, 8).size(), 1u);
    EXPECT_THROW(expand_range(6, 1, 8), ValidationError);
}

TEST(RangeExpansion, CoverSizeBound) {
    // a w-bit range never needs more than 2w - 2 prefixes
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t lo = rng.below(1u << 16), hi = rng.below(1u << 16);
        if (lo > hi) std::swap(lo, hi);
        EXPECT_LE(expand_range(lo, hi, 16).size(), 30u);
    }
}

TEST(ExpandRules, MultiFieldConcatenation) {
    const RuleSchema schema = RuleSchema::parse("a:8,b:8");
    Rule r;
    r.fields = {RangeMatch{1, 2}, ExactMatch{5}};
    r.action = ActionRef{7};
    const auto ps = expand_rules(schema, {r});
    ASSERT_EQ(ps.size(), 2u);
    for (const auto& p : ps) {
        EXPECT_EQ(p.length, 16u);
        EXPECT_EQ(p.value.bits(8, 8), 5u);
        EXPECT_EQ(p.action, ActionRef{7});
    }

    Rule w;
    w.fields = {PrefixMatch{0, 0}, PrefixMatch{0x80, 1}};
    const auto wide = expand_rules(schema, {w});
    EXPECT_EQ(wide.size(), 256u) << "wildcard ahead of a constrained field is enumerated";
    EXPECT_THROW(expand_rules(schema, {w}, 100), ValidationError);
}

TEST(ExpandRules, DuplicatePrefixKeepsBestPriority) {
    const RuleSchema schema = RuleSchema::parse("dst:32");
    Rule a{{PrefixMatch{0x0a000000, 8}}, ActionRef{1}, 5};
    Rule b{{PrefixMatch{0x0a000000, 8}}, ActionRef{2}, 3};
    const auto ps = expand_rules(schema, {a, b});
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_EQ(ps[0].action, ActionRef{2});
}

TEST(SpinePrune, PushesShorterPrefixToLeaves) {
    std::vector<PrefixRule> rules{prefix(0, 0, 1), prefix(0x80000000u, 2, 2)};
    auto pruned = spine_prune(rules, 32);
    std::set<std::tuple<std::uint32_t, unsigned, std::uint32_t>> got;
    for (const auto& r : pruned) got.insert({r.value.bits(0, 32), r.length, r.action.id});
    const std::set<std::tuple<std::uint32_t, unsigned, std::uint32_t>> want{
        {0x00000000u, 1, 1}, {0xC0000000u, 2, 1}, {0x80000000u, 2, 2}};
    EXPECT_EQ(got, want);
}

TEST(SpinePrune, DisjointAndEquivalent) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PrefixRule> rules;
        for (int i = 0; i < 30; ++i)
            rules.push_back(prefix(static_cast<std::uint32_t>(rng.next()) & 0xFFFF0000u,
                                   static_cast<unsigned>(rng.below(17)), i + 1, i));
        const auto pruned = spine_prune(rules, 32);
        for (std::uint32_t hi = 0; hi < (1u << 16); hi += 7) {
            const Key k = Key::from_uint(static_cast<std::uint64_t>(hi) << 16, 4);
            int matches = 0;
            for (const auto& r : pruned) matches += r.matches(k);
            ASSERT_LE(matches, 1);
            ASSERT_EQ(linear_lpm(pruned, k), oracle::lpm(rules, k));
        }
    }
}

TEST(Trie, MatchesLinearLpm) {
    Rng rng(2024);
    const auto rules = random_prefixes(rng, 1000);
    const Trie t = build_trie(spine_prune(rules, 32), 32, 4, 8);
    for (int i = 0; i < 1000; ++i) {
        const Key k = Key::from_uint(static_cast<std::uint32_t>(rng.next()), 4);
        ASSERT_EQ(t.lookup(k).action, oracle::lpm(rules, k));
    }
    // keys drawn from inside the rules stress the long prefixes
    for (const auto& r : rules) {
        Key k = r.value;
        for (unsigned b = r.length; b < 32; ++b) k.set_bit(b, rng.below(2));
        ASSERT_EQ(t.lookup(k).action, oracle::lpm(rules, k));
    }
}

TEST(Trie, DepthAndBankTrace) {
    const Trie t = build_trie({prefix(0x01020304u, 32, 1)}, 32, 4, 8);
    EXPECT_EQ(t.depth(), 8u);
    const auto hit = t.lookup(Key::from_uint(0x01020304u, 4));
    EXPECT_EQ(hit.action, ActionRef{1});
    ASSERT_EQ(hit.accesses.size(), 8u);
    for (unsigned l = 0; l < 8; ++l) EXPECT_EQ(hit.accesses[l], (BankAccess{l % 8, l}));
    const auto miss = t.lookup(Key::from_uint(0xff000000u, 4));
    EXPECT_FALSE(miss.action.found());
    EXPECT_EQ(miss.accesses.size(), 1u);

    const Trie three = build_trie({prefix(0x01020304u, 32, 1)}, 32, 4, 3);
    const auto acc = three.lookup(Key::from_uint(0x01020304u, 4)).accesses;
    EXPECT_EQ(acc[5].bank, 2u);
    EXPECT_EQ(Trie(32, 6, 1).depth(), 6u);
    EXPECT_EQ(Trie(32, 6, 1).level_width(5), 2u);
}

TEST(Trie, EmptyTrieSingleAccess) {
    const Trie t(32, 4, 8);
    const auto r = t.lookup(Key::from_uint(42, 4));
    EXPECT_FALSE(r.action.found());
    EXPECT_EQ(r.accesses.size(), 1u);
    EXPECT_THROW(t.lookup(Key::from_uint(42, 2)), ValidationError);
}

TEST(Trie, RejectsUnprunedOverlap) {
    Trie t(32, 4, 8);
    t.insert(prefix(0x0a000000u, 8, 1));
    EXPECT_THROW(t.insert(prefix(0x0a0b0000u, 16, 2)), ValidationError);
}

TEST(Trie, CompilePolicyUsesPriority) {
    const RuleSchema schema = RuleSchema::parse("dst:32");
    std::istringstream in("dst=10.0.0.0/8 -> 1\n"
                          "dst=10.1.0.0/16 -> 2\n"
                          "dst=10.1.0.0-10.1.255.255 -> 3 prio=9\n"
                          "dst=* -> 4 # catch-all\n");
    const auto rules = read_ruleset(schema, in);
    ASSERT_EQ(rules.size(), 4u);
    const Trie t = compile_policy(schema, rules, 4, 8);
    EXPECT_EQ(t.lookup(Key::from_hex("0a010203")).action, ActionRef{2});
    EXPECT_EQ(t.lookup(Key::from_hex("0a020203")).action, ActionRef{1});
    EXPECT_EQ(t.lookup(Key::from_hex("0b000000")).action, ActionRef{4});
}

TEST(RulesetIo, RoundTrip) {
    RulesetSpec spec;
    spec.schema = RuleSchema::parse("src:32,dst:32");
    spec.count = 200;
    spec.histogram = {{8, 0.5}, {16, 0.5}};
    spec.seed = 4;
    const auto rules = gen_ruleset(spec);
    std::ostringstream out;
    write_ruleset(spec.schema, rules, out);
    std::istringstream in(out.str());
    EXPECT_EQ(read_ruleset(spec.schema, in), rules);

    std::istringstream bad("dst=1.2.3.4/40 -> 1\n");
    EXPECT_THROW(read_ruleset(RuleSchema::parse("dst:32"), bad), ValidationError);
    std::istringstream unknown("port=1 -> 1\n");
    EXPECT_THROW(read_ruleset(RuleSchema::parse("dst:32"), unknown), ValidationError);
}
