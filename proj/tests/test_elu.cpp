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

#include <algorithm>
#include <numeric>

#include "synapse/elu.hpp"
#include "synapse/rng.hpp"
#include "synapse/trie.hpp"

using namespace synapse;

namespace {

LookupRequest req(ReqId id, std::uint32_t key) {
    LookupRequest r;
    r.req_id = id;
    r.key = Key::from_uint(key, 4);
    r.mask = ByteMask::first(4);
    return r;
}

Elu elu_with_host_route(EluConfig cfg = {}) {
    Elu e(cfg);
    PrefixRule r;
    r.value = Key::from_uint(0x01020304u, 4);
    r.length = 32;
    r.action = ActionRef{6};
    e.install_policy(0, build_trie({r}, 32, cfg.stride, cfg.memory.banks));
    return e;
}

// Cycle at which the reply for the only request appears.
Cycle run_until_reply(Elu& e, Cycle start, Cycle limit = 10000) {
    for (Cycle c = start; c < limit; ++c) {
        e.tick(c);
        if (!e.reply_queue().empty()) return c;
    }
    return limit;
}

} // namespace

TEST(Orb, RepliesInIssueOrder) {
    Orb orb(4);
    for (ReqId i = 0; i < 3; ++i) ASSERT_TRUE(orb.issue(req(i, 0)));
    orb.complete(2, ActionRef{2});
    EXPECT_TRUE(orb.commit(8).empty());
    orb.complete(0, ActionRef{0});
    auto first = orb.commit(8);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].request.req_id, 0u);
    orb.complete(1, ActionRef{1});
    auto rest = orb.commit(1);
    ASSERT_EQ(rest.size(), 1u) << "drain width caps replies";
    EXPECT_EQ(rest[0].request.req_id, 1u);
    EXPECT_EQ(orb.commit(8)[0].request.req_id, 2u);
    EXPECT_TRUE(orb.empty());
}

TEST(Orb, FullAndProtocolErrors) {
    Orb orb(2);
    EXPECT_TRUE(orb.issue(req(1, 0)));
    EXPECT_THROW(orb.issue(req(1, 0)), ProtocolFault);
    EXPECT_TRUE(orb.issue(req(2, 0)));
    EXPECT_FALSE(orb.issue(req(3, 0)));
    EXPECT_THROW(orb.complete(9, ActionRef{0}), ProtocolFault);
    orb.complete(1, ActionRef{0});
    EXPECT_THROW(orb.complete(1, ActionRef{0}), ProtocolFault);
    EXPECT_THROW(Orb(0), ValidationError);
}

TEST(Orb, RandomPermutations) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = 1 + rng.below(64);
        Orb orb(cap);
        std::vector<ReqId> ids(cap);
        std::iota(ids.begin(), ids.end(), ReqId{100} * trial);
        for (auto id : ids) ASSERT_TRUE(orb.issue(req(id, 0)));
        std::vector<ReqId> perm = ids;
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        std::vector<ReqId> out;
        for (auto id : perm) {
            orb.complete(id, ActionRef{0});
            for (const auto& r : orb.commit(cap)) out.push_back(r.request.req_id);
        }
        ASSERT_EQ(out, ids);
    }
}

TEST(Elu, SingleLookupLatency) {
    Elu e = elu_with_host_route();
    e.miss_queue().try_push(req(1, 0x01020304u));
    const Cycle done = run_until_reply(e, 0);
    EXPECT_EQ(done, 8u * 50u + 4u);
    const auto r = e.reply_queue().pop();
    EXPECT_EQ(r.action, ActionRef{6});
    EXPECT_EQ(e.stats().bank_reads, 8u);

    Elu short_walk = elu_with_host_route();
    short_walk.miss_queue().try_push(req(2, 0xff000000u));
    EXPECT_EQ(run_until_reply(short_walk, 0), 50u + 4u);
    EXPECT_FALSE(short_walk.reply_queue().pop().action.found());
}

TEST(Elu, LookupsOverlapAcrossBanks) {
    Elu e = elu_with_host_route();
    e.miss_queue().try_push(req(1, 0x01020304u));
    e.miss_queue().try_push(req(2, 0x01020304u));
    Cycle second = 0;
    std::size_t replies = 0;
    for (Cycle c = 0; c < 5000 && replies < 2; ++c) {
        e.tick(c);
        while (!e.reply_queue().empty()) {
            EXPECT_EQ(e.reply_queue().pop().request.req_id, ++replies);
            second = c;
        }
    }
    ASSERT_EQ(replies, 2u);
    EXPECT_LT(second, 2u * (8u * 50u + 4u));
}

TEST(Elu, BankInitiationInterval) {
    Elu e = elu_with_host_route();
    e.record_access_starts(true);
    for (ReqId i = 0; i < 32; ++i) e.miss_queue().try_push(req(i, 0x01020304u));
    for (Cycle c = 0; c < 20000; ++c) {
        e.tick(c);
        while (!e.reply_queue().empty()) e.reply_queue().pop();
    }
    EXPECT_EQ(e.stats().replies, 32u);
    ASSERT_EQ(e.access_starts().size(), 8u);
    for (const auto& [bank, starts] : e.access_starts()) {
        ASSERT_EQ(starts.size(), 32u);
        for (std::size_t i = 1; i < starts.size(); ++i) EXPECT_GE(starts[i] - starts[i - 1], 2u) << "bank " << bank;
    }
}

TEST(Elu, OrbCapacityLimitsOutstanding) {
    EluConfig cfg;
    cfg.orb_size = 2;
    Elu e = elu_with_host_route(cfg);
    for (ReqId i = 0; i < 4; ++i) e.miss_queue().try_push(req(i, 0x01020304u));
    for (Cycle c = 0; c < 10; ++c) e.tick(c);
    EXPECT_EQ(e.orb().outstanding(), 2u);
    EXPECT_EQ(e.miss_queue().size(), 2u);
}

TEST(Elu, ConfigurationChecks) {
    EluConfig cfg;
    cfg.memory.banks = 0;
    EXPECT_THROW(Elu{cfg}, ValidationError);
    Elu e(EluConfig{});
    EXPECT_THROW(e.install_policy(0, Trie(32, 4, 3)), ValidationError);
    e.miss_queue().try_push(req(1, 5));
    EXPECT_THROW(e.tick(0), ProtocolFault) << "no policy for the VMT";
}

TEST(MemoryBandwidth, Arithmetic) {
    EXPECT_DOUBLE_EQ(memory_bandwidth(1000000, 64, 10000000, 4.0), 1.6);
    EXPECT_DOUBLE_EQ(memory_bandwidth(0, 64, 10, 4.0), 0.0);
    EXPECT_THROW(memory_bandwidth(1, 64, 0, 4.0), ValidationError);
}
