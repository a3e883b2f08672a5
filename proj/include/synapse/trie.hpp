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

#ifndef SYNAPSE_TRIE_HPP_
#define SYNAPSE_TRIE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "synapse/core.hpp"
#include "synapse/rules.hpp"

namespace synapse {

/// Leaf pushing over a binary trie: the result is a set of pairwise disjoint
/// prefixes where every key sees exactly the action of its longest original
/// match. Lookups over such a set never need to return to an ancestor.
inline std::vector<PrefixRule> spine_prune(const std::vector<PrefixRule>& rules, unsigned key_bits) {
    struct Node {
        int child[2] = {-1, -1};
        std::optional<ActionRef> action;
        int priority = 0;
    };
    std::vector<Node> nodes(1);
    std::size_t key_width = key_bits / 8;
    for (const auto& r : rules) {
        if (r.length > key_bits) throw ValidationError("prefix longer than key");
        int n = 0;
        for (unsigned i = 0; i < r.length; ++i) {
            const int b = r.value.bit(i) ? 1 : 0;
            if (nodes[n].child[b] < 0) {
                nodes[n].child[b] = static_cast<int>(nodes.size());
                nodes.emplace_back();
            }
            n = nodes[n].child[b];
        }
        if (!nodes[n].action || r.priority < nodes[n].priority) {
            nodes[n].action = r.action;
            nodes[n].priority = r.priority;
        }
    }

    std::vector<PrefixRule> out;
    struct Frame {
        int node;
        unsigned depth;
        Key path;
        std::optional<ActionRef> inherited;
        int priority;
    };
    std::vector<Frame> stack;
    stack.push_back({0, 0, Key(std::vector<std::uint8_t>(key_width, 0)), std::nullopt, 0});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const Node& n = nodes[f.node];
        if (n.action) {
            f.inherited = n.action;
            f.priority = n.priority;
        }
        if (n.child[0] < 0 && n.child[1] < 0) {
            if (f.inherited) out.push_back({f.path, f.depth, *f.inherited, f.priority});
            continue;
        }
        for (int b = 1; b >= 0; --b) {
            Key next = f.path;
            next.set_bit(f.depth, b == 1);
            if (n.child[b] >= 0) {
                stack.push_back({n.child[b], f.depth + 1, next, f.inherited, f.priority});
            } else if (f.inherited) {
                out.push_back({next, f.depth + 1, *f.inherited, f.priority});
            }
        }
    }
    return out;
}

struct BankAccess {
    unsigned bank = 0;
    unsigned level = 0;
    friend bool operator==(const BankAccess&, const BankAccess&) = default;
};

struct TrieLookup {
    ActionRef action;
    std::vector<BankAccess> accesses;
};

/// Multi-bit trie with horizontal partitioning: level l lives in bank
/// l mod banks. Each slot holds either a child pointer or a terminal action.
class Trie {
  public:
    struct Slot {
        std::int32_t child = -1;
        ActionRef action;
    };

    Trie(unsigned key_bits, unsigned stride, unsigned banks) : key_bits_(key_bits), stride_(stride), banks_(banks) {
        if (stride == 0 || stride > 16) throw ValidationError("trie stride must be in 1..16");
        if (key_bits == 0) throw ValidationError("trie key width must be positive");
        if (banks == 0) throw ValidationError("trie needs at least one bank");
        const unsigned depth = (key_bits + stride - 1) / stride;
        levels_.resize(depth);
        node_counts_.assign(depth, 0);
        add_node(0);
    }

    unsigned key_bits() const noexcept { return key_bits_; }
    unsigned stride() const noexcept { return stride_; }
    unsigned banks() const noexcept { return banks_; }
    unsigned depth() const noexcept { return static_cast<unsigned>(levels_.size()); }
    unsigned bank_of(unsigned level) const noexcept { return level % banks_; }
    unsigned level_width(unsigned level) const noexcept {
        const unsigned start = level * stride_;
        return std::min(stride_, key_bits_ - start);
    }
    std::size_t node_count(unsigned level) const { return node_counts_.at(level); }
    std::size_t node_count() const noexcept {
        std::size_t n = 0;
        for (auto c : node_counts_) n += c;
        return n;
    }

    /// Inserts one prefix by controlled expansion within its level. Overlap
    /// with an existing prefix means the input was not spine-pruned.
    void insert(const PrefixRule& rule) {
        if (rule.length > key_bits_) throw ValidationError("prefix longer than trie key");
        std::int32_t node = 0;
        for (unsigned level = 0; level < depth(); ++level) {
            const unsigned start = level * stride_;
            const unsigned width = level_width(level);
            Slot* slots = node_slots(level, node);
            if (rule.length <= start + width) {
                const unsigned fixed = rule.length - start;
                const unsigned free_bits = width - fixed;
                const std::uint32_t base = rule.value.bits(start, fixed) << free_bits;
                for (std::uint32_t j = 0; j < (1u << free_bits); ++j) {
                    Slot& s = slots[base + j];
                    if (s.child >= 0 || s.action.found())
                        throw ValidationError("overlapping prefixes: ruleset must be spine-pruned first");
                    s.action = rule.action;
                }
                return;
            }
            Slot& s = slots[rule.value.bits(start, width)];
            if (s.action.found()) throw ValidationError("overlapping prefixes: ruleset must be spine-pruned first");
            if (s.child < 0) {
                const std::int32_t child = add_node(level + 1);
                node_slots(level, node)[rule.value.bits(start, width)].child = child;
                node = child;
            } else {
                node = s.child;
            }
        }
    }

    /// Walks from the root; each visited node is one external memory read.
    TrieLookup lookup(const Key& key) const {
        if (key.bit_width() != key_bits_) throw ValidationError("key width does not match trie");
        TrieLookup out;
        std::int32_t node = 0;
        for (unsigned level = 0; level < depth(); ++level) {
            out.accesses.push_back({bank_of(level), level});
            const Slot& s = node_slots(level, node)[key.bits(level * stride_, level_width(level))];
            if (s.child < 0) {
                out.action = s.action;
                return out;
            }
            node = s.child;
        }
        return out;
    }

  private:
    std::int32_t add_node(unsigned level) {
        levels_[level].resize(levels_[level].size() + (std::size_t{1} << level_width(level)));
        return static_cast<std::int32_t>(node_counts_[level]++);
    }
    Slot* node_slots(unsigned level, std::int32_t node) {
        return levels_[level].data() + (static_cast<std::size_t>(node) << level_width(level));
    }
    const Slot* node_slots(unsigned level, std::int32_t node) const {
        return levels_[level].data() + (static_cast<std::size_t>(node) << level_width(level));
    }

    unsigned key_bits_;
    unsigned stride_;
    unsigned banks_;
    std::vector<std::vector<Slot>> levels_;
    std::vector<std::size_t> node_counts_;
};

/// Builds a trie from expanded, spine-pruned prefixes.
inline Trie build_trie(const std::vector<PrefixRule>& rules, unsigned key_bits, unsigned stride, unsigned banks) {
    Trie t(key_bits, stride, banks);
    for (const auto& r : rules) t.insert(r);
    return t;
}

/// Control-plane pipeline: expansion, spine pruning, trie construction.
inline Trie compile_policy(const RuleSchema& schema, const std::vector<Rule>& rules, unsigned stride, unsigned banks) {
    const auto prefixes = expand_rules(schema, rules);
    return build_trie(spine_prune(prefixes, schema.total_bits()), schema.total_bits(), stride, banks);
}

} // namespace synapse

#endif // SYNAPSE_TRIE_HPP_
