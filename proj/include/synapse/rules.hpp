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

#ifndef SYNAPSE_RULES_HPP_
#define SYNAPSE_RULES_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "synapse/core.hpp"

namespace synapse {

struct FieldSpec {
    std::string name;
    unsigned bits = 32;
};

/// Ordered list of match fields; a key is the big-endian concatenation of
/// the field values. Field widths are whole bytes, at most 64 bits each.
class RuleSchema {
  public:
    RuleSchema() = default;
    explicit RuleSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
        if (fields_.empty()) throw ValidationError("rule schema needs at least one field");
        unsigned total = 0;
        for (const auto& f : fields_) {
            if (f.bits == 0 || f.bits > 64 || f.bits % 8 != 0)
                throw ValidationError("field '" + f.name + "' must be 8..64 bits in whole bytes");
            total += f.bits;
        }
        if (total > 8 * kMaxKeyBytes) throw ValidationError("schema wider than the maximum key");
    }

    /// Parses "name:bits[,name:bits...]".
    static RuleSchema parse(std::string_view text) {
        std::vector<FieldSpec> fields;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t comma = text.find(',', pos);
            if (comma == std::string_view::npos) comma = text.size();
            std::string_view item = text.substr(pos, comma - pos);
            const std::size_t colon = item.find(':');
            if (colon == std::string_view::npos) throw ValidationError("bad field spec '" + std::string(item) + "'");
            FieldSpec f;
            f.name = std::string(item.substr(0, colon));
            const auto bits = item.substr(colon + 1);
            if (std::from_chars(bits.data(), bits.data() + bits.size(), f.bits).ec != std::errc{})
                throw ValidationError("bad field width in '" + std::string(item) + "'");
            fields.push_back(std::move(f));
            pos = comma + 1;
        }
        return RuleSchema(std::move(fields));
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) out += ',';
            out += fields_[i].name + ":" + std::to_string(fields_[i].bits);
        }
        return out;
    }

    const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
    unsigned total_bits() const noexcept {
        unsigned t = 0;
        for (const auto& f : fields_) t += f.bits;
        return t;
    }
    std::size_t key_width() const noexcept { return total_bits() / 8; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < fields_.size(); ++i)
            if (fields_[i].name == name) return i;
        throw ValidationError("unknown field '" + std::string(name) + "'");
    }

    /// Bit offset of field i within the concatenated key.
    unsigned offset_of(std::size_t i) const noexcept {
        unsigned off = 0;
        for (std::size_t j = 0; j < i; ++j) off += fields_[j].bits;
        return off;
    }

  private:
    std::vector<FieldSpec> fields_;
};

struct ExactMatch {
    std::uint64_t value = 0;
    friend bool operator==(const ExactMatch&, const ExactMatch&) = default;
};
/// `value` holds the full-width field value; bits below the prefix are zero.
struct PrefixMatch {
    std::uint64_t value = 0;
    unsigned length = 0;
    friend bool operator==(const PrefixMatch&, const PrefixMatch&) = default;
};
struct RangeMatch {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    friend bool operator==(const RangeMatch&, const RangeMatch&) = default;
};
using FieldMatch = std::variant<ExactMatch, PrefixMatch, RangeMatch>;

/// A classification rule; lower `priority` wins among identical prefixes.
struct Rule {
    std::vector<FieldMatch> fields;
    ActionRef action{0};
    int priority = 0;
    friend bool operator==(const Rule&, const Rule&) = default;
};

/// Prefix over the concatenated key.
struct PrefixRule {
    Key value; ///< bits past `length` are zero
    unsigned length = 0;
    ActionRef action{0};
    int priority = 0;

    bool matches(const Key& key) const {
        for (unsigned i = 0; i < length; ++i)
            if (key.bit(i) != value.bit(i)) return false;
        return true;
    }
    friend bool operator==(const PrefixRule&, const PrefixRule&) = default;
};

inline std::uint64_t field_max(unsigned bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

inline std::uint64_t prefix_mask(unsigned bits, unsigned length) {
    if (length == 0) return 0;
    return field_max(bits) & ~field_max(bits - length);
}

/// Minimal set of prefixes covering exactly [lo, hi] on a `bits`-wide field.
inline std::vector<PrefixMatch> expand_range(std::uint64_t lo, std::uint64_t hi, unsigned bits) {
    if (lo > hi) throw ValidationError("empty range " + std::to_string(lo) + "-" + std::to_string(hi));
    if (hi > field_max(bits)) throw ValidationError("range exceeds field width");
    std::vector<PrefixMatch> out;
    using u128 = unsigned __int128;
    u128 cur = lo;
    const u128 end = static_cast<u128>(hi) + 1;
    while (cur < end) {
        unsigned k = 0;
        // grow the block while it stays aligned and inside the range
        while (k < bits && (cur & ((u128{1} << (k + 1)) - 1)) == 0 && cur + (u128{1} << (k + 1)) <= end) ++k;
        out.push_back({static_cast<std::uint64_t>(cur), bits - k});
        cur += u128{1} << k;
    }
    return out;
}

inline std::vector<PrefixMatch> field_prefixes(const FieldMatch& m, unsigned bits) {
    return std::visit(
        [&](const auto& f) -> std::vector<PrefixMatch> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ExactMatch>) {
                if (f.value > field_max(bits)) throw ValidationError("exact value exceeds field width");
                return {{f.value, bits}};
            } else if constexpr (std::is_same_v<T, PrefixMatch>) {
                if (f.length > bits) throw ValidationError("prefix longer than field");
                return {{f.value & prefix_mask(bits, f.length), f.length}};
            } else {
                return expand_range(f.lo, f.hi, bits);
            }
        },
        m);
}

namespace detail {

inline void write_field_bits(Key& key, unsigned offset, unsigned bits, std::uint64_t value) {
    for (unsigned i = 0; i < bits; ++i) key.set_bit(offset + i, (value >> (bits - 1 - i)) & 1u);
}

} // namespace detail

/// Converts rules to prefixes over the concatenated key. Each field becomes a
/// prefix set (ranges via minimal covers); combinations whose partial
/// prefix precedes a constrained field are completed by enumeration, capped
/// at `limit` prefixes per rule. Identical prefixes keep the best priority.
inline std::vector<PrefixRule> expand_rules(const RuleSchema& schema, const std::vector<Rule>& rules,
                                            std::size_t limit = std::size_t{1} << 16) {
    const auto& fields = schema.fields();
    std::map<std::pair<Key, unsigned>, PrefixRule> best;
    for (const Rule& rule : rules) {
        if (rule.fields.size() != fields.size()) throw ValidationError("rule field count does not match schema");
        std::vector<std::vector<PrefixMatch>> per_field;
        std::size_t last_constrained = 0;
        bool any = false;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            per_field.push_back(field_prefixes(rule.fields[i], fields[i].bits));
            for (const auto& p : per_field.back())
                if (p.length > 0) {
                    last_constrained = i;
                    any = true;
                }
        }
        // Fields before the last constrained one must be full-length.
        std::vector<std::vector<PrefixMatch>> choices(fields.size());
        std::size_t combos = 1;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const unsigned bits = fields[i].bits;
            for (const auto& p : per_field[i]) {
                if (any && i < last_constrained && p.length < bits) {
                    const unsigned free_bits = bits - p.length;
                    if (free_bits >= 63 || (std::uint64_t{1} << free_bits) > limit)
                        throw ValidationError("rule expansion exceeds limit");
                    for (std::uint64_t j = 0; j < (std::uint64_t{1} << free_bits); ++j)
                        choices[i].push_back({p.value | j, bits});
                } else {
                    choices[i].push_back(p);
                }
            }
            combos *= choices[i].size();
            if (combos > limit) throw ValidationError("rule expansion exceeds limit");
        }
        std::vector<std::size_t> idx(fields.size(), 0);
        for (std::size_t c = 0; c < combos; ++c) {
            PrefixRule pr;
            pr.value = Key(std::vector<std::uint8_t>(schema.key_width(), 0));
            pr.action = rule.action;
            pr.priority = rule.priority;
            unsigned offset = 0;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const PrefixMatch& p = choices[i][idx[i]];
                detail::write_field_bits(pr.value, offset, fields[i].bits, p.value);
                if (p.length > 0) pr.length = offset + p.length;
                offset += fields[i].bits;
            }
            for (unsigned b = pr.length; b < pr.value.bit_width(); ++b) pr.value.set_bit(b, false);
            auto [it, inserted] = best.try_emplace({pr.value, pr.length}, pr);
            if (!inserted && pr.priority < it->second.priority) it->second = pr;
            for (std::size_t i = fields.size(); i-- > 0;) {
                if (++idx[i] < choices[i].size()) break;
                idx[i] = 0;
            }
        }
    }
    std::vector<PrefixRule> out;
    out.reserve(best.size());
    for (auto& [k, v] : best) out.push_back(std::move(v));
    return out;
}

/// Reference semantics: longest matching prefix, ties to the lower priority
/// value. Linear scan; used as an oracle and for tiny tables.
inline ActionRef linear_lpm(const std::vector<PrefixRule>& rules, const Key& key) {
    const PrefixRule* hit = nullptr;
    for (const auto& r : rules)
        if (r.matches(key) &&
            (!hit || r.length > hit->length || (r.length == hit->length && r.priority < hit->priority)))
            hit = &r;
    return hit ? hit->action : ActionRef::not_found();
}

// ---------------------------------------------------------------------------
// Ruleset text format
//
//   <field>=<spec>[,<field>=<spec>...] -> <action_id> [prio=<k>]
//
// spec is `v/len` (prefix), `v` (exact), `lo-hi` (range) or `*`. Values are
// decimal, 0x-hex, or dotted quads. Fields left out are wildcards. Without
// prio= a rule's priority is its index in the file. '#' starts a comment.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::uint64_t parse_value(std::string_view s, unsigned bits) {
    s = trim(s);
    std::uint64_t v = 0;
    if (std::count(s.begin(), s.end(), '.') == 3) {
        std::size_t pos = 0;
        for (int part = 0; part < 4; ++part) {
            std::size_t dot = s.find('.', pos);
            if (dot == std::string_view::npos) dot = s.size();
            unsigned octet = 0;
            auto r = std::from_chars(s.data() + pos, s.data() + dot, octet);
            if (r.ec != std::errc{} || r.ptr != s.data() + dot || octet > 255)
                throw ValidationError("bad dotted quad '" + std::string(s) + "'");
            v = (v << 8) | octet;
            pos = dot + 1;
        }
    } else {
        int base = 10;
        if (s.starts_with("0x") || s.starts_with("0X")) {
            s.remove_prefix(2);
            base = 16;
        }
        auto r = std::from_chars(s.data(), s.data() + s.size(), v, base);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
            throw ValidationError("bad value '" + std::string(s) + "'");
    }
    if (v > field_max(bits)) throw ValidationError("value '" + std::string(s) + "' exceeds field width");
    return v;
}

inline std::string format_value(std::uint64_t v, unsigned bits) {
    if (bits == 32) {
        return std::to_string(v >> 24) + "." + std::to_string((v >> 16) & 0xFF) + "." +
               std::to_string((v >> 8) & 0xFF) + "." + std::to_string(v & 0xFF);
    }
    return std::to_string(v);
}

} // namespace detail

inline Rule parse_rule_line(const RuleSchema& schema, std::string_view line, int default_priority) {
    const std::size_t arrow = line.find("->");
    if (arrow == std::string_view::npos) throw ValidationError("rule without '->': " + std::string(line));
    Rule rule;
    rule.priority = default_priority;
    for (const auto& f : schema.fields()) {
        (void)f;
        rule.fields.emplace_back(PrefixMatch{0, 0});
    }
    std::string_view lhs = detail::trim(line.substr(0, arrow));
    std::size_t pos = 0;
    while (!lhs.empty() && pos <= lhs.size()) {
        std::size_t comma = lhs.find(',', pos);
        if (comma == std::string_view::npos) comma = lhs.size();
        std::string_view item = detail::trim(lhs.substr(pos, comma - pos));
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) throw ValidationError("bad field match '" + std::string(item) + "'");
        const std::size_t fi = schema.index_of(detail::trim(item.substr(0, eq)));
        const unsigned bits = schema.fields()[fi].bits;
        std::string_view spec = detail::trim(item.substr(eq + 1));
        if (spec == "*") {
            rule.fields[fi] = PrefixMatch{0, 0};
        } else if (auto slash = spec.find('/'); slash != std::string_view::npos) {
            unsigned len = 0;
            auto lens = detail::trim(spec.substr(slash + 1));
            if (std::from_chars(lens.data(), lens.data() + lens.size(), len).ec != std::errc{} || len > bits)
                throw ValidationError("bad prefix length in '" + std::string(spec) + "'");
            rule.fields[fi] = PrefixMatch{detail::parse_value(spec.substr(0, slash), bits) & prefix_mask(bits, len), len};
        } else if (auto dash = spec.find('-'); dash != std::string_view::npos) {
            RangeMatch r{detail::parse_value(spec.substr(0, dash), bits), detail::parse_value(spec.substr(dash + 1), bits)};
            if (r.lo > r.hi) throw ValidationError("empty range '" + std::string(spec) + "'");
            rule.fields[fi] = r;
        } else {
            rule.fields[fi] = ExactMatch{detail::parse_value(spec, bits)};
        }
        pos = comma + 1;
    }

    std::istringstream rhs{std::string(line.substr(arrow + 2))};
    std::string tok;
    if (!(rhs >> tok)) throw ValidationError("rule without action id: " + std::string(line));
    rule.action.id = static_cast<std::uint32_t>(detail::parse_value(tok, 32));
    if (rule.action.id == ActionRef::kNotFoundId) throw ValidationError("action id collides with NOT_FOUND");
    while (rhs >> tok) {
        if (!tok.starts_with("prio=")) throw ValidationError("unexpected token '" + tok + "'");
        const auto p = std::string_view(tok).substr(5);
        if (std::from_chars(p.data(), p.data() + p.size(), rule.priority).ec != std::errc{})
            throw ValidationError("bad priority '" + tok + "'");
    }
    return rule;
}

inline std::vector<Rule> read_ruleset(const RuleSchema& schema, std::istream& in) {
    std::vector<Rule> rules;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = detail::trim(body);
        if (body.empty()) continue;
        try {
            rules.push_back(parse_rule_line(schema, body, static_cast<int>(rules.size())));
        } catch (const ValidationError& e) {
            throw ValidationError("ruleset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rules;
}

inline void write_ruleset(const RuleSchema& schema, const std::vector<Rule>& rules, std::ostream& out) {
    out << "# fields: " << schema.to_string() << '\n';
    for (const Rule& r : rules) {
        bool first = true;
        for (std::size_t i = 0; i < r.fields.size(); ++i) {
            const unsigned bits = schema.fields()[i].bits;
            std::string spec = std::visit(
                [&](const auto& f) -> std::string {
                    using T = std::decay_t<decltype(f)>;
                    if constexpr (std::is_same_v<T, ExactMatch>) {
                        return detail::format_value(f.value, bits);
                    } else if constexpr (std::is_same_v<T, PrefixMatch>) {
                        if (f.length == 0) return "";
                        return detail::format_value(f.value, bits) + "/" + std::to_string(f.length);
                    } else {
                        return detail::format_value(f.lo, bits) + "-" + detail::format_value(f.hi, bits);
                    }
                },
                r.fields[i]);
            if (spec.empty()) continue;
            out << (first ? "" : ",") << schema.fields()[i].name << '=' << spec;
            first = false;
        }
        if (first) out << schema.fields()[0].name << "=*";
        out << " -> " << r.action.id << " prio=" << r.priority << '\n';
    }
}

} // namespace synapse

#endif // SYNAPSE_RULES_HPP_
