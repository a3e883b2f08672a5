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

#ifndef SYNAPSE_TRAFFIC_HPP_
#define SYNAPSE_TRAFFIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "synapse/cfg.hpp"
#include "synapse/core.hpp"
#include "synapse/errors.hpp"
#include "synapse/hash.hpp"
#include "synapse/rng.hpp"
#include "synapse/rules.hpp"

namespace synapse {

// ---------------------------------------------------------------------------
// Flow size distributions

/// Empirical CDF over positive sizes; sampling is by inverse transform.
class FlowSizeDistribution {
  public:
    FlowSizeDistribution() = default;
    explicit FlowSizeDistribution(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
        if (points_.empty()) throw ValidationError("empty flow size CDF");
        double prev_size = 0.0;
        double prev_cum = 0.0;
        for (const auto& [size, cum] : points_) {
            if (!(size > prev_size)) throw ValidationError("CDF sizes must be positive and strictly increasing");
            if (!(cum >= prev_cum) || cum > 1.0 + 1e-9) throw ValidationError("CDF must be non-decreasing within [0,1]");
            prev_size = size;
            prev_cum = cum;
        }
        if (std::abs(points_.back().second - 1.0) > 1e-9) throw ValidationError("CDF must end at 1.0");
        points_.back().second = 1.0;
    }

    static FlowSizeDistribution zipf(double exponent, std::size_t max_size) {
        if (max_size == 0 || exponent < 0.0) throw ValidationError("bad Zipf size parameters");
        std::vector<double> w(max_size);
        double total = 0.0;
        for (std::size_t k = 1; k <= max_size; ++k) total += w[k - 1] = std::pow(static_cast<double>(k), -exponent);
        std::vector<std::pair<double, double>> pts;
        double acc = 0.0;
        for (std::size_t k = 1; k <= max_size; ++k) pts.emplace_back(static_cast<double>(k), acc += w[k - 1] / total);
        pts.back().second = 1.0;
        return FlowSizeDistribution(std::move(pts));
    }

    /// Pareto(shape, min_size) truncated at max_size, on a geometric grid.
    static FlowSizeDistribution pareto(double shape, double min_size, double max_size, std::size_t points = 512) {
        if (!(shape > 0.0) || !(min_size > 0.0) || !(max_size > min_size) || points < 2)
            throw ValidationError("bad Pareto size parameters");
        const double tail = 1.0 - std::pow(min_size / max_size, shape);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < points; ++i) {
            const double x = min_size * std::pow(max_size / min_size, static_cast<double>(i) / (points - 1));
            pts.emplace_back(x, (1.0 - std::pow(min_size / x, shape)) / tail);
        }
        pts.front().second = 0.0;
        pts.erase(pts.begin());
        pts.back().second = 1.0;
        return FlowSizeDistribution(std::move(pts));
    }

    static FlowSizeDistribution uniform(std::size_t lo, std::size_t hi) {
        if (lo == 0 || hi < lo || hi - lo > 1000000) throw ValidationError("bad uniform size range");
        std::vector<std::pair<double, double>> pts;
        const double n = static_cast<double>(hi - lo + 1);
        for (std::size_t k = lo; k <= hi; ++k) pts.emplace_back(static_cast<double>(k), (k - lo + 1) / n);
        pts.back().second = 1.0;
        return FlowSizeDistribution(std::move(pts));
    }

    double sample(Rng& rng) const {
        const double u = rng.uniform();
        auto it = std::upper_bound(points_.begin(), points_.end(), u,
                                   [](double v, const std::pair<double, double>& p) { return v < p.second; });
        if (it == points_.end()) --it;
        return it->first;
    }

    double mean() const {
        double m = 0.0;
        double prev = 0.0;
        for (const auto& [size, cum] : points_) {
            m += size * (cum - prev);
            prev = cum;
        }
        return m;
    }

    const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }

  private:
    std::vector<std::pair<double, double>> points_;
};

inline FlowSizeDistribution read_cdf(std::istream& in) {
    std::string line;
    std::vector<std::pair<double, double>> pts;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line != "size,cum_prob") throw ValidationError("CDF file must start with 'size,cum_prob'");
            continue;
        }
        std::istringstream ls(line);
        double s = 0.0, c = 0.0;
        char comma = 0;
        if (!(ls >> s >> comma >> c) || comma != ',') throw ValidationError("bad CDF row '" + line + "'");
        pts.emplace_back(s, c);
    }
    return FlowSizeDistribution(std::move(pts));
}

inline FlowSizeDistribution read_cdf(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CDF file " + path);
    return read_cdf(in);
}

inline void write_cdf(std::ostream& out, const FlowSizeDistribution& d) {
    out << "size,cum_prob\n";
    out.precision(17);
    for (const auto& [s, c] : d.points()) out << s << ',' << c << '\n';
}

/// Popularity over n ranked items, P(k) proportional to (k+1)^-exponent.
class ZipfSampler {
  public:
    ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
        if (n == 0) throw ValidationError("Zipf sampler over an empty set");
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) cdf_[k] = acc += std::pow(static_cast<double>(k + 1), -exponent);
        for (double& c : cdf_) c /= acc;
    }
    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
    }

  private:
    std::vector<double> cdf_;
};

// ---------------------------------------------------------------------------
// Rulesets

struct RulesetSpec {
    RuleSchema schema;
    std::size_t count = 1;
    /// Prefix length -> weight, applied independently to every field. Empty
    /// means exact match on each field.
    std::map<unsigned, double> histogram;
    std::uint64_t seed = 1;
};

/// Unique prefix rules; rule i gets action i + 1 and priority i.
inline std::vector<Rule> gen_ruleset(const RulesetSpec& spec) {
    if (spec.count == 0) throw ValidationError("rule count must be at least 1");
    const auto& fields = spec.schema.fields();
    std::vector<std::vector<std::pair<unsigned, double>>> lengths(fields.size());
    double capacity = 1.0;
    for (std::size_t f = 0; f < fields.size(); ++f) {
        double domain = 0.0;
        double total = 0.0;
        if (spec.histogram.empty()) lengths[f].emplace_back(fields[f].bits, 1.0);
        for (const auto& [len, w] : spec.histogram) {
            if (w < 0.0) throw ValidationError("negative histogram weight");
            if (w == 0.0) continue;
            if (len > fields[f].bits)
                throw ValidationError("prefix length /" + std::to_string(len) + " exceeds field '" + fields[f].name + "'");
            lengths[f].emplace_back(len, w);
        }
        if (lengths[f].empty()) throw ValidationError("prefix-length histogram has no positive weight");
        for (auto& [len, w] : lengths[f]) {
            domain += std::ldexp(1.0, static_cast<int>(len));
            total += w;
        }
        for (auto& lw : lengths[f]) lw.second /= total;
        capacity *= domain;
    }
    if (static_cast<double>(spec.count) > capacity)
        throw ValidationError("cannot generate " + std::to_string(spec.count) + " unique rules: only " +
                              std::to_string(static_cast<std::uint64_t>(capacity)) + " distinct prefixes exist");

    Rng rng(spec.seed);
    std::set<std::vector<std::pair<std::uint64_t, unsigned>>> seen;
    std::vector<Rule> rules;
    rules.reserve(spec.count);
    const std::size_t max_attempts = 64 * spec.count + 4096;
    for (std::size_t attempt = 0; rules.size() < spec.count; ++attempt) {
        if (attempt >= max_attempts)
            throw ValidationError("gave up generating unique rules after " + std::to_string(attempt) + " attempts");
        std::vector<std::pair<std::uint64_t, unsigned>> sig;
        Rule r;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            double u = rng.uniform();
            unsigned len = lengths[f].back().first;
            for (const auto& [l, w] : lengths[f]) {
                if (u < w) {
                    len = l;
                    break;
                }
                u -= w;
            }
            const std::uint64_t value = rng.next() & prefix_mask(fields[f].bits, len);
            sig.emplace_back(value, len);
            r.fields.push_back(PrefixMatch{value, len});
        }
        if (!seen.insert(sig).second) continue;
        r.action = ActionRef{static_cast<std::uint32_t>(rules.size() + 1)};
        r.priority = static_cast<int>(rules.size());
        rules.push_back(std::move(r));
    }
    return rules;
}

/// A concrete key matched by `rule`: constrained bits from the rule, free
/// bits from a hash of (salt, field).
inline Key rule_key(const RuleSchema& schema, const Rule& rule, std::uint64_t salt) {
    const auto& fields = schema.fields();
    if (rule.fields.size() != fields.size()) throw ValidationError("rule does not match the schema");
    const std::vector<std::uint8_t> zero(schema.key_width(), 0);
    Key key(zero);
    for (std::size_t f = 0; f < fields.size(); ++f) {
        const unsigned bits = fields[f].bits;
        const std::uint64_t noise =
            (std::uint64_t{lookup3_words(static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(f),
                                         static_cast<std::uint32_t>(salt >> 32))}
             << 32) |
            lookup3_words(static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(f),
                          static_cast<std::uint32_t>(salt >> 32) ^ 0x9e3779b9u);
        std::uint64_t v = 0;
        std::visit(
            [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, ExactMatch>) {
                    v = m.value;
                } else if constexpr (std::is_same_v<M, PrefixMatch>) {
                    const std::uint64_t mask = prefix_mask(bits, m.length);
                    v = (m.value & mask) | (noise & field_max(bits) & ~mask);
                } else {
                    const std::uint64_t span = m.hi - m.lo;
                    v = span == field_max(64) ? noise : m.lo + noise % (span + 1);
                }
            },
            rule.fields[f]);
        detail::write_field_bits(key, schema.offset_of(f), bits, v & field_max(bits));
    }
    return key;
}

// ---------------------------------------------------------------------------
// Traces

struct FlowSpec {
    std::uint32_t flow_id = 0;
    double size = 0.0;
    double rate_pps = 0.0;
    double start_ns = 0.0;
    std::uint32_t rule = 0;
    std::uint32_t path_seed = 0;
    Key key;
};

struct TracePacket {
    std::uint64_t time_ns = 0;
    std::uint32_t flow_id = 0;
};

struct Trace {
    std::vector<FlowSpec> flows; ///< indexed by flow_id
    std::vector<TracePacket> packets;

    const Key& key_of(const TracePacket& p) const { return flows.at(p.flow_id).key; }
};

/// How flows are bound to keys.
struct KeyBinding {
    RuleSchema schema;
    std::vector<Rule> rules;       ///< empty: every flow draws a random key
    double zipf_exponent = 1.0;    ///< popularity over rules
    std::uint32_t keys_per_rule = 1;
    std::uint64_t key_salt = 0x6b6579;
};

namespace detail {

inline std::uint32_t path_seed_for(std::uint64_t seed, std::uint32_t flow) {
    return lookup3_words(flow, static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) ^ 0x70617468u);
}

class FlowFactory {
  public:
    FlowFactory(const KeyBinding& b, Rng& rng) : b_(b), rng_(rng) {
        if (!b_.rules.empty()) zipf_.emplace(b_.rules.size(), b_.zipf_exponent);
        if (b_.keys_per_rule == 0) throw ValidationError("keys_per_rule must be positive");
    }

    FlowSpec make(std::uint32_t id, std::uint64_t seed) {
        FlowSpec f;
        f.flow_id = id;
        f.path_seed = path_seed_for(seed, id);
        if (zipf_) {
            f.rule = static_cast<std::uint32_t>(zipf_->sample(rng_));
            const std::uint64_t variant = b_.keys_per_rule > 1 ? rng_.below(b_.keys_per_rule) : 0;
            f.key = rule_key(b_.schema, b_.rules[f.rule], b_.key_salt ^ (std::uint64_t{f.rule} << 20) ^ variant);
        } else {
            const std::size_t w = b_.schema.fields().empty() ? 4 : b_.schema.key_width();
            std::vector<std::uint8_t> bytes(w);
            for (auto& byte : bytes) byte = static_cast<std::uint8_t>(rng_.next());
            f.key = Key(bytes);
        }
        return f;
    }

  private:
    const KeyBinding& b_;
    Rng& rng_;
    std::optional<ZipfSampler> zipf_;
};

inline void sort_packets(std::vector<TracePacket>& pkts) {
    std::stable_sort(pkts.begin(), pkts.end(), [](const TracePacket& a, const TracePacket& b) {
        return a.time_ns != b.time_ns ? a.time_ns < b.time_ns : a.flow_id < b.flow_id;
    });
}

} // namespace detail

struct TraceSpec {
    std::size_t flow_count = 0;
    double target_rate_pps = 1e6;
    double duration_ns = 1e6;
    std::uint64_t seed = 1;
};

/// Stationary workload: every flow is a Poisson source with rate
/// proportional to its size, scaled so the rates sum to the target. A flow's
/// start time is uniform on [0, duration) and its arrivals wrap around the
/// end of the window, so each flow covers the whole window.
inline Trace gen_trace(const FlowSizeDistribution& dist, const TraceSpec& spec, const KeyBinding& binding) {
    if (!(spec.duration_ns > 0.0) || spec.target_rate_pps < 0.0) throw ValidationError("bad trace duration or rate");
    Trace t;
    if (spec.flow_count == 0) return t;
    Rng rng(spec.seed);
    detail::FlowFactory factory(binding, rng);
    double total_size = 0.0;
    for (std::size_t i = 0; i < spec.flow_count; ++i) {
        FlowSpec f = factory.make(static_cast<std::uint32_t>(i), spec.seed);
        f.size = dist.sample(rng);
        f.start_ns = rng.uniform() * spec.duration_ns;
        total_size += f.size;
        t.flows.push_back(std::move(f));
    }
    const double c = spec.target_rate_pps / total_size;
    for (auto& f : t.flows) {
        f.rate_pps = c * f.size;
        if (f.rate_pps <= 0.0) continue;
        const double rate_per_ns = f.rate_pps * 1e-9;
        for (double el = rng.exponential(rate_per_ns); el < spec.duration_ns; el += rng.exponential(rate_per_ns)) {
            double at = f.start_ns + el;
            if (at >= spec.duration_ns) at -= spec.duration_ns;
            t.packets.push_back({static_cast<std::uint64_t>(at), f.flow_id});
        }
    }
    detail::sort_packets(t.packets);
    return t;
}

/// Piecewise-linear input rate over time, held constant past the ends.
struct RateProfile {
    std::vector<std::pair<double, double>> points; ///< (time_ns, rate_pps), increasing time

    double at(double t) const {
        if (points.empty()) return 0.0;
        if (t <= points.front().first) return points.front().second;
        if (t >= points.back().first) return points.back().second;
        auto hi = std::upper_bound(points.begin(), points.end(), t,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
        auto lo = hi - 1;
        const double w = (t - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }
    double peak() const {
        double m = 0.0;
        for (const auto& p : points) m = std::max(m, p.second);
        return m;
    }
    void validate() const {
        if (points.empty()) throw ValidationError("rate profile needs at least one point");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].second < 0.0) throw ValidationError("negative rate in profile");
            if (i && !(points[i].first > points[i - 1].first))
                throw ValidationError("rate profile times must be strictly increasing");
        }
    }
};

struct ProfileTraceSpec {
    RateProfile profile;
    double flow_lifetime_ns = 1e5;
    double duration_ns = 1e6;
    std::uint64_t seed = 1;
};

/// Time-varying workload: flows arrive as a Poisson process with rate
/// r(t) / E[size] and each lives for a fixed lifetime, emitting `size`
/// packets on average. Flows already in progress at time zero are included.
inline Trace gen_profile_trace(const FlowSizeDistribution& dist, const ProfileTraceSpec& spec,
                               const KeyBinding& binding) {
    spec.profile.validate();
    if (!(spec.duration_ns > 0.0) || !(spec.flow_lifetime_ns > 0.0)) throw ValidationError("bad profile trace timing");
    Trace t;
    Rng rng(spec.seed);
    detail::FlowFactory factory(binding, rng);
    const double mean_size = dist.mean();
    const double peak = spec.profile.peak() / mean_size * 1e-9; // flows per ns
    if (peak <= 0.0) return t;
    const double life = spec.flow_lifetime_ns;
    for (double at = -life + rng.exponential(peak); at < spec.duration_ns; at += rng.exponential(peak)) {
        if (rng.uniform() * spec.profile.peak() >= spec.profile.at(std::max(at, 0.0))) continue;
        FlowSpec f = factory.make(static_cast<std::uint32_t>(t.flows.size()), spec.seed);
        f.size = dist.sample(rng);
        f.start_ns = at;
        f.rate_pps = f.size / life * 1e9;
        const double rate_per_ns = f.rate_pps * 1e-9;
        for (double p = at + rng.exponential(rate_per_ns); p < at + life && p < spec.duration_ns;
             p += rng.exponential(rate_per_ns))
            if (p >= 0.0) t.packets.push_back({static_cast<std::uint64_t>(p), f.flow_id});
        t.flows.push_back(std::move(f));
    }
    detail::sort_packets(t.packets);
    return t;
}

inline void write_trace(std::ostream& out, const Trace& t) {
    out << "time_ns,flow_id,vmt_entry_key_hex\n";
    for (const auto& p : t.packets) out << p.time_ns << ',' << p.flow_id << ',' << t.key_of(p).to_hex() << '\n';
}

/// Reads a trace CSV; flows are rebuilt from their first packet and get
/// path seeds derived from `seed`.
inline Trace read_trace(std::istream& in, std::uint64_t seed = 0) {
    Trace t;
    std::map<std::uint32_t, std::uint32_t> ids;
    std::string line;
    int lineno = 0;
    std::uint64_t last = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "time_ns,flow_id,vmt_entry_key_hex")
                throw ValidationError("trace must start with 'time_ns,flow_id,vmt_entry_key_hex'");
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ValidationError("bad trace row " + std::to_string(lineno));
        std::uint64_t time = 0;
        std::uint64_t flow = 0;
        try {
            std::size_t used = 0;
            time = std::stoull(line.substr(0, c1), &used);
            if (used != c1) throw std::invalid_argument("time");
            flow = std::stoull(line.substr(c1 + 1, c2 - c1 - 1), &used);
            if (used != c2 - c1 - 1) throw std::invalid_argument("flow");
        } catch (const std::exception&) {
            throw ValidationError("bad number in trace row " + std::to_string(lineno));
        }
        if (time < last) throw ValidationError("trace is not sorted by time at row " + std::to_string(lineno));
        last = time;
        const Key key = Key::from_hex(line.substr(c2 + 1));
        auto [it, fresh] = ids.try_emplace(static_cast<std::uint32_t>(flow), static_cast<std::uint32_t>(t.flows.size()));
        if (fresh) {
            FlowSpec f;
            f.flow_id = it->second;
            f.key = key;
            f.start_ns = static_cast<double>(time);
            f.path_seed = detail::path_seed_for(seed, static_cast<std::uint32_t>(flow));
            t.flows.push_back(std::move(f));
        } else if (!(t.flows[it->second].key == key)) {
            throw ValidationError("flow " + std::to_string(flow) + " changes key at row " + std::to_string(lineno));
        }
        t.flows[it->second].size += 1.0;
        t.packets.push_back({time, it->second});
    }
    return t;
}

inline Trace read_trace(const std::string& path, std::uint64_t seed = 0) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open trace file " + path);
    return read_trace(in, seed);
}

// ---------------------------------------------------------------------------
// Routing

/// Next hop for a PHV leaving `from` (or the source when `from` is nullopt).
/// The choice depends only on the flow's path seed and the node, so every
/// packet of a flow takes the same path. Returns CfgGraph::kSink for the sink.
inline std::size_t route_phv(std::uint32_t path_seed, const CfgGraph& g, std::optional<std::size_t> from) {
    const auto& row = from ? g.out_edges(*from) : g.source_edges();
    const std::uint32_t node = from ? static_cast<std::uint32_t>(*from) : 0xFFFFFFFFu;
    const double u = lookup3_words(path_seed, node, 0x726f7574u) * 0x1.0p-32;
    double acc = 0.0;
    for (const auto& e : row) {
        acc += e.prob;
        if (u < acc) return e.to;
    }
    return CfgGraph::kSink;
}

inline std::size_t route_phv(const Phv& phv, const CfgGraph& g, std::optional<std::size_t> from) {
    return route_phv(phv.path_seed, g, from);
}

} // namespace synapse

#endif // SYNAPSE_TRAFFIC_HPP_
