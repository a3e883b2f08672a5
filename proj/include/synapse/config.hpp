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

#ifndef SYNAPSE_CONFIG_HPP_
#define SYNAPSE_CONFIG_HPP_

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "synapse/elu.hpp"
#include "synapse/errors.hpp"
#include "synapse/pmu.hpp"
#include "synapse/usl.hpp"
#include "synapse/vmt.hpp"

namespace synapse {

struct VmtSpec {
    std::string name;
    unsigned table_exp = 8;
    std::uint32_t default_action = 0;
    std::size_t await_depth = 64;
    std::size_t pmus = 0; ///< initial allocation; 0 splits the free pool evenly
    std::uint32_t vnodes = 64;
    std::uint32_t ring_seed = 0;
    std::uint32_t hash_seed = 0;
    std::string usl; ///< "a0,a1,b0,b1"; empty falls back to [optimizer] usl
};

struct SimConfig {
    // [sim]
    double frequency_mhz = 250.0;
    double duration_us = 1000.0;
    std::uint64_t seed = 1;
    std::uint64_t drain_timeout = 1000000;
    double window_us = 10.0;
    std::size_t ingress_depth = 64;
    bool strict_order = false;

    // [pmu]
    std::size_t pmu_count = 8;
    PmuConfig pmu;

    // [interconnect]
    std::size_t channels = 4;
    std::size_t deferred_depth = 32;
    unsigned response_latency = 1;

    // [elu]
    EluConfig elu;

    // [vmt.N]
    std::vector<VmtSpec> vmts;

    // [rules]
    std::string rules_file;
    std::string schema = "dst:32";
    std::size_t rule_count = 1000;
    std::string histogram = "8:0.1,16:0.2,24:0.4,32:0.3";
    std::uint64_t rules_seed = 0; ///< 0 derives from sim.seed

    // [traffic]
    std::string trace_file;
    std::size_t flows = 1000;
    double rate_mpps = 10.0;
    std::string size_dist = "zipf"; ///< zipf | pareto | uniform | cdf
    double size_param = 1.1;        ///< Zipf exponent or Pareto shape
    double size_min = 1.0;
    double size_max = 10000.0;
    std::string cdf_file;
    double zipf_exponent = 1.0; ///< flow-to-rule popularity
    std::uint32_t keys_per_rule = 1;
    std::string profile;  ///< "t_us:rate_mpps,..."; empty for a stationary trace
    double flow_lifetime_us = 100.0;

    // [cfg]
    std::string cfg_file;

    // [optimizer]
    bool opt_enabled = false;
    std::string opt_mode = "heuristic";
    std::size_t opt_period = 100; ///< windows
    double opt_gamma = 0.5;
    double opt_headroom = 1.0;
    int opt_floor = 1;
    std::string usl = "0,0,0,0";

    // [sweep]
    std::string sweep_block_sizes = "64,128,256,512";
    std::string sweep_capacities = "128,256,384,512,640,768,896,1024,1152,1280,1408,1536";

    // [stress]
    std::string stress_rates_mpps = "10,20,30,40,50,60,80,100,125,150,200";
    std::string stress_pmu_counts = "3,4,5";
    double stress_flows_per_mpps = 100.0;

    // [adaptive]
    std::string adaptive_calibration_loads_mpps = "5,10,20,30,40,60,80,100";
    std::string adaptive_calibration_pmus = "2,3,4,6,8";
    double adaptive_calibration_us = 200.0;
    std::size_t adaptive_opt_period = 10;
    double adaptive_headroom = 1.25;

    double cycle_ns() const { return 1000.0 / frequency_mhz; }
    Cycle duration_cycles() const { return static_cast<Cycle>(duration_us * frequency_mhz); }
    Cycle window_cycles() const {
        const auto w = static_cast<Cycle>(window_us * frequency_mhz + 0.5);
        return w == 0 ? 1 : w;
    }
};

// ---------------------------------------------------------------------------
// Value conversion

namespace detail {

template <typename T>
T parse_config_value(const std::string& key, const std::string& text) {
    auto fail = [&]() -> T { throw ValidationError("config key '" + key + "': bad value '" + text + "'"); };
    if constexpr (std::is_same_v<T, std::string>) {
        return text;
    } else if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
        if (text == "false" || text == "0" || text == "no" || text == "off") return false;
        return fail();
    } else if constexpr (std::is_floating_point_v<T>) {
        std::size_t used = 0;
        try {
            const double v = std::stod(text, &used);
            if (used != text.size()) return fail();
            return static_cast<T>(v);
        } catch (const std::exception&) {
            return fail();
        }
    } else {
        T v{};
        const auto* end = text.data() + text.size();
        const auto res = std::from_chars(text.data(), end, v);
        if (res.ec != std::errc{} || res.ptr != end) return fail();
        return v;
    }
}

template <typename T>
std::string format_config_value(const T& v) {
    if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    } else {
        return std::to_string(v);
    }
}

/// Visits every scalar setting as (section, key, reference).
template <typename F>
void visit_config(SimConfig& c, F&& f) {
    f("sim", "frequency_mhz", c.frequency_mhz);
    f("sim", "duration_us", c.duration_us);
    f("sim", "seed", c.seed);
    f("sim", "drain_timeout", c.drain_timeout);
    f("sim", "window_us", c.window_us);
    f("sim", "ingress_depth", c.ingress_depth);
    f("sim", "strict_order", c.strict_order);

    f("pmu", "count", c.pmu_count);
    f("pmu", "block_size", c.pmu.block_size);
    f("pmu", "lookup_latency", c.pmu.timing.lookup_latency);
    f("pmu", "initiation_interval", c.pmu.timing.initiation_interval);
    f("pmu", "clock_ratio", c.pmu.timing.clock_ratio);
    f("pmu", "request_queue", c.pmu.queues.request);
    f("pmu", "response_queue", c.pmu.queues.response);
    f("pmu", "miss_queue", c.pmu.queues.miss);
    f("pmu", "negative_caching", c.pmu.negative_caching);

    f("interconnect", "channels", c.channels);
    f("interconnect", "deferred_depth", c.deferred_depth);
    f("interconnect", "response_latency", c.response_latency);

    f("elu", "banks", c.elu.memory.banks);
    f("elu", "latency", c.elu.memory.latency);
    f("elu", "initiation_interval", c.elu.memory.initiation_interval);
    f("elu", "node_bytes", c.elu.memory.node_bytes);
    f("elu", "replication", c.elu.memory.replication);
    f("elu", "stride", c.elu.stride);
    f("elu", "orb_size", c.elu.orb_size);
    f("elu", "drain_width", c.elu.drain_width);
    f("elu", "overhead", c.elu.overhead);
    f("elu", "miss_queue", c.elu.miss_queue);
    f("elu", "reply_queue", c.elu.reply_queue);

    f("rules", "file", c.rules_file);
    f("rules", "schema", c.schema);
    f("rules", "count", c.rule_count);
    f("rules", "histogram", c.histogram);
    f("rules", "seed", c.rules_seed);

    f("traffic", "file", c.trace_file);
    f("traffic", "flows", c.flows);
    f("traffic", "rate_mpps", c.rate_mpps);
    f("traffic", "size_dist", c.size_dist);
    f("traffic", "size_param", c.size_param);
    f("traffic", "size_min", c.size_min);
    f("traffic", "size_max", c.size_max);
    f("traffic", "cdf_file", c.cdf_file);
    f("traffic", "zipf_exponent", c.zipf_exponent);
    f("traffic", "keys_per_rule", c.keys_per_rule);
    f("traffic", "profile", c.profile);
    f("traffic", "flow_lifetime_us", c.flow_lifetime_us);

    f("cfg", "file", c.cfg_file);

    f("optimizer", "enabled", c.opt_enabled);
    f("optimizer", "mode", c.opt_mode);
    f("optimizer", "period_windows", c.opt_period);
    f("optimizer", "gamma", c.opt_gamma);
    f("optimizer", "headroom", c.opt_headroom);
    f("optimizer", "floor", c.opt_floor);
    f("optimizer", "usl", c.usl);

    f("sweep", "block_sizes", c.sweep_block_sizes);
    f("sweep", "capacities", c.sweep_capacities);

    f("stress", "rates_mpps", c.stress_rates_mpps);
    f("stress", "pmu_counts", c.stress_pmu_counts);
    f("stress", "flows_per_mpps", c.stress_flows_per_mpps);

    f("adaptive", "calibration_loads_mpps", c.adaptive_calibration_loads_mpps);
    f("adaptive", "calibration_pmus", c.adaptive_calibration_pmus);
    f("adaptive", "calibration_us", c.adaptive_calibration_us);
    f("adaptive", "opt_period_windows", c.adaptive_opt_period);
    f("adaptive", "headroom", c.adaptive_headroom);
}

template <typename F>
void visit_vmt(VmtSpec& v, F&& f) {
    f("name", v.name);
    f("table_exp", v.table_exp);
    f("default_action", v.default_action);
    f("await_depth", v.await_depth);
    f("pmus", v.pmus);
    f("vnodes", v.vnodes);
    f("ring_seed", v.ring_seed);
    f("hash_seed", v.hash_seed);
    f("usl", v.usl);
}

} // namespace detail

/// Parses "a,b,c" into numbers.
template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::string item = text.substr(pos, comma - pos);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(detail::parse_config_value<T>(key, item));
        pos = comma + 1;
    }
    return out;
}

inline UslParams parse_usl(const std::string& key, const std::string& text) {
    const auto v = parse_list<double>(key, text);
    if (v.size() != 4) throw ValidationError("config key '" + key + "' needs four USL coefficients");
    return {v[0], v[1], v[2], v[3]};
}

inline std::map<unsigned, double> parse_histogram(const std::string& text) {
    std::map<unsigned, double> h;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("histogram entry '" + item + "' needs 'length:weight'");
        std::string len = item.substr(0, colon);
        if (!len.empty() && len[0] == '/') len.erase(0, 1);
        h[detail::parse_config_value<unsigned>("rules.histogram", len)] +=
            detail::parse_config_value<double>("rules.histogram", item.substr(colon + 1));
        pos = comma + 1;
    }
    return h;
}

/// Checks ranges and that referenced files exist.
inline void validate_config(const SimConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ValidationError(what);
    };
    require(c.frequency_mhz > 0.0, "sim.frequency_mhz must be positive");
    require(c.duration_us >= 0.0, "sim.duration_us must be non-negative");
    require(c.window_us > 0.0, "sim.window_us must be positive");
    require(c.drain_timeout > 0, "sim.drain_timeout must be positive");
    require(c.ingress_depth > 0, "sim.ingress_depth must be positive");
    require(c.pmu_count > 0, "pmu.count must be positive");
    require(c.pmu.block_size > 0, "pmu.block_size must be positive");
    require(c.pmu.queues.request > 0 && c.pmu.queues.response > 0 && c.pmu.queues.miss > 0,
            "PMU queue depths must be positive");
    require(c.channels > 0 && c.deferred_depth > 0, "interconnect counts must be positive");
    require(c.response_latency > 0, "interconnect.response_latency must be positive");
    require(c.elu.stride >= 1 && c.elu.stride <= 16, "elu.stride must be in 1..16");
    require(c.elu.orb_size > 0 && c.elu.miss_queue > 0 && c.elu.reply_queue > 0, "ELU queue sizes must be positive");
    require(!c.vmts.empty(), "at least one [vmt.N] section is required");
    std::size_t fixed = 0;
    std::set<std::string> names;
    for (const auto& v : c.vmts) {
        require(v.table_exp >= 1 && v.table_exp <= 20, "vmt table_exp must be in 1..20");
        require(v.await_depth > 0, "vmt await_depth must be positive");
        require(v.vnodes > 0, "vmt vnodes must be positive");
        require(names.insert(v.name).second, "duplicate VMT name '" + v.name + "'");
        if (!v.usl.empty()) parse_usl("vmt.usl", v.usl);
        fixed += v.pmus;
    }
    require(fixed <= c.pmu_count, "initial VMT allocations exceed pmu.count");
    require(c.rule_count > 0, "rules.count must be positive");
    require(c.rate_mpps >= 0.0, "traffic.rate_mpps must be non-negative");
    require(c.size_dist == "zipf" || c.size_dist == "pareto" || c.size_dist == "uniform" || c.size_dist == "cdf",
            "traffic.size_dist must be zipf, pareto, uniform or cdf");
    require(c.keys_per_rule > 0, "traffic.keys_per_rule must be positive");
    require(c.flow_lifetime_us > 0.0, "traffic.flow_lifetime_us must be positive");
    require(c.opt_mode == "exact" || c.opt_mode == "heuristic", "optimizer.mode must be exact or heuristic");
    require(c.opt_period > 0 && c.adaptive_opt_period > 0, "optimizer periods must be positive");
    require(c.opt_gamma >= 0.0 && c.opt_gamma <= 1.0, "optimizer.gamma must be in [0,1]");
    require(c.opt_headroom > 0.0 && c.adaptive_headroom > 0.0, "optimizer headroom must be positive");
    require(c.opt_floor >= 0, "optimizer.floor must be non-negative");
    parse_usl("optimizer.usl", c.usl);
    parse_histogram(c.histogram);
    for (const auto* f : {&c.rules_file, &c.trace_file, &c.cdf_file, &c.cfg_file})
        if (!f->empty() && !std::filesystem::exists(*f)) throw ValidationError("referenced file not found: " + *f);
    if (c.size_dist == "cdf") require(!c.cdf_file.empty(), "traffic.size_dist=cdf needs traffic.cdf_file");
}

/// Reads an INI-style config. Unknown sections or keys are errors. Relative
/// file paths resolve against the config file's directory.
inline SimConfig load_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    SimConfig c;
    std::set<std::string> known;
    detail::visit_config(c, [&](const char* sec, const char* key, auto& ref) {
        const std::string path = std::string(sec) + "." + key;
        known.insert(path);
        if (auto s = tree.get_child_optional(sec))
            if (auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0')))
                ref = detail::parse_config_value<std::decay_t<decltype(ref)>>(path, *v);
    });
    std::map<int, VmtSpec> vmts;
    for (const auto& [section, body] : tree) {
        if (section.rfind("vmt.", 0) == 0) {
            int idx = -1;
            try {
                idx = detail::parse_config_value<int>(section, section.substr(4));
            } catch (const ValidationError&) {
                throw ValidationError("bad VMT section name [" + section + "]");
            }
            if (idx < 0) throw ValidationError("bad VMT section name [" + section + "]");
            VmtSpec v;
            v.name = "vmt" + std::to_string(idx);
            v.hash_seed = static_cast<std::uint32_t>(idx);
            std::set<std::string> vkeys;
            detail::visit_vmt(v, [&](const char* key, auto& ref) {
                vkeys.insert(key);
                if (auto s = body.get_optional<std::string>(pt::ptree::path_type(key, '\0')))
                    ref = detail::parse_config_value<std::decay_t<decltype(ref)>>(section + "." + key, *s);
            });
            for (const auto& [k, _] : body)
                if (!vkeys.contains(k)) throw ValidationError("unknown config key '" + section + "." + k + "'");
            vmts[idx] = v;
            continue;
        }
        for (const auto& [k, _] : body)
            if (!known.contains(section + "." + k))
                throw ValidationError("unknown config key '" + section + "." + k + "'");
        if (body.empty() && !body.data().empty()) throw ValidationError("top-level key '" + section + "' outside a section");
    }
    int expect = 0;
    for (auto& [idx, v] : vmts) {
        if (idx != expect++) throw ValidationError("VMT sections must be numbered 0..S-1 without gaps");
        c.vmts.push_back(v);
    }
    if (c.vmts.empty()) {
        VmtSpec v;
        v.name = "vmt0";
        c.vmts.push_back(v);
    }
    for (auto* f : {&c.rules_file, &c.trace_file, &c.cdf_file, &c.cfg_file})
        if (!f->empty() && std::filesystem::path(*f).is_relative() && !base_dir.empty()) *f = (base_dir / *f).string();
    validate_config(c);
    return c;
}

inline SimConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    return load_config(in, std::filesystem::path(path).parent_path());
}

/// Writes every setting, defaults included, in the input format.
inline void write_config(std::ostream& out, SimConfig c) {
    std::string current;
    detail::visit_config(c, [&](const char* sec, const char* key, auto& ref) {
        if (current != sec) {
            if (!current.empty()) out << '\n';
            out << '[' << sec << "]\n";
            current = sec;
        }
        out << key << " = " << detail::format_config_value(ref) << '\n';
    });
    for (std::size_t i = 0; i < c.vmts.size(); ++i) {
        out << "\n[vmt." << i << "]\n";
        detail::visit_vmt(c.vmts[i], [&](const char* key, auto& ref) {
            out << key << " = " << detail::format_config_value(ref) << '\n';
        });
    }
}

} // namespace synapse

#endif // SYNAPSE_CONFIG_HPP_
