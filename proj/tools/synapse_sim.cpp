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

// synapse-sim: command-line driver for single runs, experiments and the
// workload/regression utilities.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "synapse/synapse.hpp"

namespace fs = std::filesystem;
using namespace synapse;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::string samples; // fit-usl only
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ValidationError("cannot write " + p.string());
    return f;
}

SimConfig prepare(const Options& o, const std::string& command) {
    SimConfig c = load_config_file(o.config);
    if (o.seed) c.seed = *o.seed;
    fs::create_directories(o.out);
    auto f = open_out(fs::path(o.out) / "config.resolved");
    write_config(f, c);

    nlohmann::ordered_json meta;
    meta["command"] = command;
    meta["seed"] = c.seed;
    meta["rule_popularity"] = "zipf";
    meta["rule_zipf_exponent"] = c.zipf_exponent;
    meta["keys_per_rule"] = c.keys_per_rule;
    meta["flow_size_distribution"] = c.size_dist;
    auto m = open_out(fs::path(o.out) / "metadata.json");
    m << meta.dump(2) << '\n';
    return c;
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) {
    auto f = open_out(p);
    f << j.dump(2) << '\n';
}

int cmd_run(const Options& o) {
    const SimConfig c = prepare(o, "run");
    const Metrics m = run_simulation(c);
    write_json(fs::path(o.out) / "metrics.json", to_json(m));
    auto w = open_out(fs::path(o.out) / "windows.csv");
    write_windows_csv(w, m);
    std::cout << "delivered " << m.delivered << " of " << m.injected << " packets, hit rate " << m.hit_rate()
              << ", throughput " << m.throughput_pps() << " pps\n";
    return 0;
}

int cmd_sweep(const Options& o) {
    const SimConfig c = prepare(o, "sweep");
    const auto rows = experiment_sweep(c, parse_list<std::size_t>("sweep.block_sizes", c.sweep_block_sizes),
                                       parse_list<std::size_t>("sweep.capacities", c.sweep_capacities));
    for (const auto& r : rows)
        if (!r.valid)
            std::cerr << "warning: capacity " << r.capacity << " is not a multiple of block size " << r.block_size
                      << "; cell skipped\n";
    auto f = open_out(fs::path(o.out) / "sweep.csv");
    write_sweep_csv(f, rows);
    return 0;
}

int cmd_stress(const Options& o) {
    const SimConfig c = prepare(o, "stress");
    const auto rows = experiment_stress(c, parse_list<double>("stress.rates_mpps", c.stress_rates_mpps),
                                        parse_list<std::size_t>("stress.pmu_counts", c.stress_pmu_counts));
    auto f = open_out(fs::path(o.out) / "stress.csv");
    write_stress_csv(f, rows);
    return 0;
}

nlohmann::ordered_json usl_json(const UslParams& p) {
    nlohmann::ordered_json j;
    j["alpha0"] = p.alpha0;
    j["alpha1"] = p.alpha1;
    j["beta0"] = p.beta0;
    j["beta1"] = p.beta1;
    return j;
}

int cmd_adaptive(const Options& o) {
    const SimConfig c = prepare(o, "adaptive");
    const AdaptiveResult r = experiment_adaptive(c);
    const fs::path out(o.out);
    auto f = open_out(out / "adaptive.csv");
    write_adaptive_csv(f, r);
    auto cal = open_out(out / "calibration.csv");
    write_calibration_csv(cal, r.calibration);
    nlohmann::ordered_json j;
    j["usl"] = usl_json(r.usl);
    j["usl_fitted"] = r.fitted;
    j["static"] = to_json(r.static_run);
    j["adaptive"] = to_json(r.adaptive_run);
    write_json(out / "metrics.json", j);
    return 0;
}

/// Reads `pmu_count,offered_mpps,throughput_mpps[,...]` rows.
std::vector<UslSample> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open samples file " + path);
    std::vector<UslSample> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("pmu_count,offered_mpps,throughput_mpps", 0) != 0)
                throw ValidationError("samples file must start with 'pmu_count,offered_mpps,throughput_mpps'");
            continue;
        }
        const auto v = parse_list<double>("samples", line);
        if (v.size() < 3) throw ValidationError("bad samples row '" + line + "'");
        out.push_back({v[1], v[2], static_cast<int>(v[0])});
    }
    return out;
}

int cmd_fit_usl(const Options& o) {
    const SimConfig c = prepare(o, "fit-usl");
    std::vector<UslSample> samples;
    if (!o.samples.empty()) {
        samples = read_samples(o.samples);
    } else {
        const auto cal = calibrate(c, parse_list<double>("adaptive.calibration_loads_mpps", c.adaptive_calibration_loads_mpps),
                                   parse_list<std::size_t>("adaptive.calibration_pmus", c.adaptive_calibration_pmus));
        auto f = open_out(fs::path(o.out) / "calibration.csv");
        write_calibration_csv(f, cal);
        for (const auto& s : cal) samples.push_back(s.sample);
    }
    const UslParams p = fit_usl(samples);
    nlohmann::ordered_json j = usl_json(p);
    j["samples"] = samples.size();
    j["rss"] = usl_rss(samples, p);
    write_json(fs::path(o.out) / "usl.json", j);
    std::cout << "usl = " << p.alpha0 << ',' << p.alpha1 << ',' << p.beta0 << ',' << p.beta1 << '\n';
    return 0;
}

int cmd_gen_rules(const Options& o) {
    const SimConfig c = prepare(o, "gen-rules");
    const RuleSchema schema = RuleSchema::parse(c.schema);
    const auto rules = build_rules(c, schema);
    auto f = open_out(fs::path(o.out) / "rules.txt");
    write_ruleset(schema, rules, f);
    return 0;
}

int cmd_gen_trace(const Options& o) {
    const SimConfig c = prepare(o, "gen-trace");
    const RuleSchema schema = RuleSchema::parse(c.schema);
    const auto rules = build_rules(c, schema);
    const Trace t = build_trace(c, schema, rules);
    auto f = open_out(fs::path(o.out) / "trace.csv");
    write_trace(f, t);
    auto d = open_out(fs::path(o.out) / "sizes.cdf.csv");
    write_cdf(d, build_size_dist(c));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtualized match-table simulator"};
    app.require_subcommand(1);
    Options opt;
    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "override sim.seed");
        return sub;
    };
    auto* run = add("run", "run one simulation");
    auto* sweep = add("sweep", "block size x capacity sweep");
    auto* stress = add("stress", "throughput against input rate");
    auto* adaptive = add("adaptive", "static provisioning vs runtime optimizer");
    auto* fit = add("fit-usl", "fit capacity-model coefficients");
    fit->add_option("--samples", opt.samples, "CSV of pmu_count,offered_mpps,throughput_mpps")
        ->check(CLI::ExistingFile);
    auto* rules = add("gen-rules", "write a generated ruleset");
    auto* trace = add("gen-trace", "write a generated trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(opt);
        if (*sweep) return cmd_sweep(opt);
        if (*stress) return cmd_stress(opt);
        if (*adaptive) return cmd_adaptive(opt);
        if (*fit) return cmd_fit_usl(opt);
        if (*rules) return cmd_gen_rules(opt);
        if (*trace) return cmd_gen_trace(opt);
    } catch (const DeadlockError& e) {
        std::cerr << "deadlock: " << e.what() << '\n' << e.diagnostics();
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
