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

#ifndef SYNAPSE_CFG_HPP_
#define SYNAPSE_CFG_HPP_

#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "synapse/errors.hpp"
#include "synapse/usl.hpp"

namespace synapse {

struct CfgEdge {
    std::size_t to = 0;
    double prob = 0.0;
};

/// Control-flow graph over logical tables. The source and sink are implicit:
/// source edges are kept separately, and an edge to kSink or the unassigned
/// residual of a row both flow to the sink.
class CfgGraph {
  public:
    static constexpr std::size_t kSink = std::numeric_limits<std::size_t>::max();

    CfgGraph() = default;
    explicit CfgGraph(std::size_t nodes) {
        for (std::size_t i = 0; i < nodes; ++i) add_node("v" + std::to_string(i));
    }

    std::size_t add_node(std::string name) {
        if (name == "s" || name == "t") throw ValidationError("node name '" + name + "' is reserved");
        if (index_of(name)) throw ValidationError("duplicate node '" + name + "'");
        names_.push_back(std::move(name));
        out_.emplace_back();
        usl_.emplace_back();
        return names_.size() - 1;
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return i;
        return std::nullopt;
    }

    void set_source_edge(std::size_t to, double prob) { upsert(source_, check_node(to), prob); }
    void set_edge(std::size_t from, std::size_t to, double prob) {
        check_node(from);
        if (to != kSink) check_node(to);
        if (from == to) throw ValidationError("self loop on node " + names_[from]);
        upsert(out_[from], to, prob);
    }

    const std::vector<CfgEdge>& source_edges() const noexcept { return source_; }
    const std::vector<CfgEdge>& out_edges(std::size_t i) const { return out_.at(i); }

    /// Probability of leaving node i towards the sink, explicit or residual.
    double sink_probability(std::size_t i) const {
        double inner = 0.0;
        for (const auto& e : out_.at(i))
            if (e.to != kSink) inner += e.prob;
        return std::max(0.0, 1.0 - inner);
    }

    void set_usl(std::size_t i, UslParams p) { usl_.at(i) = p; }
    const std::optional<UslParams>& usl(std::size_t i) const { return usl_.at(i); }

    /// Kahn order over the table nodes; throws on a cycle.
    std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indeg(size(), 0);
        for (const auto& row : out_)
            for (const auto& e : row)
                if (e.to != kSink) ++indeg[e.to];
        std::vector<std::size_t> order;
        order.reserve(size());
        for (std::size_t i = 0; i < size(); ++i)
            if (indeg[i] == 0) order.push_back(i);
        for (std::size_t k = 0; k < order.size(); ++k)
            for (const auto& e : out_[order[k]])
                if (e.to != kSink && --indeg[e.to] == 0) order.push_back(e.to);
        if (order.size() != size()) throw ValidationError("control-flow graph contains a cycle");
        return order;
    }

    void validate() const {
        auto check_row = [](const std::vector<CfgEdge>& row, const std::string& who) {
            double sum = 0.0;
            for (const auto& e : row) {
                if (!(e.prob >= 0.0 && e.prob <= 1.0))
                    throw ValidationError("edge probability out of [0,1] at " + who);
                sum += e.prob;
            }
            if (sum > 1.0 + 1e-9) throw ValidationError("outgoing probabilities of " + who + " exceed 1");
        };
        check_row(source_, "s");
        for (std::size_t i = 0; i < size(); ++i) check_row(out_[i], names_[i]);
        topological_order();
    }

    /// Linear chain source -> 0 -> 1 -> ... -> sink.
    static CfgGraph chain(const std::vector<std::string>& names) {
        CfgGraph g;
        for (const auto& n : names) g.add_node(n);
        if (!names.empty()) g.set_source_edge(0, 1.0);
        for (std::size_t i = 0; i + 1 < names.size(); ++i) g.set_edge(i, i + 1, 1.0);
        return g;
    }

  private:
    std::size_t check_node(std::size_t i) const {
        if (i >= size()) throw ValidationError("unknown CFG node index " + std::to_string(i));
        return i;
    }
    static void upsert(std::vector<CfgEdge>& row, std::size_t to, double prob) {
        for (auto& e : row)
            if (e.to == to) {
                e.prob = prob;
                return;
            }
        row.push_back({to, prob});
    }

    std::vector<std::string> names_;
    std::vector<CfgEdge> source_;
    std::vector<std::vector<CfgEdge>> out_;
    std::vector<std::optional<UslParams>> usl_;
};

/// Text format: `edge <from> <to> <prob>` and `node <id> usl <a0> <a1> <b0> <b1>`,
/// '#' comments. Nodes are numbered in order of first appearance.
inline CfgGraph parse_cfg(std::istream& in) {
    CfgGraph g;
    auto node = [&](const std::string& name) {
        if (auto i = g.index_of(name)) return *i;
        return g.add_node(name);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        const std::string where = "CFG line " + std::to_string(lineno);
        if (kind == "edge") {
            std::string from, to;
            double p = 0.0;
            if (!(ls >> from >> to >> p)) throw ValidationError(where + ": expected 'edge <from> <to> <prob>'");
            if (from == "t" || to == "s") throw ValidationError(where + ": edge direction violates s/t roles");
            if (from == "s") {
                if (to == "t") throw ValidationError(where + ": direct s->t edge");
                g.set_source_edge(node(to), p);
            } else {
                const std::size_t f = node(from);
                g.set_edge(f, to == "t" ? CfgGraph::kSink : node(to), p);
            }
        } else if (kind == "node") {
            std::string id, tag;
            UslParams p;
            if (!(ls >> id >> tag) || tag != "usl" || !(ls >> p.alpha0 >> p.alpha1 >> p.beta0 >> p.beta1))
                throw ValidationError(where + ": expected 'node <id> usl <a0> <a1> <b0> <b1>'");
            if (id == "s" || id == "t") throw ValidationError(where + ": reserved node has no USL");
            g.set_usl(node(id), p);
        } else {
            throw ValidationError(where + ": unknown directive '" + kind + "'");
        }
        std::string extra;
        if (ls >> extra) throw ValidationError(where + ": trailing token '" + extra + "'");
    }
    g.validate();
    return g;
}

inline CfgGraph read_cfg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CFG file " + path);
    return parse_cfg(in);
}

inline void write_cfg(std::ostream& out, const CfgGraph& g) {
    out.precision(17);
    for (const auto& e : g.source_edges()) out << "edge s " << g.name(e.to) << ' ' << e.prob << '\n';
    for (std::size_t i = 0; i < g.size(); ++i)
        for (const auto& e : g.out_edges(i))
            out << "edge " << g.name(i) << ' ' << (e.to == CfgGraph::kSink ? "t" : g.name(e.to)) << ' ' << e.prob
                << '\n';
    for (std::size_t i = 0; i < g.size(); ++i)
        if (const auto& p = g.usl(i))
            out << "node " << g.name(i) << " usl " << p->alpha0 << ' ' << p->alpha1 << ' ' << p->beta0 << ' '
                << p->beta1 << '\n';
}

} // namespace synapse

#endif // SYNAPSE_CFG_HPP_
