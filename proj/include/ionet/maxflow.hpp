#pragma once

// Capacitated flow graphs with a distinguished inlet and outlet, Dinitz
// maximum flow, minimum cuts read off the final residual graph, and the
// capacity adjustments used by both reachability procedures.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "ionet/error.hpp"

namespace ionet::flow {

using Vertex = std::size_t;

/// A nonnegative integer or the symbolic infinite capacity.
class Capacity {
public:
    constexpr Capacity() = default;

    static Capacity finite(std::int64_t value) {
        if (value < 0)
            throw Error("capacity must be nonnegative");
        Capacity c;
        c.value_ = value;
        return c;
    }

    static constexpr Capacity infinite() {
        Capacity c;
        c.infinite_ = true;
        return c;
    }

    constexpr bool is_infinite() const { return infinite_; }

    std::int64_t value() const {
        if (infinite_)
            throw Error("infinite capacity has no finite value");
        return value_;
    }

    friend Capacity operator+(Capacity a, Capacity b) {
        if (a.infinite_ || b.infinite_)
            return infinite();
        return finite(checked_add(a.value_, b.value_));
    }

    Capacity& operator+=(Capacity other) { return *this = *this + other; }

    friend bool operator==(Capacity a, Capacity b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }

    friend std::strong_ordering operator<=>(Capacity a, Capacity b) {
        if (a.infinite_ || b.infinite_)
            return a.infinite_ <=> b.infinite_;
        return a.value_ <=> b.value_;
    }

    std::string to_string() const { return infinite_ ? "inf" : std::to_string(value_); }

private:
    bool infinite_ = false;
    std::int64_t value_ = 0;
};

struct ArcId {
    std::size_t index = 0;

    auto operator<=>(const ArcId&) const = default;
};

struct Arc {
    Vertex from = 0;
    Vertex to = 0;
    Capacity capacity;
};

class FlowGraph {
public:
    FlowGraph(std::size_t vertex_count, Vertex inlet, Vertex outlet)
        : vertex_count_(vertex_count), inlet_(inlet), outlet_(outlet), names_(vertex_count) {
        if (inlet >= vertex_count || outlet >= vertex_count || inlet == outlet)
            throw Error("inlet and outlet must be distinct vertices of the graph");
    }

    ArcId add_arc(Vertex from, Vertex to, Capacity capacity) {
        if (from >= vertex_count_ || to >= vertex_count_)
            throw Error("arc endpoint out of range");
        if (from == to)
            throw Error("flow graphs have no self-loops");
        if (to == inlet_)
            throw Error("the inlet has no incoming arcs");
        if (from == outlet_)
            throw Error("the outlet has no outgoing arcs");
        if (find_arc(from, to))
            throw Error("at most one arc per ordered vertex pair");
        arcs_.push_back({from, to, capacity});
        return ArcId{arcs_.size() - 1};
    }

    std::optional<ArcId> find_arc(Vertex from, Vertex to) const {
        for (std::size_t i = 0; i < arcs_.size(); ++i)
            if (arcs_[i].from == from && arcs_[i].to == to)
                return ArcId{i};
        return std::nullopt;
    }

    void set_capacity(ArcId a, Capacity c) { arcs_.at(a.index).capacity = c; }

    std::size_t vertex_count() const { return vertex_count_; }
    Vertex inlet() const { return inlet_; }
    Vertex outlet() const { return outlet_; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const Arc& arc(ArcId a) const { return arcs_.at(a.index); }

    void set_vertex_name(Vertex v, std::string name) { names_.at(v) = std::move(name); }

    std::string vertex_name(Vertex v) const {
        if (!names_.at(v).empty())
            return names_[v];
        if (v == inlet_)
            return "i";
        if (v == outlet_)
            return "o";
        return "v" + std::to_string(v);
    }

private:
    std::size_t vertex_count_;
    Vertex inlet_;
    Vertex outlet_;
    std::vector<Arc> arcs_;
    std::vector<std::string> names_;
};

/// Integer flow, one entry per arc of the graph it was computed on.
struct Flow {
    std::vector<std::int64_t> on_arc;
    std::int64_t value = 0;

    std::int64_t operator[](ArcId a) const { return on_arc.at(a.index); }
};

struct Cut {
    /// inlet_side[v] is true when v belongs to V_I.
    std::vector<bool> inlet_side;
    Capacity capacity;

    bool crosses(const Arc& a) const { return inlet_side.at(a.from) && !inlet_side.at(a.to); }
};

struct UnboundedFlow : Error {
    using Error::Error;
};

struct InsufficientCapacity : Error {
    InsufficientCapacity(ArcId which, std::int64_t have, std::int64_t need)
        : Error("arc " + std::to_string(which.index) + " has capacity " + std::to_string(have) +
                ", cannot decrease by " + std::to_string(need)),
          arc(which), available(have), required(need) {}
    ArcId arc;
    std::int64_t available;
    std::int64_t required;
};

inline Capacity cut_capacity(const FlowGraph& g, const std::vector<bool>& inlet_side) {
    Capacity total = Capacity::finite(0);
    for (const auto& a : g.arcs())
        if (inlet_side.at(a.from) && !inlet_side.at(a.to))
            total += a.capacity;
    return total;
}

/// Checks capacity bounds and conservation; returns a description of the
/// first problem found, or nullopt for a valid flow.
inline std::optional<std::string> flow_problem(const FlowGraph& g, const Flow& f) {
    if (f.on_arc.size() != g.arcs().size())
        return "flow has " + std::to_string(f.on_arc.size()) + " entries for " +
               std::to_string(g.arcs().size()) + " arcs";
    std::vector<std::int64_t> balance(g.vertex_count(), 0);
    for (std::size_t i = 0; i < g.arcs().size(); ++i) {
        const auto& a = g.arcs()[i];
        const auto x = f.on_arc[i];
        if (x < 0)
            return "negative flow on arc " + std::to_string(i);
        if (Capacity::finite(x) > a.capacity)
            return "flow exceeds capacity on arc " + std::to_string(i);
        balance[a.from] = checked_sub(balance[a.from], x);
        balance[a.to] = checked_add(balance[a.to], x);
    }
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
        if (v == g.inlet() || v == g.outlet())
            continue;
        if (balance[v] != 0)
            return "conservation violated at vertex " + g.vertex_name(v);
    }
    if (-balance[g.inlet()] != f.value || balance[g.outlet()] != f.value)
        return "flow value does not match inlet/outlet totals";
    return std::nullopt;
}

struct MaxFlowResult {
    Flow flow;
    Cut cut;
};

namespace detail {

// Residual network for one Dinitz run. Infinite arcs get a finite stand-in
// strictly larger than the sum of all finite capacities, which no flow
// bounded by a finite cut can saturate.
class Dinitz {
public:
    explicit Dinitz(const FlowGraph& g) : g_(g), adj_(g.vertex_count()), level_(g.vertex_count()), next_(g.vertex_count()) {
        std::int64_t finite_total = 0;
        for (const auto& a : g.arcs())
            if (!a.capacity.is_infinite())
                finite_total = checked_add(finite_total, a.capacity.value());
        finite_total_ = finite_total;
        const std::int64_t stand_in = checked_add(finite_total, 1);

        arc_edge_.resize(g.arcs().size());
        for (std::size_t i = 0; i < g.arcs().size(); ++i) {
            const auto& a = g.arcs()[i];
            const std::int64_t cap = a.capacity.is_infinite() ? stand_in : a.capacity.value();
            edges_.push_back({a.to, cap, cap});
            edges_.push_back({a.from, 0, 0});
            arc_edge_[i] = edges_.size() - 2;
            adj_[a.from].push_back(edges_.size() - 2);
            adj_[a.to].push_back(edges_.size() - 1);
        }
        // Ascending target vertex; forward edges before reverse edges on ties.
        for (auto& list : adj_)
            std::stable_sort(list.begin(), list.end(), [&](std::size_t x, std::size_t y) {
                if (edges_[x].to != edges_[y].to)
                    return edges_[x].to < edges_[y].to;
                return (x % 2) < (y % 2);
            });
    }

    MaxFlowResult run() {
        std::int64_t value = 0;
        while (build_levels()) {
            std::fill(next_.begin(), next_.end(), 0);
            for (;;) {
                const std::int64_t pushed = augment(g_.inlet(), finite_total_ + 1);
                if (pushed == 0)
                    break;
                value = checked_add(value, pushed);
                if (value > finite_total_)
                    throw UnboundedFlow("an inlet-outlet path has only infinite arcs");
            }
        }

        MaxFlowResult out;
        out.flow.value = value;
        out.flow.on_arc.resize(g_.arcs().size());
        for (std::size_t i = 0; i < g_.arcs().size(); ++i) {
            const auto& e = edges_[arc_edge_[i]];
            out.flow.on_arc[i] = e.initial - e.residual;
        }

        out.cut.inlet_side.assign(g_.vertex_count(), false);
        std::queue<Vertex> queue;
        queue.push(g_.inlet());
        out.cut.inlet_side[g_.inlet()] = true;
        while (!queue.empty()) {
            const Vertex v = queue.front();
            queue.pop();
            for (auto e : adj_[v]) {
                const Vertex w = edges_[e].to;
                if (edges_[e].residual > 0 && !out.cut.inlet_side[w]) {
                    out.cut.inlet_side[w] = true;
                    queue.push(w);
                }
            }
        }
        out.cut.capacity = cut_capacity(g_, out.cut.inlet_side);
        return out;
    }

private:
    struct Edge {
        Vertex to;
        std::int64_t residual;
        std::int64_t initial;
    };

    bool build_levels() {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<Vertex> queue;
        level_[g_.inlet()] = 0;
        queue.push(g_.inlet());
        while (!queue.empty()) {
            const Vertex v = queue.front();
            queue.pop();
            for (auto e : adj_[v]) {
                const Vertex w = edges_[e].to;
                if (edges_[e].residual > 0 && level_[w] < 0) {
                    level_[w] = level_[v] + 1;
                    queue.push(w);
                }
            }
        }
        return level_[g_.outlet()] >= 0;
    }

    std::int64_t augment(Vertex v, std::int64_t limit) {
        if (v == g_.outlet())
            return limit;
        for (auto& i = next_[v]; i < adj_[v].size(); ++i) {
            const std::size_t e = adj_[v][i];
            const Vertex w = edges_[e].to;
            if (edges_[e].residual <= 0 || level_[w] != level_[v] + 1)
                continue;
            const std::int64_t pushed = augment(w, std::min(limit, edges_[e].residual));
            if (pushed > 0) {
                edges_[e].residual -= pushed;
                edges_[e ^ 1].residual += pushed;
                return pushed;
            }
        }
        return 0;
    }

    const FlowGraph& g_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> arc_edge_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> next_;
    std::int64_t finite_total_ = 0;
};

} // namespace detail

/// Maximum flow and the minimum cut whose inlet side is the set of vertices
/// reachable from the inlet in the final residual graph.
inline MaxFlowResult solve(const FlowGraph& g) { return detail::Dinitz(g).run(); }

inline Flow max_flow(const FlowGraph& g) { return solve(g).flow; }

inline Cut min_cut(const FlowGraph& g) { return solve(g).cut; }

/// Shifts the capacities of two finite arcs by `delta`, returning a new graph.
/// Infinite arcs stay infinite.
inline FlowGraph adjust_along(const FlowGraph& g, ArcId inlet_arc, ArcId outlet_arc, std::int64_t delta) {
    FlowGraph out = g;
    auto shift = [&](ArcId a) {
        const Capacity c = out.arc(a).capacity;
        if (c.is_infinite())
            return;
        if (delta < 0 && c.value() < -delta)
            throw InsufficientCapacity(a, c.value(), -delta);
        out.set_capacity(a, Capacity::finite(checked_add(c.value(), delta)));
    };
    shift(inlet_arc);
    shift(outlet_arc);
    return out;
}

/// Graphviz rendering, arcs labelled with capacities (and flow if given).
inline void write_dot(std::ostream& os, const FlowGraph& g, const Flow* f = nullptr) {
    os << "digraph flow {\n  rankdir=LR;\n";
    for (Vertex v = 0; v < g.vertex_count(); ++v)
        os << "  n" << v << " [label=\"" << g.vertex_name(v) << "\"];\n";
    for (std::size_t i = 0; i < g.arcs().size(); ++i) {
        const auto& a = g.arcs()[i];
        os << "  n" << a.from << " -> n" << a.to << " [label=\"";
        if (f)
            os << f->on_arc.at(i) << "/";
        os << a.capacity.to_string() << "\"];\n";
    }
    os << "}\n";
}

} // namespace ionet::flow
