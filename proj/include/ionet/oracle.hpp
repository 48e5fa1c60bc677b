#pragma once

// Slow, independent reference procedures used to cross-check the
// polynomial algorithms on small inputs. Nothing here shares code with the
// procedures it checks beyond the net and marking types.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ionet/core.hpp"
#include "ionet/maxflow.hpp"
#include "ionet/nonforgetting.hpp"

namespace ionet::oracle {

struct SearchResult {
    enum class Status { Reachable, Unreachable, BudgetExceeded };
    Status status = Status::Unreachable;
    /// Shortest sequence of single firings, merged into accelerated steps.
    std::optional<AcceleratedSequence> path;
    std::size_t states_explored = 0;
};

inline const char* to_string(SearchResult::Status s) {
    switch (s) {
    case SearchResult::Status::Reachable: return "reachable";
    case SearchResult::Status::Unreachable: return "unreachable";
    case SearchResult::Status::BudgetExceeded: return "budget-exceeded";
    }
    return "?";
}

/// Breadth-first search over single firings. Markings reachable from `from`
/// all have the same size, so the state space is finite.
inline SearchResult bfs_reach(const IONet& net, const Marking& from, const Marking& to,
                              std::size_t budget = 1'000'000) {
    require_same_places(net, from);
    require_same_places(net, to);
    using Status = SearchResult::Status;
    SearchResult out;
    if (from.size() != to.size())
        return out;

    struct Parent {
        Marking prev;
        std::uint32_t transition;
    };
    std::unordered_map<Marking, std::optional<Parent>, MarkingHash> seen;
    std::deque<Marking> queue;
    seen.emplace(from, std::nullopt);
    queue.push_back(from);

    while (!queue.empty()) {
        Marking m = std::move(queue.front());
        queue.pop_front();
        ++out.states_explored;
        if (m == to) {
            std::vector<std::uint32_t> firings;
            for (Marking cur = m; seen.at(cur);) {
                const Parent p = *seen.at(cur);
                firings.push_back(p.transition);
                cur = p.prev;
            }
            std::reverse(firings.begin(), firings.end());
            AcceleratedSequence seq;
            for (auto t : firings)
                seq.push(TransitionId{t}, 1);
            out.status = Status::Reachable;
            out.path = std::move(seq);
            return out;
        }
        if (out.states_explored >= budget) {
            out.status = Status::BudgetExceeded;
            return out;
        }
        for (std::uint32_t k = 0; k < net.transition_count(); ++k) {
            if (!is_enabled(net, m, TransitionId{k}))
                continue;
            Marking next = fire(net, m, TransitionId{k});
            if (seen.try_emplace(next, Parent{m, k}).second)
                queue.push_back(std::move(next));
        }
    }
    out.status = Status::Unreachable;
    return out;
}

/// Edmonds-Karp on a dense residual matrix. Infinite arcs get a capacity
/// one above the sum of all finite capacities.
inline std::int64_t naive_max_flow(const flow::FlowGraph& g) {
    const std::size_t n = g.vertex_count();
    std::int64_t finite_total = 0;
    for (const auto& a : g.arcs())
        if (!a.capacity.is_infinite())
            finite_total = checked_add(finite_total, a.capacity.value());
    const std::int64_t big = checked_add(finite_total, 1);

    std::vector<std::vector<std::int64_t>> residual(n, std::vector<std::int64_t>(n, 0));
    for (const auto& a : g.arcs())
        residual[a.from][a.to] += a.capacity.is_infinite() ? big : a.capacity.value();

    std::int64_t total = 0;
    for (;;) {
        std::vector<std::int64_t> prev(n, -1);
        prev[g.inlet()] = static_cast<std::int64_t>(g.inlet());
        std::deque<std::size_t> queue{g.inlet()};
        while (!queue.empty() && prev[g.outlet()] < 0) {
            const auto u = queue.front();
            queue.pop_front();
            for (std::size_t v = 0; v < n; ++v)
                if (prev[v] < 0 && residual[u][v] > 0) {
                    prev[v] = static_cast<std::int64_t>(u);
                    queue.push_back(v);
                }
        }
        if (prev[g.outlet()] < 0)
            break;
        std::int64_t push = std::numeric_limits<std::int64_t>::max();
        for (auto v = g.outlet(); v != g.inlet(); v = static_cast<std::size_t>(prev[v]))
            push = std::min(push, residual[static_cast<std::size_t>(prev[v])][v]);
        for (auto v = g.outlet(); v != g.inlet(); v = static_cast<std::size_t>(prev[v])) {
            const auto u = static_cast<std::size_t>(prev[v]);
            residual[u][v] -= push;
            residual[v][u] += push;
        }
        total = checked_add(total, push);
        if (total > finite_total)
            throw flow::UnboundedFlow("flow exceeds every finite cut");
    }
    return total;
}

/// Minimum cut capacity over all 2^(|V|-2) vertex partitions.
inline flow::Capacity exhaustive_min_cut(const flow::FlowGraph& g, std::size_t vertex_limit = 18) {
    const std::size_t n = g.vertex_count();
    if (n > vertex_limit)
        throw TooLarge("exhaustive min cut over " + std::to_string(n) + " vertices");
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < n; ++v)
        if (v != g.inlet() && v != g.outlet())
            free.push_back(v);
    std::optional<flow::Capacity> best;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
        std::vector<bool> side(n, false);
        side[g.inlet()] = true;
        for (std::size_t i = 0; i < free.size(); ++i)
            side[free[i]] = (mask >> i) & 1U;
        const auto c = flow::cut_capacity(g, side);
        if (!best || c < *best)
            best = c;
    }
    return *best;
}

/// Whether some X, Y satisfy 0 < |M(X) - M'(Y)| <= |P|^3, by enumeration.
inline bool exhaustive_near_miss(const Marking& m, const Marking& m2, std::size_t place_limit = 12) {
    const std::size_t n = m.place_count();
    if (m2.place_count() != n)
        throw SizeMismatch("markings are over different place sets");
    if (n > place_limit)
        throw TooLarge("exhaustive near-miss over " + std::to_string(n) + " places");
    const auto bound = static_cast<std::int64_t>(n * n * n);
    auto sums = [n](const Marking& mk) {
        std::vector<std::int64_t> out;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            std::int64_t s = 0;
            for (std::uint32_t i = 0; i < n; ++i)
                if ((mask >> i) & 1U)
                    s = checked_add(s, mk[PlaceId{i}]);
            out.push_back(s);
        }
        return out;
    };
    const auto a = sums(m);
    const auto b = sums(m2);
    for (auto x : a)
        for (auto y : b) {
            const auto gap = x > y ? x - y : y - x;
            if (gap > 0 && gap <= bound)
                return true;
        }
    return false;
}

/// A satisfying input assignment, by truth table.
inline std::optional<std::vector<bool>> truth_table_sat(const nonforgetting::SatCircuit& c,
                                                        std::size_t input_limit = 20) {
    c.validate();
    if (c.inputs > input_limit)
        throw TooLarge("truth table over " + std::to_string(c.inputs) + " inputs");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << c.inputs); ++mask) {
        std::vector<bool> assignment(c.inputs);
        for (std::size_t i = 0; i < c.inputs; ++i)
            assignment[i] = (mask >> i) & 1U;
        if (c.evaluate(assignment))
            return assignment;
    }
    return std::nullopt;
}

/// Whether some execution from `from` to `to` moves one distinguished token
/// from p through r to q. Searches the product of markings with the
/// token's position and a visited-r flag; when a transition fires, the
/// distinguished token may be the one that moves or any other.
inline std::optional<bool> token_goes_via(const IONet& net, const Marking& from, const Marking& to, PlaceId p,
                                          PlaceId r, PlaceId q, std::size_t budget = 1'000'000) {
    require_same_places(net, from);
    require_same_places(net, to);
    if (from[p] < 1 || to[q] < 1 || from.size() != to.size())
        return false;

    struct State {
        Marking m;
        PlaceId at;
        bool visited;
        bool operator==(const State&) const = default;
    };
    struct StateHash {
        std::size_t operator()(const State& s) const {
            return MarkingHash{}(s.m) * 31 + s.at.index * 2 + (s.visited ? 1 : 0);
        }
    };
    std::unordered_map<State, bool, StateHash> seen;
    std::deque<State> queue;
    auto visit = [&](State s) {
        if (seen.emplace(s, true).second)
            queue.push_back(std::move(s));
    };
    visit({from, p, p == r});

    std::size_t explored = 0;
    while (!queue.empty()) {
        State s = std::move(queue.front());
        queue.pop_front();
        if (s.m == to && s.at == q && s.visited)
            return true;
        if (++explored > budget)
            return std::nullopt;
        for (std::uint32_t k = 0; k < net.transition_count(); ++k) {
            const TransitionId id{k};
            if (!is_enabled(net, s.m, id))
                continue;
            const auto& t = net.transition(id);
            Marking next = fire(net, s.m, id);
            // It can stay put unless it is the only token at the source.
            if (s.at != t.source || s.m[t.source] >= 2)
                visit({next, s.at, s.visited});
            if (s.at == t.source) {
                const bool lands_on_r = t.destination == r;
                visit({next, t.destination, s.visited || lands_on_r});
            }
        }
    }
    return false;
}

} // namespace ionet::oracle
