#pragma once

// Reachability between markings that are not a near-miss pair.
//
// The procedure grows a set of correct restrictions (p, r, q), "no token
// travels from p to q through r", until the set is stable, then either
// proves unreachability with a deficient cut, exhibits a near-miss, or
// builds a solution flow, a realizable history from it, and finally an
// accelerated firing sequence.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ionet/core.hpp"
#include "ionet/maxflow.hpp"

namespace ionet::nearmiss {

using flow::Capacity;
using flow::FlowGraph;

struct Triple {
    PlaceId p;  // origin
    PlaceId r;  // via
    PlaceId q;  // destination

    auto operator<=>(const Triple&) const = default;
};

using PlacePair = std::pair<PlaceId, PlaceId>;

/// Set of forbidden triples over a fixed place count.
class RestrictionSet {
public:
    RestrictionSet() = default;

    explicit RestrictionSet(std::size_t place_count)
        : n_(place_count), forbidden_(place_count * place_count * place_count, false) {}

    static RestrictionSet everything(std::size_t place_count) {
        RestrictionSet r(place_count);
        r.forbidden_.assign(r.forbidden_.size(), true);
        r.count_ = r.forbidden_.size();
        return r;
    }

    std::size_t place_count() const { return n_; }
    std::size_t forbidden_count() const { return count_; }

    bool forbids(Triple t) const { return forbidden_[index(t)]; }

    void forbid(Triple t) {
        auto i = index(t);
        if (!forbidden_[i]) {
            forbidden_[i] = true;
            ++count_;
        }
    }

    void allow(Triple t) {
        auto i = index(t);
        if (forbidden_[i]) {
            forbidden_[i] = false;
            --count_;
        }
    }

    void forbid_pair(PlaceId p, PlaceId q) {
        for (std::uint32_t r = 0; r < n_; ++r)
            forbid({p, PlaceId{r}, q});
    }

    bool pair_allowed(PlaceId p, PlaceId q) const {
        for (std::uint32_t r = 0; r < n_; ++r)
            if (!forbids({p, PlaceId{r}, q}))
                return true;
        return false;
    }

    /// Places r with (p, r, q) allowed.
    std::vector<PlaceId> allowed_via(PlaceId p, PlaceId q) const {
        std::vector<PlaceId> out;
        for (std::uint32_t r = 0; r < n_; ++r)
            if (!forbids({p, PlaceId{r}, q}))
                out.push_back(PlaceId{r});
        return out;
    }

    std::vector<PlacePair> allowed_pairs() const {
        std::vector<PlacePair> out;
        for (std::uint32_t p = 0; p < n_; ++p)
            for (std::uint32_t q = 0; q < n_; ++q)
                if (pair_allowed(PlaceId{p}, PlaceId{q}))
                    out.emplace_back(PlaceId{p}, PlaceId{q});
        return out;
    }

    std::vector<Triple> allowed_triples() const {
        std::vector<Triple> out;
        for_each_triple([&](Triple t) {
            if (!forbids(t))
                out.push_back(t);
        });
        return out;
    }

    /// Visits all n^3 triples in lexicographic (p, r, q) order.
    template <class F>
    void for_each_triple(F&& f) const {
        for (std::uint32_t p = 0; p < n_; ++p)
            for (std::uint32_t r = 0; r < n_; ++r)
                for (std::uint32_t q = 0; q < n_; ++q)
                    f(Triple{PlaceId{p}, PlaceId{r}, PlaceId{q}});
    }

    std::size_t index(Triple t) const {
        if (t.p.index >= n_ || t.r.index >= n_ || t.q.index >= n_)
            throw Error("triple refers to a place outside the restriction set");
        return (static_cast<std::size_t>(t.p.index) * n_ + t.r.index) * n_ + t.q.index;
    }

    bool operator==(const RestrictionSet&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<bool> forbidden_;
    std::size_t count_ = 0;
};

/// |P|^3, the near-miss threshold.
inline TokenCount near_miss_bound(std::size_t place_count) {
    const auto n = static_cast<TokenCount>(place_count);
    return checked_mul(checked_mul(n, n), n);
}

/// Place sets X, Y with 0 < |M(X) - M'(Y)| <= |P|^3.
struct NearMissWitness {
    std::vector<PlaceId> x;
    std::vector<PlaceId> y;
    /// M(X) - M'(Y).
    TokenCount delta = 0;

    bool operator==(const NearMissWitness&) const = default;
};

inline bool is_valid_witness(const NearMissWitness& w, const Marking& m, const Marking& m2) {
    if (m.place_count() != m2.place_count())
        return false;
    for (const auto* set : {&w.x, &w.y}) {
        auto sorted = *set;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            return false;
        for (auto p : sorted)
            if (p.index >= m.place_count())
                return false;
    }
    const TokenCount delta = checked_sub(m.sum(w.x), m2.sum(w.y));
    const TokenCount gap = delta < 0 ? -delta : delta;
    return delta == w.delta && gap > 0 && gap <= near_miss_bound(m.place_count());
}

namespace detail {

// Distinct subset sums, each remembering the item that first produced it.
class SubsetSums {
public:
    explicit SubsetSums(const Marking& m) : m_(m) {
        first_[0] = -1;
        for (std::uint32_t k = 0; k < m.place_count(); ++k) {
            const TokenCount c = m[PlaceId{k}];
            if (c == 0)
                continue;
            std::vector<TokenCount> existing;
            existing.reserve(first_.size());
            for (const auto& [s, _] : first_)
                existing.push_back(s);
            for (auto s : existing)
                first_.try_emplace(checked_add(s, c), static_cast<std::int64_t>(k));
            if (first_.size() > kLimit)
                throw TooLarge("more than " + std::to_string(kLimit) + " distinct subset sums");
        }
    }

    const std::map<TokenCount, std::int64_t>& sums() const { return first_; }

    std::vector<PlaceId> subset(TokenCount s) const {
        std::vector<PlaceId> out;
        for (auto k = first_.at(s); k >= 0; k = first_.at(s)) {
            out.push_back(PlaceId{static_cast<std::uint32_t>(k)});
            s -= m_[PlaceId{static_cast<std::uint32_t>(k)}];
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static constexpr std::size_t kLimit = std::size_t{1} << 24;
    const Marking& m_;
    std::map<TokenCount, std::int64_t> first_;
};

} // namespace detail

/// Decides whether (m, m2) is a near-miss pair from the tables of distinct
/// subset sums on both sides, scanning M(X) in ascending order and checking
/// its nearest distinct neighbours among the M'(Y).
inline std::optional<NearMissWitness> is_near_miss(const Marking& m, const Marking& m2) {
    if (m.place_count() != m2.place_count())
        throw SizeMismatch("markings are over different place sets");
    const TokenCount bound = near_miss_bound(m.place_count());
    const detail::SubsetSums left(m);
    const detail::SubsetSums right(m2);
    const auto& rs = right.sums();
    for (const auto& [a, _] : left.sums()) {
        auto it = rs.lower_bound(a);
        if (it != rs.end() && it->first == a)
            ++it;
        std::optional<TokenCount> best;
        if (it != rs.end() && it->first - a <= bound)
            best = it->first;
        auto below = rs.lower_bound(a);
        if (!best && below != rs.begin()) {
            --below;
            if (a - below->first <= bound)
                best = below->first;
        }
        if (best)
            return NearMissWitness{left.subset(a), right.subset(*best), checked_sub(a, *best)};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Restriction flow graph

/// Vertex and arc numbering of restriction flow graphs: inlet, outlet,
/// initial copies, final copies; arcs from the inlet, arcs to the outlet,
/// then one infinite arc per allowed pair in lexicographic order.
struct RestrictionLayout {
    std::size_t places = 0;

    static constexpr flow::Vertex inlet = 0;
    static constexpr flow::Vertex outlet = 1;
    flow::Vertex initial(PlaceId p) const { return 2 + p.index; }
    flow::Vertex final(PlaceId p) const { return 2 + places + p.index; }
    flow::ArcId inlet_arc(PlaceId p) const { return {p.index}; }
    flow::ArcId outlet_arc(PlaceId q) const { return {places + q.index}; }

    bool is_initial(flow::Vertex v) const { return v >= 2 && v < 2 + places; }
    bool is_final(flow::Vertex v) const { return v >= 2 + places && v < 2 + 2 * places; }
};

namespace detail {

inline FlowGraph restriction_graph_unchecked(const IONet& net, const Marking& m, const Marking& m2,
                                             const RestrictionSet& r) {
    const std::size_t n = net.place_count();
    if (r.place_count() != n)
        throw SizeMismatch("restriction set and net disagree on the place count");
    const RestrictionLayout L{n};
    FlowGraph g(2 * n + 2, L.inlet, L.outlet);
    g.set_vertex_name(L.inlet, "i");
    g.set_vertex_name(L.outlet, "o");
    for (auto p : net.places()) {
        g.set_vertex_name(L.initial(p), net.place_name(p) + "^i");
        g.set_vertex_name(L.final(p), net.place_name(p) + "^f");
    }
    for (auto p : net.places())
        g.add_arc(L.inlet, L.initial(p), Capacity::finite(m[p]));
    for (auto q : net.places())
        g.add_arc(L.final(q), L.outlet, Capacity::finite(m2[q]));
    for (const auto& [p, q] : r.allowed_pairs())
        g.add_arc(L.initial(p), L.final(q), Capacity::infinite());
    return g;
}

} // namespace detail

inline FlowGraph restriction_flow_graph(const IONet& net, const Marking& m, const Marking& m2,
                                        const RestrictionSet& r) {
    require_same_places(net, m);
    require_same_places(net, m2);
    if (m.size() != m2.size())
        throw SizeMismatch("markings differ in size");
    return detail::restriction_graph_unchecked(net, m, m2, r);
}

// ---------------------------------------------------------------------------
// Flow-based conditions

struct FlowConditionsOk {};

/// Maximum flow below |M|: no history respects the restrictions.
struct Cond1Violation {
    flow::Cut cut;
    std::int64_t value = 0;
};

/// Allowed pairs that no maximum flow can use.
struct Cond2Pairs {
    std::vector<PlacePair> pairs;
};

using FlowConditions = std::variant<FlowConditionsOk, Cond1Violation, Cond2Pairs>;

inline FlowConditions check_flow_conditions(const IONet& net, const Marking& m, const Marking& m2,
                                            const RestrictionSet& r) {
    const FlowGraph g = restriction_flow_graph(net, m, m2, r);
    const TokenCount size = m.size();
    const auto base = flow::solve(g);
    if (base.flow.value < size)
        return Cond1Violation{base.cut, base.flow.value};

    const RestrictionLayout L{net.place_count()};
    Cond2Pairs violating;
    for (const auto& [p, q] : r.allowed_pairs()) {
        try {
            const auto decreased = flow::adjust_along(g, L.inlet_arc(p), L.outlet_arc(q), -1);
            if (flow::max_flow(decreased).value == size - 2)
                violating.pairs.emplace_back(p, q);
        } catch (const flow::InsufficientCapacity&) {
            violating.pairs.emplace_back(p, q);
        }
    }
    if (violating.pairs.empty())
        return FlowConditionsOk{};
    return violating;
}

// ---------------------------------------------------------------------------
// Reachability-based conditions

struct NumberedTriple {
    Triple triple;
    TransitionId transition;

    bool operator==(const NumberedTriple&) const = default;
};

struct FixpointResult {
    RestrictionSet restrictions;
    /// Triples proven traversable, in removal order, with the transition
    /// that justified each removal.
    std::vector<NumberedTriple> order;
};

namespace detail {

enum class Direction { Forward, Backward };

// Starting from "everything forbidden" minus the seeds, repeatedly removes
// the lexicographically smallest triple that some transition shows to be
// traversable. Removability is monotone, so a min-heap of candidates that
// is refreshed whenever a triple leaves the set is enough.
inline FixpointResult reachability_fixpoint(const IONet& net, const RestrictionSet& r, Direction dir) {
    const std::size_t n = net.place_count();
    if (r.place_count() != n)
        throw SizeMismatch("restriction set and net disagree on the place count");

    RestrictionSet upper = RestrictionSet::everything(n);
    std::vector<std::size_t> mid_count(n, 0);
    auto remove = [&](Triple t) {
        upper.allow(t);
        ++mid_count[t.r.index];
    };

    const bool forward = dir == Direction::Forward;
    for (std::uint32_t p = 0; p < n; ++p)
        for (std::uint32_t q = 0; q < n; ++q) {
            const Triple seed{PlaceId{p}, forward ? PlaceId{p} : PlaceId{q}, PlaceId{q}};
            if (!r.forbids(seed))
                remove(seed);
        }

    // A transition s -o-> d carries a (p,q)-token from `from` to `to`, where
    // forward reads s -> d and backward reads d -> s.
    auto from_of = [&](const IOTransition& t) { return forward ? t.source : t.destination; };
    auto to_of = [&](const IOTransition& t) { return forward ? t.destination : t.source; };

    std::vector<std::vector<TransitionId>> into(n);
    std::vector<std::vector<TransitionId>> out_of(n);
    std::vector<std::vector<TransitionId>> observing(n);
    for (std::uint32_t k = 0; k < net.transition_count(); ++k) {
        const auto& t = net.transitions()[k];
        if (t.source == t.destination)
            continue;
        into[to_of(t).index].push_back(TransitionId{k});
        out_of[from_of(t).index].push_back(TransitionId{k});
        if (t.observed)
            observing[t.observed->index].push_back(TransitionId{k});
    }

    auto justification = [&](Triple t) -> std::optional<TransitionId> {
        if (!upper.forbids(t) || r.forbids(t))
            return std::nullopt;
        for (auto id : into[t.r.index]) {
            const auto& tr = net.transition(id);
            if (upper.forbids({t.p, from_of(tr), t.q}))
                continue;
            if (tr.observed && mid_count[tr.observed->index] == 0)
                continue;
            return id;
        }
        return std::nullopt;
    };

    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> heap;
    auto triple_at = [&](std::size_t i) {
        const auto q = static_cast<std::uint32_t>(i % n);
        const auto rr = static_cast<std::uint32_t>((i / n) % n);
        const auto p = static_cast<std::uint32_t>(i / (n * n));
        return Triple{PlaceId{p}, PlaceId{rr}, PlaceId{q}};
    };
    auto consider = [&](Triple t) {
        if (justification(t))
            heap.push(upper.index(t));
    };
    r.for_each_triple(consider);

    FixpointResult result;
    while (!heap.empty()) {
        const Triple t = triple_at(heap.top());
        heap.pop();
        const auto why = justification(t);
        if (!why)
            continue;
        const bool first_at_mid = mid_count[t.r.index] == 0;
        remove(t);
        result.order.push_back({t, *why});

        for (auto id : out_of[t.r.index])
            consider({t.p, to_of(net.transition(id)), t.q});
        if (first_at_mid)
            for (auto id : observing[t.r.index]) {
                const auto& tr = net.transition(id);
                for (std::uint32_t p = 0; p < n; ++p)
                    for (std::uint32_t q = 0; q < n; ++q)
                        if (!upper.forbids({PlaceId{p}, from_of(tr), PlaceId{q}}))
                            consider({PlaceId{p}, to_of(tr), PlaceId{q}});
            }
    }

    // A (p,q)-trajectory passes through both q (forward) or p (backward);
    // if that visit is impossible the whole pair is.
    for (std::uint32_t p = 0; p < n; ++p)
        for (std::uint32_t q = 0; q < n; ++q) {
            const PlaceId pp{p}, qq{q};
            const Triple endpoint{pp, forward ? qq : pp, qq};
            if (upper.forbids(endpoint) && upper.pair_allowed(pp, qq))
                upper.forbid_pair(pp, qq);
        }

    result.restrictions = std::move(upper);
    return result;
}

} // namespace detail

/// Forward closure: which triples can a (p,q)-token reach starting from p.
inline FixpointResult fixpoint_condition3(const IONet& net, const RestrictionSet& r) {
    return detail::reachability_fixpoint(net, r, detail::Direction::Forward);
}

/// Backward closure: which triples can a (p,q)-token reach q from.
inline FixpointResult fixpoint_condition4(const IONet& net, const RestrictionSet& r) {
    return detail::reachability_fixpoint(net, r, detail::Direction::Backward);
}

// ---------------------------------------------------------------------------
// Stabilization

struct Stable {
    RestrictionSet restrictions;
    std::size_t iterations = 0;
};

struct ProvedUnreachable {
    RestrictionSet restrictions;
    flow::Cut cut;
};

using StabilizeResult = std::variant<Stable, ProvedUnreachable>;

inline StabilizeResult stabilize(const IONet& net, const Marking& m, const Marking& m2) {
    RestrictionSet r(net.place_count());
    for (std::size_t iteration = 1;; ++iteration) {
        const auto conditions = check_flow_conditions(net, m, m2, r);
        if (const auto* v = std::get_if<Cond1Violation>(&conditions))
            return ProvedUnreachable{r, v->cut};
        if (const auto* v = std::get_if<Cond2Pairs>(&conditions)) {
            for (const auto& [p, q] : v->pairs)
                r.forbid_pair(p, q);
            continue;
        }
        auto forward = fixpoint_condition3(net, r).restrictions;
        if (forward != r) {
            r = std::move(forward);
            continue;
        }
        auto backward = fixpoint_condition4(net, r).restrictions;
        if (backward != r) {
            r = std::move(backward);
            continue;
        }
        return Stable{r, iteration};
    }
}

// ---------------------------------------------------------------------------
// Solution flow

using SolutionFlow = std::variant<flow::Flow, NearMissWitness>;

/// Flow of value |M| on the restriction graph that carries at least |P|
/// units across every allowed pair, or a near-miss when none can be built.
inline SolutionFlow solution_flow(const IONet& net, const Marking& m, const Marking& m2, const RestrictionSet& r) {
    const FlowGraph g = restriction_flow_graph(net, m, m2, r);
    const std::size_t n = net.place_count();
    const RestrictionLayout L{n};
    const auto step = static_cast<std::int64_t>(n);
    const auto pairs = r.allowed_pairs();

    FlowGraph decreased = g;
    for (const auto& [p, q] : pairs) {
        try {
            decreased = flow::adjust_along(decreased, L.inlet_arc(p), L.outlet_arc(q), -step);
        } catch (const flow::InsufficientCapacity& e) {
            NearMissWitness w;
            if (e.arc == L.inlet_arc(p))
                w.x = {p};
            else
                w.y = {q};
            w.delta = checked_sub(m.sum(w.x), m2.sum(w.y));
            if (!is_valid_witness(w, m, m2))
                throw InternalInvariantBroken("endpoint deficit does not give a near-miss; restrictions not stable?");
            return w;
        }
    }

    const TokenCount size = m.size();
    const TokenCount required = checked_sub(size, checked_mul(static_cast<std::int64_t>(pairs.size()), step));
    const auto solved = flow::solve(decreased);
    if (solved.flow.value < required) {
        NearMissWitness w;
        for (auto p : net.places()) {
            if (solved.cut.inlet_side[L.initial(p)])
                w.x.push_back(p);
            if (solved.cut.inlet_side[L.final(p)])
                w.y.push_back(p);
        }
        w.delta = checked_sub(m.sum(w.x), m2.sum(w.y));
        if (!is_valid_witness(w, m, m2))
            throw InternalInvariantBroken("deficient cut does not give a near-miss; restrictions not stable?");
        return w;
    }

    flow::Flow f = solved.flow;
    for (const auto& [p, q] : pairs) {
        const auto arc = g.find_arc(L.initial(p), L.final(q));
        f.on_arc[L.inlet_arc(p).index] += step;
        f.on_arc[arc->index] += step;
        f.on_arc[L.outlet_arc(q).index] += step;
        f.value += step;
    }
    if (auto problem = flow::flow_problem(g, f); problem || f.value != size)
        throw InternalInvariantBroken("solution flow is invalid: " + problem.value_or("wrong value"));
    return f;
}

// ---------------------------------------------------------------------------
// History construction

namespace detail {

// Half of the history: trajectories labelled by allowed triples walk, one
// numbered triple per step, from their start place (p going forward, q
// going backward) to r. Returns one place sequence per label in time order
// of the walk.
inline std::vector<std::vector<PlaceId>> half_history(const IONet& net, const std::vector<Triple>& labels,
                                                      const std::vector<NumberedTriple>& order, bool forward) {
    const std::size_t n = net.place_count();
    std::map<Triple, std::size_t> slot;
    for (std::size_t i = 0; i < labels.size(); ++i)
        slot[labels[i]] = i;

    // parent[(p,r,q)] = place the triple's token comes from in the walk.
    std::map<Triple, PlaceId> parent;
    for (const auto& [t, id] : order) {
        const auto& tr = net.transition(id);
        parent[t] = forward ? tr.source : tr.destination;
    }
    auto descends_from = [&](Triple label, PlaceId ancestor) {
        PlaceId cur = label.r;
        for (std::size_t guard = 0; guard <= n; ++guard) {
            if (cur == ancestor)
                return true;
            auto it = parent.find({label.p, cur, label.q});
            if (it == parent.end())
                return false;
            cur = it->second;
        }
        throw InternalInvariantBroken("cycle in the traversal numbering");
    };

    std::vector<std::vector<PlaceId>> walk(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        walk[i].push_back(forward ? labels[i].p : labels[i].q);

    for (const auto& [t, id] : order) {
        if (!slot.count(t))
            throw InternalInvariantBroken("numbered triple is not an allowed triple");
        const PlaceId from = parent.at(t);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const PlaceId here = walk[i].back();
            const Triple& label = labels[i];
            if (label.p == t.p && label.q == t.q && descends_from(label, t.r)) {
                if (here != from)
                    throw InternalInvariantBroken("trajectory is not at the parent place of its next step");
                walk[i].push_back(t.r);
            } else {
                walk[i].push_back(here);
            }
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (walk[i].back() != labels[i].r)
            throw InternalInvariantBroken("trajectory did not reach its via place");
    return walk;
}

} // namespace detail

/// Builds a realizable history from M to M' with exactly f(v_p^i, v_q^f)
/// trajectories from p to q for each allowed pair.
inline History build_history(const IONet& net, const Marking& m, const Marking& m2, const RestrictionSet& r,
                             const flow::Flow& f, const std::vector<NumberedTriple>& forward_order,
                             const std::vector<NumberedTriple>& backward_order) {
    const std::size_t n = net.place_count();
    const RestrictionLayout L{n};
    const FlowGraph g = restriction_flow_graph(net, m, m2, r);
    if (f.on_arc.size() != g.arcs().size())
        throw InternalInvariantBroken("solution flow does not match the restriction graph");

    const auto labels = r.allowed_triples();
    if (labels.empty()) {
        if (m.size() != 0)
            throw InternalInvariantBroken("no allowed triples for a non-empty marking");
        return History(1, {});
    }
    const auto fwd = detail::half_history(net, labels, forward_order, true);
    auto bwd = detail::half_history(net, labels, backward_order, false);

    std::vector<Trajectory> trajectories;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::reverse(bwd[i].begin(), bwd[i].end());
        Trajectory t;
        t.places = fwd[i];
        t.places.insert(t.places.end(), bwd[i].begin() + 1, bwd[i].end());
        trajectories.push_back(std::move(t));
    }

    // The (p,q,q)-labelled trajectory absorbs the tokens beyond one per triple.
    for (const auto& [p, q] : r.allowed_pairs()) {
        const auto arc = g.find_arc(L.initial(p), L.final(q));
        const TokenCount want = f[*arc];
        const auto via = static_cast<TokenCount>(r.allowed_via(p, q).size());
        if (want < via)
            throw InternalInvariantBroken("solution flow below the number of allowed triples of a pair");
        auto it = std::find(labels.begin(), labels.end(), Triple{p, q, q});
        if (it == labels.end())
            throw InternalInvariantBroken("allowed pair without its endpoint triple");
        trajectories[static_cast<std::size_t>(it - labels.begin())].multiplicity += want - via;
    }

    const std::size_t length = fwd.front().size() + bwd.front().size() - 1;
    History h(length, std::move(trajectories));
    if (h.initial_marking(n) != m || h.final_marking(n) != m2)
        throw InternalInvariantBroken("history endpoints differ from the queried markings");
    return h;
}

// ---------------------------------------------------------------------------
// Verdict

struct Reachable {
    AcceleratedSequence sequence;
    RestrictionSet restrictions;
    flow::Flow solution;
    History history;
};

struct Unreachable {
    RestrictionSet restrictions;
    flow::Cut cut;
};

struct NearMiss {
    NearMissWitness witness;
    RestrictionSet restrictions;
};

using Verdict = std::variant<Reachable, Unreachable, NearMiss>;

inline Verdict decide_reachability(const IONet& net, const Marking& m, const Marking& m2) {
    require_same_places(net, m);
    require_same_places(net, m2);
    const std::size_t n = net.place_count();

    if (m.size() != m2.size()) {
        RestrictionSet none(n);
        const auto g = detail::restriction_graph_unchecked(net, m, m2, none);
        return Unreachable{none, flow::min_cut(g)};
    }

    auto stable = stabilize(net, m, m2);
    if (auto* u = std::get_if<ProvedUnreachable>(&stable))
        return Unreachable{std::move(u->restrictions), std::move(u->cut)};
    RestrictionSet r = std::get<Stable>(std::move(stable)).restrictions;

    if (m == m2) {
        std::vector<Trajectory> still;
        for (auto p : net.places())
            if (m[p] > 0)
                still.push_back({{p}, m[p]});
        const auto g = restriction_flow_graph(net, m, m2, r);
        return Reachable{{}, r, flow::max_flow(g), History(1, std::move(still))};
    }

    auto solved = solution_flow(net, m, m2, r);
    if (auto* w = std::get_if<NearMissWitness>(&solved))
        return NearMiss{std::move(*w), std::move(r)};
    const auto& f = std::get<flow::Flow>(solved);

    const auto forward = fixpoint_condition3(net, r);
    const auto backward = fixpoint_condition4(net, r);
    if (forward.restrictions != r || backward.restrictions != r)
        throw InternalInvariantBroken("restriction set is not stable");
    History h = build_history(net, m, m2, r, f, forward.order, backward.order);

    auto checked = check_history_realizable(net, h);
    if (auto* rejection = std::get_if<HistoryRejection>(&checked))
        throw InternalInvariantBroken("constructed history is not realizable at step " +
                                      std::to_string(rejection->step) + ": " + rejection->detail);
    auto seq = std::get<AcceleratedSequence>(std::move(checked));
    if (replay(net, m, seq) != m2)
        throw InternalInvariantBroken("extracted sequence does not reach the target marking");
    return Reachable{std::move(seq), std::move(r), f, std::move(h)};
}

} // namespace ionet::nearmiss
