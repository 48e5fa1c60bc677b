#pragma once

// Reachability for non-forgetting IO nets. A run splits into phases during
// which the set of enabled token moves is fixed; inside a phase,
// reachability is a maximum-flow question and a flow can be turned back
// into a firing sequence. A certificate is the list of phase boundaries.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <variant>
#include <vector>

#include "ionet/core.hpp"
#include "ionet/maxflow.hpp"

namespace ionet::nonforgetting {

using flow::Capacity;
using flow::FlowGraph;

/// Vertex numbering of phase flow graphs: inlet, outlet, then one vertex per place.
struct PhaseLayout {
    static constexpr flow::Vertex inlet = 0;
    static constexpr flow::Vertex outlet = 1;
    static flow::Vertex place(PlaceId p) { return 2 + p.index; }
    static bool is_place(flow::Vertex v) { return v >= 2; }
    static PlaceId place_of(flow::Vertex v) { return PlaceId{static_cast<std::uint32_t>(v - 2)}; }
};

inline FlowGraph phase_flow_graph(const IONet& net, const MoveSet& moves, const Marking& from, const Marking& to) {
    require_same_places(net, from);
    require_same_places(net, to);
    if (from.size() != to.size())
        throw SizeMismatch("phase endpoints have " + std::to_string(from.size()) + " and " +
                           std::to_string(to.size()) + " tokens");
    FlowGraph g(net.place_count() + 2, PhaseLayout::inlet, PhaseLayout::outlet);
    g.set_vertex_name(PhaseLayout::inlet, "i");
    g.set_vertex_name(PhaseLayout::outlet, "o");
    for (auto p : net.places()) {
        g.set_vertex_name(PhaseLayout::place(p), net.place_name(p));
        g.add_arc(PhaseLayout::inlet, PhaseLayout::place(p), Capacity::finite(from[p]));
    }
    for (auto p : net.places())
        g.add_arc(PhaseLayout::place(p), PhaseLayout::outlet, Capacity::finite(to[p]));
    for (const auto& m : moves)
        if (m.from != m.to)
            g.add_arc(PhaseLayout::place(m.from), PhaseLayout::place(m.to), Capacity::infinite());
    return g;
}

struct Stuck : Error {
    explicit Stuck(Marking at)
        : Error("no enabled transition realizes a remaining token move"), marking(std::move(at)) {}
    Marking marking;
};

/// Turns an integral flow of value |from| on the phase graph into a firing
/// sequence. Moves leave places with the largest surplus over `to` first;
/// when no transition of the chosen move is enabled the next admissible
/// move is tried. Throws Stuck when nothing can fire.
inline AcceleratedSequence flow_to_firing_sequence(const IONet& net, const MoveSet& moves, const Marking& from,
                                                   const Marking& to, const flow::Flow& f) {
    const FlowGraph g = phase_flow_graph(net, moves, from, to);
    if (f.on_arc.size() != g.arcs().size())
        throw Error("flow does not belong to this phase graph");
    if (f.value != from.size())
        throw Error("flow value " + std::to_string(f.value) + " differs from marking size " +
                    std::to_string(from.size()));

    std::map<TokenMove, TokenCount> pending;
    for (std::size_t i = 0; i < g.arcs().size(); ++i) {
        const auto& a = g.arcs()[i];
        if (PhaseLayout::is_place(a.from) && PhaseLayout::is_place(a.to) && f.on_arc[i] > 0)
            pending[{PhaseLayout::place_of(a.from), PhaseLayout::place_of(a.to)}] = f.on_arc[i];
    }

    AcceleratedSequence seq;
    Marking cur = from;
    while (cur != to) {
        std::vector<std::pair<TokenMove, TokenCount>> admissible;
        for (const auto& [move, count] : pending)
            if (count > 0 && cur[move.from] > to[move.from])
                admissible.emplace_back(move, count);
        std::stable_sort(admissible.begin(), admissible.end(), [&](const auto& a, const auto& b) {
            return cur[a.first.from] - to[a.first.from] > cur[b.first.from] - to[b.first.from];
        });

        bool fired = false;
        for (const auto& [move, count] : admissible) {
            const TokenCount surplus = cur[move.from] - to[move.from];
            for (std::uint32_t k = 0; k < net.transition_count() && !fired; ++k) {
                const auto& t = net.transitions()[k];
                if (t.source != move.from || t.destination != move.to)
                    continue;
                const TokenCount n =
                    std::min({count, surplus, max_consecutive_firings(net, cur, TransitionId{k})});
                if (n <= 0)
                    continue;
                cur.add(move.from, -n);
                cur.add(move.to, n);
                pending[move] -= n;
                seq.push(TransitionId{k}, n);
                fired = true;
            }
            if (fired)
                break;
        }
        if (!fired)
            throw Stuck(cur);
    }
    return seq;
}

/// Markings M_0..M_n at which new token moves first become enabled.
struct PhaseCertificate {
    std::vector<Marking> markings;

    bool operator==(const PhaseCertificate&) const = default;
};

struct CertificateRejection {
    enum class Kind { Empty, SizeMismatch, NotNonForgetting, NoNewMove, PhaseFlowDeficit, Stuck };

    Kind kind = Kind::Empty;
    std::size_t phase = 0;
    /// Flow value reached for PhaseFlowDeficit.
    std::int64_t value = 0;
    std::string detail;
};

inline const char* to_string(CertificateRejection::Kind k) {
    switch (k) {
    case CertificateRejection::Kind::Empty: return "empty certificate";
    case CertificateRejection::Kind::SizeMismatch: return "size mismatch";
    case CertificateRejection::Kind::NotNonForgetting: return "net is not non-forgetting";
    case CertificateRejection::Kind::NoNewMove: return "no new token move";
    case CertificateRejection::Kind::PhaseFlowDeficit: return "phase flow deficit";
    case CertificateRejection::Kind::Stuck: return "reconstruction stuck";
    }
    return "unknown";
}

using CertificateCheck = std::variant<AcceleratedSequence, CertificateRejection>;

/// Move sets E_i: the union of the moves enabled at M_0..M_i.
inline std::vector<MoveSet> cumulative_move_sets(const IONet& net, const PhaseCertificate& cert) {
    std::vector<MoveSet> out;
    MoveSet acc;
    for (const auto& m : cert.markings) {
        auto now = enabled_token_moves(net, m);
        acc.insert(now.begin(), now.end());
        out.push_back(acc);
    }
    return out;
}

inline CertificateCheck verify_certificate(const IONet& net, const PhaseCertificate& cert) {
    using Kind = CertificateRejection::Kind;
    if (cert.markings.empty())
        return CertificateRejection{Kind::Empty, 0, 0, "a certificate needs at least one marking"};
    if (auto w = forgetting_witness(net))
        return CertificateRejection{Kind::NotNonForgetting, 0, 0,
                                    "transition '" + net.transition(w->observing).name + "' can be forgotten"};
    const TokenCount size = cert.markings.front().size();
    for (std::size_t i = 0; i < cert.markings.size(); ++i) {
        const auto& m = cert.markings[i];
        if (m.place_count() != net.place_count() || m.size() != size)
            return CertificateRejection{Kind::SizeMismatch, i, 0,
                                        "marking " + std::to_string(i) + " differs in places or size"};
    }

    const auto moves = cumulative_move_sets(net, cert);
    AcceleratedSequence seq;
    for (std::size_t i = 0; i + 1 < cert.markings.size(); ++i) {
        if (i >= 1 && moves[i] == moves[i - 1])
            return CertificateRejection{Kind::NoNewMove, i, 0,
                                        "marking " + std::to_string(i) + " enables no new token move"};
        const auto g = phase_flow_graph(net, moves[i], cert.markings[i], cert.markings[i + 1]);
        const auto f = flow::max_flow(g);
        if (f.value != size)
            return CertificateRejection{Kind::PhaseFlowDeficit, i, f.value,
                                        "phase " + std::to_string(i) + " carries only " + std::to_string(f.value) +
                                            " of " + std::to_string(size) + " tokens"};
        try {
            seq.append(flow_to_firing_sequence(net, moves[i], cert.markings[i], cert.markings[i + 1], f));
        } catch (const Stuck&) {
            return CertificateRejection{Kind::Stuck, i, f.value,
                                        "phase " + std::to_string(i) + " flow has no enabled realization"};
        }
    }
    return seq;
}

struct CertificateSearch {
    enum class Status { Found, NotFound, BudgetExceeded, Cancelled };

    Status status = Status::NotFound;
    std::optional<PhaseCertificate> certificate;
    std::size_t states_explored = 0;
};

inline const char* to_string(CertificateSearch::Status s) {
    switch (s) {
    case CertificateSearch::Status::Found: return "found";
    case CertificateSearch::Status::NotFound: return "none";
    case CertificateSearch::Status::BudgetExceeded: return "budget-exceeded";
    case CertificateSearch::Status::Cancelled: return "cancelled";
    }
    return "unknown";
}

namespace detail {

class CertificateSearcher {
public:
    CertificateSearcher(const IONet& net, const Marking& target, std::size_t budget, std::stop_token stop)
        : net_(net), target_(target), budget_(budget), stop_(std::move(stop)) {}

    CertificateSearch run(const Marking& from) {
        CertificateSearch out;
        path_.push_back(from);
        const auto moves = enabled_token_moves(net_, from);
        visited_.insert({moves, from});
        const auto r = expand(moves, from);
        out.states_explored = explored_;
        out.status = r;
        if (r == CertificateSearch::Status::Found)
            out.certificate = PhaseCertificate{path_};
        return out;
    }

private:
    using Status = CertificateSearch::Status;

    // Reachable inside one phase: full-value flow that reconstructs.
    bool phase_reachable(const MoveSet& moves, const Marking& from, const Marking& to) const {
        const auto g = phase_flow_graph(net_, moves, from, to);
        const auto f = flow::max_flow(g);
        if (f.value != from.size())
            return false;
        try {
            flow_to_firing_sequence(net_, moves, from, to, f);
            return true;
        } catch (const Stuck&) {
            return false;
        }
    }

    // Places that can hold a token after moving along `moves` from the support of `m`.
    std::vector<PlaceId> reachable_places(const MoveSet& moves, const Marking& m) const {
        std::vector<bool> seen(net_.place_count(), false);
        std::vector<PlaceId> stack;
        for (auto p : net_.places())
            if (m[p] > 0) {
                seen[p.index] = true;
                stack.push_back(p);
            }
        while (!stack.empty()) {
            const PlaceId p = stack.back();
            stack.pop_back();
            for (auto it = moves.lower_bound({p, PlaceId{0}}); it != moves.end() && it->from == p; ++it)
                if (!seen[it->to.index]) {
                    seen[it->to.index] = true;
                    stack.push_back(it->to);
                }
        }
        std::vector<PlaceId> out;
        for (auto p : net_.places())
            if (seen[p.index])
                out.push_back(p);
        return out;
    }

    bool enables_new_move(const MoveSet& moves, const Marking& m) const {
        for (const auto& t : net_.transitions())
            if (t.observed && m[*t.observed] >= 1 && !moves.count({t.source, t.destination}))
                return true;
        return false;
    }

    Status expand(const MoveSet& moves, const Marking& m) {
        if (stop_.stop_requested())
            return Status::Cancelled;
        if (++explored_ > budget_)
            return Status::BudgetExceeded;

        if (phase_reachable(moves, m, target_)) {
            if (m != target_)
                path_.push_back(target_);
            return Status::Found;
        }

        const auto domain = reachable_places(moves, m);
        std::vector<Marking> candidates;
        Marking scratch(net_.place_count());
        const bool complete = enumerate(domain, 0, m.size(), scratch, [&](const Marking& c) {
            if (++explored_ > budget_)
                return false;
            if (c != m && enables_new_move(moves, c))
                candidates.push_back(c);
            return true;
        });
        if (!complete)
            return Status::BudgetExceeded;

        for (const auto& c : candidates) {
            MoveSet next = moves;
            const auto added = enabled_token_moves(net_, c);
            next.insert(added.begin(), added.end());
            if (visited_.count({next, c}))
                continue;
            if (!phase_reachable(moves, m, c))
                continue;
            visited_.insert({next, c});
            path_.push_back(c);
            const auto r = expand(next, c);
            if (r != Status::NotFound)
                return r;
            path_.pop_back();
        }
        return Status::NotFound;
    }

    // Visits every distribution of `left` tokens over domain[i..]; stops
    // early once `visit` returns false.
    template <class F>
    bool enumerate(const std::vector<PlaceId>& domain, std::size_t i, TokenCount left, Marking& cur, F&& visit) {
        if (i + 1 == domain.size()) {
            cur.set(domain[i], left);
            const bool go_on = visit(cur);
            cur.set(domain[i], 0);
            return go_on;
        }
        for (TokenCount k = left; k >= 0; --k) {
            cur.set(domain[i], k);
            if (!enumerate(domain, i + 1, left - k, cur, visit)) {
                cur.set(domain[i], 0);
                return false;
            }
        }
        cur.set(domain[i], 0);
        return true;
    }

    const IONet& net_;
    const Marking& target_;
    std::size_t budget_;
    std::stop_token stop_;
    std::size_t explored_ = 0;
    std::vector<Marking> path_;
    std::set<std::pair<MoveSet, Marking>> visited_;
};

} // namespace detail

/// Depth-first search over phases. Each expanded (move set, marking) pair and
/// each candidate marking considered for the next phase counts against
/// `budget`; exhausting it yields BudgetExceeded, never a negative answer.
/// Returned certificates pass verify_certificate.
inline CertificateSearch find_certificate(const IONet& net, const Marking& from, const Marking& to,
                                          std::size_t budget = 100000, std::stop_token stop = {}) {
    require_same_places(net, from);
    require_same_places(net, to);
    if (!is_non_forgetting(net))
        throw Error("find_certificate requires a non-forgetting net");
    if (from.size() != to.size())
        return CertificateSearch{CertificateSearch::Status::NotFound, std::nullopt, 0};
    if (from.size() == 0 || net.place_count() == 0)
        return CertificateSearch{CertificateSearch::Status::Found, PhaseCertificate{{from}}, 0};
    return detail::CertificateSearcher(net, to, budget, std::move(stop)).run(from);
}

// ---------------------------------------------------------------------------
// Circuit reduction

struct SatOperand {
    enum class Kind { Input, Gate };
    Kind kind = Kind::Input;
    std::size_t index = 0;

    bool operator==(const SatOperand&) const = default;
};

struct NandGate {
    std::string name;
    SatOperand lhs;
    SatOperand rhs;

    bool operator==(const NandGate&) const = default;
};

/// A circuit of binary NAND gates; gate operands precede the gate.
struct SatCircuit {
    std::size_t inputs = 0;
    std::vector<NandGate> gates;
    std::size_t output = 0;

    void validate() const {
        if (inputs == 0)
            throw Error("a circuit needs at least one input");
        if (gates.empty())
            throw Error("a circuit needs at least one gate");
        if (output >= gates.size())
            throw Error("output gate out of range");
        for (std::size_t j = 0; j < gates.size(); ++j)
            for (const auto& op : {gates[j].lhs, gates[j].rhs}) {
                if (op.kind == SatOperand::Kind::Input && op.index >= inputs)
                    throw Error("gate " + std::to_string(j) + " reads an unknown input");
                if (op.kind == SatOperand::Kind::Gate && op.index >= j)
                    throw Error("gate " + std::to_string(j) + " reads a gate that does not precede it");
            }
    }

    bool evaluate(const std::vector<bool>& assignment) const {
        std::vector<bool> value(gates.size());
        auto read = [&](const SatOperand& op) {
            return op.kind == SatOperand::Kind::Input ? assignment.at(op.index) : value.at(op.index);
        };
        for (std::size_t j = 0; j < gates.size(); ++j)
            value[j] = !(read(gates[j].lhs) && read(gates[j].rhs));
        return value[output];
    }

    bool operator==(const SatCircuit&) const = default;
};

struct SatReduction {
    IONet net;
    Marking initial;
    Marking target;
};

/// Net whose runs guess input values and evaluate the circuit gate by gate.
/// All tokens can gather in the output gate's "1" place iff the circuit is
/// satisfiable.
inline SatReduction sat_to_net(const SatCircuit& c) {
    c.validate();
    std::vector<std::string> names;
    auto add_place = [&](std::string name) {
        names.push_back(std::move(name));
        return PlaceId{static_cast<std::uint32_t>(names.size() - 1)};
    };

    struct InputPlaces {
        PlaceId unknown, zero, one;
    };
    struct GatePlaces {
        PlaceId none, rhs_one, lhs_one, zero, one;
    };
    std::vector<InputPlaces> in;
    std::vector<GatePlaces> gate;
    for (std::size_t i = 0; i < c.inputs; ++i) {
        const std::string x = "x" + std::to_string(i + 1);
        in.push_back({add_place(x + "_bot"), add_place(x + "_0"), add_place(x + "_1")});
    }
    for (std::size_t j = 0; j < c.gates.size(); ++j) {
        const std::string n = c.gates[j].name.empty() ? "g" + std::to_string(j + 1) : c.gates[j].name;
        gate.push_back({add_place(n + "_bb"), add_place(n + "_b1"), add_place(n + "_1b"), add_place(n + "_0"),
                        add_place(n + "_1")});
    }
    auto value_place = [&](const SatOperand& op, bool v) {
        if (op.kind == SatOperand::Kind::Input)
            return v ? in[op.index].one : in[op.index].zero;
        return v ? gate[op.index].one : gate[op.index].zero;
    };

    std::vector<IOTransition> ts;
    auto add = [&](PlaceId s, PlaceId d, std::optional<PlaceId> o) {
        std::string name = names[s.index] + "_to_" + names[d.index];
        if (o)
            name += "_obs_" + names[o->index];
        for (const auto& t : ts)
            if (t.name == name)
                return;
        ts.push_back({std::move(name), s, d, o});
    };

    for (const auto& x : in) {
        add(x.unknown, x.zero, std::nullopt);
        add(x.unknown, x.one, std::nullopt);
    }
    for (std::size_t j = 0; j < c.gates.size(); ++j) {
        const auto& g = gate[j];
        const auto& lhs = c.gates[j].lhs;
        const auto& rhs = c.gates[j].rhs;
        add(g.none, g.one, value_place(lhs, false));
        add(g.none, g.one, value_place(rhs, false));
        add(g.none, g.lhs_one, value_place(lhs, true));
        add(g.none, g.rhs_one, value_place(rhs, true));
        add(g.lhs_one, g.zero, value_place(rhs, true));
        add(g.lhs_one, g.one, value_place(rhs, false));
        add(g.rhs_one, g.zero, value_place(lhs, true));
        add(g.rhs_one, g.one, value_place(lhs, false));
    }

    // Once the output is known to be 1, every move any observation could
    // allow is permitted, and every token may join the output place.
    const PlaceId out_one = gate[c.output].one;
    std::set<std::pair<PlaceId, PlaceId>> pairs;
    for (const auto& t : ts)
        if (t.source != t.destination)
            pairs.insert({t.source, t.destination});
    for (const auto& [s, d] : pairs)
        add(s, d, out_one);
    for (std::uint32_t p = 0; p < names.size(); ++p)
        if (PlaceId{p} != out_one)
            add(PlaceId{p}, out_one, out_one);

    IONet net(names, ts);
    Marking initial(names.size());
    for (const auto& x : in)
        initial.set(x.unknown, 1);
    for (const auto& g : gate)
        initial.set(g.none, 1);
    Marking target(names.size());
    target.set(out_one, initial.size());
    return {std::move(net), std::move(initial), std::move(target)};
}

} // namespace ionet::nonforgetting
