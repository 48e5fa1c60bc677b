#pragma once

// Immediate observation (IO) Petri nets: data model, firing semantics,
// accelerated replay, token moves, the non-forgetting property and
// realizable histories.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "ionet/error.hpp"

namespace ionet {

using TokenCount = std::int64_t;

struct PlaceId {
    std::uint32_t index = 0;

    auto operator<=>(const PlaceId&) const = default;
};

struct TransitionId {
    std::uint32_t index = 0;

    auto operator<=>(const TransitionId&) const = default;
};

/// A transition `source -(observed)-> destination`. The preset is the
/// multiset {source, observed} and the postset {destination, observed};
/// a missing observed place means the move needs no observer at all.
struct IOTransition {
    std::string name;
    PlaceId source;
    PlaceId destination;
    std::optional<PlaceId> observed;

    bool operator==(const IOTransition&) const = default;
};

class IONet {
public:
    IONet() = default;

    IONet(std::vector<std::string> place_names, std::vector<IOTransition> transitions)
        : place_names_(std::move(place_names)), transitions_(std::move(transitions)) {
        std::unordered_set<std::string> seen;
        for (const auto& name : place_names_) {
            if (name.empty())
                throw Error("place names must be non-empty");
            if (!seen.insert(name).second)
                throw Error("duplicate place name '" + name + "'");
        }
        if (place_names_.size() > std::numeric_limits<std::uint32_t>::max())
            throw TooLarge("too many places");
        std::unordered_set<std::string> seen_transitions;
        for (const auto& t : transitions_) {
            if (t.name.empty())
                throw Error("transition names must be non-empty");
            if (!seen_transitions.insert(t.name).second)
                throw Error("duplicate transition name '" + t.name + "'");
            check_place(t.source, t.name);
            check_place(t.destination, t.name);
            if (t.observed)
                check_place(*t.observed, t.name);
        }
    }

    std::size_t place_count() const { return place_names_.size(); }
    std::size_t transition_count() const { return transitions_.size(); }

    const std::vector<std::string>& place_names() const { return place_names_; }
    const std::vector<IOTransition>& transitions() const { return transitions_; }

    const std::string& place_name(PlaceId p) const { return place_names_.at(p.index); }
    const IOTransition& transition(TransitionId t) const { return transitions_.at(t.index); }

    std::optional<PlaceId> find_place(std::string_view name) const {
        for (std::size_t i = 0; i < place_names_.size(); ++i)
            if (place_names_[i] == name)
                return PlaceId{static_cast<std::uint32_t>(i)};
        return std::nullopt;
    }

    std::optional<TransitionId> find_transition(std::string_view name) const {
        for (std::size_t i = 0; i < transitions_.size(); ++i)
            if (transitions_[i].name == name)
                return TransitionId{static_cast<std::uint32_t>(i)};
        return std::nullopt;
    }

    std::vector<PlaceId> places() const {
        std::vector<PlaceId> out;
        out.reserve(place_names_.size());
        for (std::size_t i = 0; i < place_names_.size(); ++i)
            out.push_back(PlaceId{static_cast<std::uint32_t>(i)});
        return out;
    }

    bool operator==(const IONet&) const = default;

private:
    void check_place(PlaceId p, const std::string& transition) const {
        if (p.index >= place_names_.size())
            throw Error("transition '" + transition + "' refers to unknown place index " +
                        std::to_string(p.index));
    }

    std::vector<std::string> place_names_;
    std::vector<IOTransition> transitions_;
};

/// Token counts for every place of a net.
class Marking {
public:
    Marking() = default;

    explicit Marking(std::size_t place_count) : counts_(place_count, 0) {}

    explicit Marking(std::vector<TokenCount> counts) : counts_(std::move(counts)) {
        for (auto c : counts_)
            if (c < 0)
                throw Error("token counts must be nonnegative");
    }

    // Keeps Marking({2}) a one-place marking rather than two empty places.
    Marking(std::initializer_list<TokenCount> counts) : Marking(std::vector<TokenCount>(counts)) {}

    std::size_t place_count() const { return counts_.size(); }

    TokenCount operator[](PlaceId p) const { return counts_.at(p.index); }

    void set(PlaceId p, TokenCount value) {
        if (value < 0)
            throw Error("token counts must be nonnegative");
        counts_.at(p.index) = value;
    }

    void add(PlaceId p, TokenCount delta) {
        auto next = checked_add(counts_.at(p.index), delta);
        if (next < 0)
            throw Error("token count would become negative");
        counts_[p.index] = next;
    }

    /// Total number of tokens.
    TokenCount size() const {
        TokenCount total = 0;
        for (auto c : counts_)
            total = checked_add(total, c);
        return total;
    }

    TokenCount sum(std::span<const PlaceId> places) const {
        TokenCount total = 0;
        for (auto p : places)
            total = checked_add(total, (*this)[p]);
        return total;
    }

    const std::vector<TokenCount>& counts() const { return counts_; }

    bool operator==(const Marking&) const = default;
    auto operator<=>(const Marking&) const = default;

private:
    std::vector<TokenCount> counts_;
};

struct MarkingHash {
    std::size_t operator()(const Marking& m) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (auto c : m.counts())
            h ^= std::hash<TokenCount>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

struct TokenMove {
    PlaceId from;
    PlaceId to;

    auto operator<=>(const TokenMove&) const = default;
};

using MoveSet = std::set<TokenMove>;

struct AcceleratedStep {
    TransitionId transition;
    TokenCount count = 1;

    bool operator==(const AcceleratedStep&) const = default;
};

/// A firing sequence stored as (transition, repetition count) pairs.
struct AcceleratedSequence {
    std::vector<AcceleratedStep> steps;

    /// Appends a step, merging with the previous one when the transition repeats.
    void push(TransitionId t, TokenCount count) {
        if (count <= 0)
            return;
        if (!steps.empty() && steps.back().transition == t)
            steps.back().count = checked_add(steps.back().count, count);
        else
            steps.push_back({t, count});
    }

    void append(const AcceleratedSequence& other) {
        for (const auto& s : other.steps)
            push(s.transition, s.count);
    }

    TokenCount firing_count() const {
        TokenCount total = 0;
        for (const auto& s : steps)
            total = checked_add(total, s.count);
        return total;
    }

    bool empty() const { return steps.empty(); }

    bool operator==(const AcceleratedSequence&) const = default;
};

struct NotEnabled : Error {
    NotEnabled(TransitionId t, std::string what) : Error(std::move(what)), transition(t) {}
    TransitionId transition;
};

struct ReplayFailed : Error {
    ReplayFailed(std::size_t step_index, TokenCount firing_index, std::string what)
        : Error(std::move(what)), step(step_index), firing(firing_index) {}
    std::size_t step;
    /// 1-based index of the firing inside the step that was not enabled.
    TokenCount firing;
};

inline void require_same_places(const IONet& net, const Marking& m) {
    if (m.place_count() != net.place_count())
        throw SizeMismatch("marking has " + std::to_string(m.place_count()) + " places, net has " +
                           std::to_string(net.place_count()));
}

inline bool is_enabled(const IONet& net, const Marking& m, TransitionId id) {
    const auto& t = net.transition(id);
    TokenCount need_source = 1;
    if (t.observed) {
        if (*t.observed == t.source)
            need_source = 2;
        else if (m[*t.observed] < 1)
            return false;
    }
    return m[t.source] >= need_source;
}

/// Fires `id` once. Throws NotEnabled when its preset is not covered by `m`.
inline Marking fire(const IONet& net, const Marking& m, TransitionId id) {
    require_same_places(net, m);
    if (!is_enabled(net, m, id))
        throw NotEnabled(id, "transition '" + net.transition(id).name + "' is not enabled");
    const auto& t = net.transition(id);
    Marking out = m;
    out.add(t.source, -1);
    out.add(t.destination, 1);
    return out;
}

inline constexpr TokenCount kUnboundedFirings = std::numeric_limits<TokenCount>::max();

/// Number of consecutive firings of `id` possible from `m`, or
/// kUnboundedFirings for an enabled transition that leaves the marking unchanged.
inline TokenCount max_consecutive_firings(const IONet& net, const Marking& m, TransitionId id) {
    const auto& t = net.transition(id);
    const TokenCount source = m[t.source];
    if (t.source == t.destination)
        return is_enabled(net, m, id) ? kUnboundedFirings : 0;
    if (!t.observed)
        return source;
    const PlaceId observed = *t.observed;
    if (observed == t.source)
        return std::max<TokenCount>(0, source - 1);
    // The observer sits at the destination: only the first firing needs it marked.
    if (m[observed] < 1)
        return 0;
    return source;
}

/// Replays `seq` from `start`; each step (t, k) is checked in closed form.
inline Marking replay(const IONet& net, const Marking& start, const AcceleratedSequence& seq) {
    require_same_places(net, start);
    Marking m = start;
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        const auto& step = seq.steps[i];
        if (step.transition.index >= net.transition_count())
            throw ReplayFailed(i, 1, "step " + std::to_string(i) + " names an unknown transition");
        if (step.count < 1)
            throw ReplayFailed(i, 0, "step " + std::to_string(i) + " has a nonpositive count");
        const auto& t = net.transition(step.transition);
        const TokenCount possible = max_consecutive_firings(net, m, step.transition);
        if (possible < step.count)
            throw ReplayFailed(i, possible + 1,
                               "step " + std::to_string(i) + ": firing " + std::to_string(possible + 1) +
                                   " of '" + t.name + "' is not enabled");
        if (t.source != t.destination) {
            m.add(t.source, -step.count);
            m.add(t.destination, step.count);
        }
    }
    return m;
}

/// Replays and reports every intermediate marking (one per step), for audits.
inline std::vector<Marking> replay_trace(const IONet& net, const Marking& start,
                                         const AcceleratedSequence& seq) {
    std::vector<Marking> trace{start};
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        AcceleratedSequence one{{seq.steps[i]}};
        try {
            trace.push_back(replay(net, trace.back(), one));
        } catch (const ReplayFailed& e) {
            throw ReplayFailed(i, e.firing, e.what());
        }
    }
    return trace;
}

inline MoveSet enabled_token_moves(const IONet& net, const Marking& m) {
    require_same_places(net, m);
    MoveSet moves;
    for (const auto& t : net.transitions())
        if (!t.observed || m[*t.observed] >= 1)
            moves.insert({t.source, t.destination});
    return moves;
}

/// Evidence that a net forgets: `observer_moves` can take the token that
/// `observing` relies on to a place from which `observing`'s move is no
/// longer enabled, because `missing` does not exist.
struct ForgettingWitness {
    TransitionId observing;
    TransitionId observer_moves;
    IOTransition missing;
};

namespace detail {

inline bool has_unobserved(const IONet& net, PlaceId from, PlaceId to) {
    for (const auto& t : net.transitions())
        if (t.source == from && t.destination == to && !t.observed)
            return true;
    return false;
}

inline bool has_observed_by(const IONet& net, PlaceId from, PlaceId to, PlaceId observed) {
    for (const auto& t : net.transitions())
        if (t.source == from && t.destination == to && t.observed == observed)
            return true;
    return false;
}

} // namespace detail

/// First violation of the non-forgetting condition, or nullopt when the
/// net is non-forgetting. A move that also has an unobserved transition is
/// always enabled and carries no obligation.
inline std::optional<ForgettingWitness> forgetting_witness(const IONet& net) {
    const auto& ts = net.transitions();
    for (std::uint32_t i = 0; i < ts.size(); ++i) {
        const auto& t = ts[i];
        if (!t.observed || detail::has_unobserved(net, t.source, t.destination))
            continue;
        for (std::uint32_t j = 0; j < ts.size(); ++j) {
            const auto& u = ts[j];
            if (u.source != *t.observed)
                continue;
            if (!detail::has_observed_by(net, t.source, t.destination, u.destination))
                return ForgettingWitness{TransitionId{i}, TransitionId{j},
                                         IOTransition{"", t.source, t.destination, u.destination}};
        }
    }
    return std::nullopt;
}

inline bool is_non_forgetting(const IONet& net) { return !forgetting_witness(net).has_value(); }

/// Smallest extension of `net` that is non-forgetting. Added transitions are
/// appended after the original ones and named `<src>_<dst>_obs_<place>`.
inline IONet non_forgetting_closure(const IONet& net) {
    std::vector<IOTransition> ts = net.transitions();
    std::unordered_set<std::string> names;
    for (const auto& t : ts)
        names.insert(t.name);
    auto fresh_name = [&](const IOTransition& t) {
        std::string base = net.place_name(t.source) + "_" + net.place_name(t.destination) + "_obs_" +
                           net.place_name(*t.observed);
        std::string name = base;
        for (int k = 2; names.count(name); ++k)
            name = base + "_" + std::to_string(k);
        names.insert(name);
        return name;
    };

    for (;;) {
        IONet current(net.place_names(), ts);
        auto witness = forgetting_witness(current);
        if (!witness)
            return current;
        IOTransition added = witness->missing;
        added.name = fresh_name(added);
        ts.push_back(std::move(added));
    }
}

/// Strict IO form: every unobserved transition gets `observer_name` as its
/// observed place. The returned marking extension puts one token there.
inline IONet with_observer_place(const IONet& net, const std::string& observer_name) {
    auto names = net.place_names();
    names.push_back(observer_name);
    const PlaceId observer{static_cast<std::uint32_t>(net.place_count())};
    auto ts = net.transitions();
    for (auto& t : ts)
        if (!t.observed)
            t.observed = observer;
    return IONet(std::move(names), std::move(ts));
}

inline Marking with_observer_token(const Marking& m) {
    auto counts = m.counts();
    counts.push_back(1);
    return Marking(std::move(counts));
}

// ---------------------------------------------------------------------------
// Histories

struct Trajectory {
    std::vector<PlaceId> places;
    TokenCount multiplicity = 1;

    bool operator==(const Trajectory&) const = default;
};

/// A multiset of equal-length trajectories, one per token (with multiplicity).
class History {
public:
    History() = default;

    History(std::size_t length, std::vector<Trajectory> trajectories)
        : length_(length), trajectories_(std::move(trajectories)) {
        if (length_ < 1)
            throw Error("history length must be at least 1");
        for (const auto& t : trajectories_) {
            if (t.places.size() != length_)
                throw Error("trajectory length " + std::to_string(t.places.size()) +
                            " differs from history length " + std::to_string(length_));
            if (t.multiplicity < 1)
                throw Error("trajectory multiplicity must be positive");
        }
    }

    std::size_t length() const { return length_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }

    /// Marking at 0-based position `i` (0 is the initial marking).
    Marking marking_at(std::size_t i, std::size_t place_count) const {
        Marking m(place_count);
        for (const auto& t : trajectories_) {
            if (t.places.at(i).index >= place_count)
                throw Error("trajectory refers to unknown place");
            m.add(t.places[i], t.multiplicity);
        }
        return m;
    }

    Marking initial_marking(std::size_t place_count) const { return marking_at(0, place_count); }
    Marking final_marking(std::size_t place_count) const { return marking_at(length_ - 1, place_count); }

    bool operator==(const History&) const = default;

private:
    std::size_t length_ = 1;
    std::vector<Trajectory> trajectories_;
};

struct HistoryRejection {
    enum class Reason { Malformed, MixedMoves, NoRealizingTransition, ObserverMissing };

    /// 0-based step index (step i goes from position i to i + 1).
    std::size_t step = 0;
    Reason reason = Reason::Malformed;
    std::string detail;
};

inline const char* to_string(HistoryRejection::Reason r) {
    switch (r) {
    case HistoryRejection::Reason::Malformed: return "malformed";
    case HistoryRejection::Reason::MixedMoves: return "mixed moves";
    case HistoryRejection::Reason::NoRealizingTransition: return "no realizing transition";
    case HistoryRejection::Reason::ObserverMissing: return "observer missing";
    }
    return "unknown";
}

/// Checks that every step of `h` is realized by a single transition fired
/// once per moving token, with a resting observer, and returns that sequence.
inline std::variant<AcceleratedSequence, HistoryRejection> check_history_realizable(const IONet& net,
                                                                                     const History& h) {
    const std::size_t n = net.place_count();
    for (const auto& t : h.trajectories())
        for (auto p : t.places)
            if (p.index >= n)
                return HistoryRejection{0, HistoryRejection::Reason::Malformed, "unknown place in trajectory"};

    AcceleratedSequence seq;
    for (std::size_t i = 0; i + 1 < h.length(); ++i) {
        std::optional<TokenMove> move;
        TokenCount movers = 0;
        std::vector<bool> resting(n, false);
        for (const auto& t : h.trajectories()) {
            const PlaceId a = t.places[i];
            const PlaceId b = t.places[i + 1];
            if (a == b) {
                resting[a.index] = true;
                continue;
            }
            const TokenMove m{a, b};
            if (move && *move != m)
                return HistoryRejection{i, HistoryRejection::Reason::MixedMoves,
                                        "step moves tokens " + net.place_name(move->from) + "->" +
                                            net.place_name(move->to) + " and " + net.place_name(a) + "->" +
                                            net.place_name(b)};
            move = m;
            movers = checked_add(movers, t.multiplicity);
        }
        if (!move)
            continue;

        bool any_transition = false;
        std::optional<TransitionId> realizing;
        for (std::uint32_t k = 0; k < net.transition_count(); ++k) {
            const auto& t = net.transitions()[k];
            if (t.source != move->from || t.destination != move->to)
                continue;
            any_transition = true;
            if (!t.observed || resting[t.observed->index]) {
                realizing = TransitionId{k};
                break;
            }
        }
        if (!any_transition)
            return HistoryRejection{i, HistoryRejection::Reason::NoRealizingTransition,
                                    "no transition " + net.place_name(move->from) + "->" +
                                        net.place_name(move->to)};
        if (!realizing)
            return HistoryRejection{i, HistoryRejection::Reason::ObserverMissing,
                                    "no transition " + net.place_name(move->from) + "->" +
                                        net.place_name(move->to) + " has a resting observer"};
        seq.steps.push_back({*realizing, movers});
    }
    return seq;
}

} // namespace ionet
