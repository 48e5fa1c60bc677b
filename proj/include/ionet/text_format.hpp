#pragma once

// Line-oriented text formats for nets, markings, firing sequences,
// histories, near-miss witnesses, phase certificates and NAND circuits.
// '#' starts a comment that runs to the end of the line.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ionet/core.hpp"
#include "ionet/nearmiss.hpp"
#include "ionet/nonforgetting.hpp"

namespace ionet::text {

struct ParseError : Error {
    ParseError(std::size_t line_no, std::size_t column_no, const std::string& message)
        : Error(std::to_string(line_no) + ":" + std::to_string(column_no) + ": " + message),
          line(line_no), column(column_no), detail(message) {}
    std::size_t line;
    std::size_t column;
    std::string detail;
};

struct UnknownPlace : ParseError {
    using ParseError::ParseError;
};

struct DuplicateName : ParseError {
    using ParseError::ParseError;
};

namespace detail {

struct Token {
    std::string text;
    std::size_t column = 1;
};

inline bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
           c == '\'';
}

struct Line {
    std::size_t number = 0;
    std::vector<Token> tokens;
};

inline std::vector<Line> lex(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(start, end - start);
        ++number;
        if (auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);

        Line line{number, {}};
        for (std::size_t i = 0; i < raw.size();) {
            const char c = raw[i];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++i;
            } else if (is_ident_char(c)) {
                std::size_t j = i;
                while (j < raw.size() && is_ident_char(raw[j]))
                    ++j;
                line.tokens.push_back({std::string(raw.substr(i, j - i)), i + 1});
                i = j;
            } else if (c == '-' && i + 1 < raw.size() && raw[i + 1] == '>') {
                line.tokens.push_back({"->", i + 1});
                i += 2;
            } else if (std::string_view(":=(),^{}-").find(c) != std::string_view::npos) {
                line.tokens.push_back({std::string(1, c), i + 1});
                ++i;
            } else {
                throw ParseError(number, i + 1, std::string("unexpected character '") + c + "'");
            }
        }
        if (!line.tokens.empty())
            lines.push_back(std::move(line));
        if (end == text.size())
            break;
        start = end + 1;
    }
    return lines;
}

// Cursor over the tokens of one line.
class Reader {
public:
    explicit Reader(const Line& line) : line_(line) {}

    bool done() const { return pos_ >= line_.tokens.size(); }
    std::size_t line() const { return line_.number; }

    std::size_t column() const {
        if (!done())
            return line_.tokens[pos_].column;
        if (line_.tokens.empty())
            return 1;
        const auto& last = line_.tokens.back();
        return last.column + last.text.size();
    }

    const std::string& peek() const {
        static const std::string empty;
        return done() ? empty : line_.tokens[pos_].text;
    }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(line(), column(), message); }

    void expect(std::string_view text) {
        if (peek() != text)
            fail("expected '" + std::string(text) + "'" + (done() ? "" : ", found '" + peek() + "'"));
        ++pos_;
    }

    bool accept(std::string_view text) {
        if (peek() != text)
            return false;
        ++pos_;
        return true;
    }

    std::string identifier(std::string_view what) {
        if (done() || !is_ident_char(peek().front()))
            fail("expected " + std::string(what));
        return line_.tokens[pos_++].text;
    }

    std::int64_t number(std::string_view what) {
        const std::size_t col = column();
        const std::string text = identifier(what);
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc::result_out_of_range)
            throw ParseError(line(), col, std::string(what) + " out of range: " + text);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw ParseError(line(), col, "expected " + std::string(what) + ", found '" + text + "'");
        if (value < 0)
            throw ParseError(line(), col, std::string(what) + " must be non-negative");
        return value;
    }

    PlaceId place(const IONet& net) {
        const std::size_t col = column();
        const std::string name = identifier("a place name");
        auto p = net.find_place(name);
        if (!p)
            throw UnknownPlace(line(), col, "unknown place '" + name + "'");
        return *p;
    }

    void end() {
        if (!done())
            fail("unexpected '" + peek() + "'");
    }

private:
    const Line& line_;
    std::size_t pos_ = 0;
};

// `p1=3 p2=0 ...` up to the end of the line; commas are optional.
inline Marking read_assignments(Reader& in, const IONet& net) {
    Marking m(net.place_count());
    std::set<PlaceId> assigned;
    while (!in.done()) {
        const std::size_t col = in.column();
        const PlaceId p = in.place(net);
        if (!assigned.insert(p).second)
            throw DuplicateName(in.line(), col, "place '" + net.place_name(p) + "' assigned twice");
        in.expect("=");
        m.set(p, in.number("a token count"));
        in.accept(",");
    }
    return m;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Nets and markings

struct NetFile {
    IONet net;
    std::vector<std::pair<std::string, Marking>> markings;

    const Marking* find_marking(std::string_view name) const {
        for (const auto& [n, m] : markings)
            if (n == name)
                return &m;
        return nullptr;
    }

    bool operator==(const NetFile&) const = default;
};

inline NetFile parse_net_file(std::string_view text) {
    const auto lines = detail::lex(text);
    std::optional<std::vector<std::string>> places;
    std::map<std::string, PlaceId> place_index;
    std::vector<IOTransition> transitions;
    std::set<std::string> transition_names;

    struct PendingMarking {
        std::string name;
        const detail::Line* line;
    };
    std::vector<PendingMarking> pending;
    std::set<std::string> marking_names;

    auto place_ref = [&](detail::Reader& in) {
        const std::size_t col = in.column();
        const std::string name = in.identifier("a place name");
        auto it = place_index.find(name);
        if (it == place_index.end())
            throw UnknownPlace(in.line(), col, "unknown place '" + name + "'");
        return it->second;
    };

    for (const auto& line : lines) {
        detail::Reader in(line);
        const std::string keyword = in.identifier("'places', 'transition' or 'marking'");
        if (keyword == "places") {
            if (places)
                in.fail("places declared twice");
            in.expect(":");
            places.emplace();
            while (!in.done()) {
                const std::size_t col = in.column();
                std::string name = in.identifier("a place name");
                if (place_index.count(name))
                    throw DuplicateName(line.number, col, "duplicate place '" + name + "'");
                place_index.emplace(name, PlaceId{static_cast<std::uint32_t>(places->size())});
                places->push_back(std::move(name));
            }
            if (places->empty())
                in.fail("a net needs at least one place");
        } else if (keyword == "transition") {
            if (!places)
                in.fail("transition before the places line");
            const std::size_t col = in.column();
            std::string name = in.identifier("a transition name");
            if (!transition_names.insert(name).second)
                throw DuplicateName(line.number, col, "duplicate transition '" + name + "'");
            in.expect(":");
            const PlaceId s = place_ref(in);
            in.expect("->");
            const PlaceId d = place_ref(in);
            in.expect("obs");
            std::optional<PlaceId> o;
            if (!in.accept("-"))
                o = place_ref(in);
            in.end();
            transitions.push_back({std::move(name), s, d, o});
        } else if (keyword == "marking") {
            if (!places)
                in.fail("marking before the places line");
            const std::size_t col = in.column();
            std::string name = in.identifier("a marking name");
            if (!marking_names.insert(name).second)
                throw DuplicateName(line.number, col, "duplicate marking '" + name + "'");
            pending.push_back({std::move(name), &line});
        } else {
            throw ParseError(line.number, 1, "unknown directive '" + keyword + "'");
        }
    }
    if (!places)
        throw ParseError(lines.empty() ? 1 : lines.back().number, 1, "missing places line");

    NetFile out{IONet(*places, std::move(transitions)), {}};
    for (const auto& [name, line] : pending) {
        detail::Reader in(*line);
        in.expect("marking");
        in.identifier("a marking name");
        in.expect(":");
        out.markings.emplace_back(name, detail::read_assignments(in, out.net));
    }
    return out;
}

inline std::string print_marking_line(const IONet& net, std::string_view name, const Marking& m) {
    require_same_places(net, m);
    std::string out = "marking " + std::string(name) + ":";
    for (auto p : net.places())
        out += " " + net.place_name(p) + "=" + std::to_string(m[p]);
    return out + "\n";
}

inline std::string print_net(const IONet& net) {
    std::string out = "places:";
    for (const auto& n : net.place_names())
        out += " " + n;
    out += "\n";
    for (const auto& t : net.transitions())
        out += "transition " + t.name + ": " + net.place_name(t.source) + " -> " + net.place_name(t.destination) +
               " obs " + (t.observed ? net.place_name(*t.observed) : "-") + "\n";
    return out;
}

inline std::string print_net_file(const NetFile& f) {
    std::string out = print_net(f.net);
    for (const auto& [name, m] : f.markings)
        out += print_marking_line(f.net, name, m);
    return out;
}

/// Inline marking such as `p=3,q=0` (also accepts spaces as separators).
inline Marking parse_marking_assignments(const IONet& net, std::string_view text) {
    const auto lines = detail::lex(text);
    if (lines.size() > 1)
        throw ParseError(lines[1].number, 1, "a marking fits on one line");
    if (lines.empty())
        return Marking(net.place_count());
    detail::Reader in(lines.front());
    return detail::read_assignments(in, net);
}

inline std::string print_marking_assignments(const IONet& net, const Marking& m) {
    require_same_places(net, m);
    std::string out;
    for (auto p : net.places())
        out += (out.empty() ? "" : ",") + net.place_name(p) + "=" + std::to_string(m[p]);
    return out;
}

// ---------------------------------------------------------------------------
// Accelerated firing sequences: `sequence: t1^3 t2^1`

inline AcceleratedSequence parse_sequence(const IONet& net, std::string_view text) {
    const auto lines = detail::lex(text);
    if (lines.size() != 1)
        throw ParseError(lines.empty() ? 1 : lines[1].number, 1, "expected exactly one sequence line");
    detail::Reader in(lines.front());
    in.expect("sequence");
    in.expect(":");
    AcceleratedSequence seq;
    while (!in.done()) {
        const std::size_t col = in.column();
        const std::string name = in.identifier("a transition name");
        auto id = net.find_transition(name);
        if (!id)
            throw ParseError(in.line(), col, "unknown transition '" + name + "'");
        in.expect("^");
        const std::size_t count_col = in.column();
        const auto count = in.number("a firing count");
        if (count < 1)
            throw ParseError(in.line(), count_col, "firing count must be positive");
        // Kept step by step so that print(parse(x)) == x.
        seq.steps.push_back({*id, count});
    }
    return seq;
}

inline std::string print_sequence(const IONet& net, const AcceleratedSequence& seq) {
    std::string out = "sequence:";
    for (const auto& s : seq.steps)
        out += " " + net.transition(s.transition).name + "^" + std::to_string(s.count);
    return out + "\n";
}

// ---------------------------------------------------------------------------
// Histories: `history <length>` then `trajectory <multiplicity>: p q ...`

inline History parse_history(const IONet& net, std::string_view text) {
    const auto lines = detail::lex(text);
    if (lines.empty())
        throw ParseError(1, 1, "missing history line");
    detail::Reader head(lines.front());
    head.expect("history");
    const auto length = head.number("a history length");
    head.end();
    if (length < 1)
        throw ParseError(lines.front().number, 9, "history length must be at least 1");

    std::vector<Trajectory> ts;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        detail::Reader in(lines[i]);
        in.expect("trajectory");
        const std::size_t col = in.column();
        Trajectory t;
        t.multiplicity = in.number("a multiplicity");
        if (t.multiplicity < 1)
            throw ParseError(in.line(), col, "multiplicity must be positive");
        in.expect(":");
        while (!in.done())
            t.places.push_back(in.place(net));
        if (t.places.size() != static_cast<std::size_t>(length))
            throw ParseError(in.line(), 1,
                             "trajectory has " + std::to_string(t.places.size()) + " places, expected " +
                                 std::to_string(length));
        ts.push_back(std::move(t));
    }
    return History(static_cast<std::size_t>(length), std::move(ts));
}

inline std::string print_history(const IONet& net, const History& h) {
    std::string out = "history " + std::to_string(h.length()) + "\n";
    for (const auto& t : h.trajectories()) {
        out += "trajectory " + std::to_string(t.multiplicity) + ":";
        for (auto p : t.places)
            out += " " + net.place_name(p);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Near-miss witnesses: `nearmiss X={p1,p2} Y={p3}`

inline nearmiss::NearMissWitness parse_witness(const IONet& net, const Marking& m, const Marking& m2,
                                               std::string_view text) {
    const auto lines = detail::lex(text);
    if (lines.size() != 1)
        throw ParseError(lines.empty() ? 1 : lines[1].number, 1, "expected exactly one nearmiss line");
    detail::Reader in(lines.front());
    in.expect("nearmiss");
    auto read_set = [&](std::string_view label) {
        in.expect(label);
        in.expect("=");
        in.expect("{");
        std::vector<PlaceId> out;
        if (!in.accept("}")) {
            do {
                const std::size_t col = in.column();
                const PlaceId p = in.place(net);
                if (std::find(out.begin(), out.end(), p) != out.end())
                    throw DuplicateName(in.line(), col, "place listed twice");
                out.push_back(p);
            } while (in.accept(","));
            in.expect("}");
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    nearmiss::NearMissWitness w;
    w.x = read_set("X");
    w.y = read_set("Y");
    in.end();
    w.delta = checked_sub(m.sum(w.x), m2.sum(w.y));
    return w;
}

inline std::string print_witness(const IONet& net, const nearmiss::NearMissWitness& w) {
    auto set = [&](const std::vector<PlaceId>& ps) {
        std::string out = "{";
        for (std::size_t i = 0; i < ps.size(); ++i)
            out += (i ? "," : "") + net.place_name(ps[i]);
        return out + "}";
    };
    return "nearmiss X=" + set(w.x) + " Y=" + set(w.y) + "\n";
}

// ---------------------------------------------------------------------------
// Phase certificates: ordered `marking` lines

inline nonforgetting::PhaseCertificate parse_certificate(const IONet& net, std::string_view text) {
    nonforgetting::PhaseCertificate cert;
    for (const auto& line : detail::lex(text)) {
        detail::Reader in(line);
        in.expect("marking");
        in.identifier("a marking name");
        in.expect(":");
        cert.markings.push_back(detail::read_assignments(in, net));
    }
    return cert;
}

inline std::string print_certificate(const IONet& net, const nonforgetting::PhaseCertificate& cert) {
    std::string out;
    for (std::size_t i = 0; i < cert.markings.size(); ++i)
        out += print_marking_line(net, "M" + std::to_string(i), cert.markings[i]);
    return out;
}

// ---------------------------------------------------------------------------
// NAND circuits

inline nonforgetting::SatCircuit parse_circuit(std::string_view text) {
    using nonforgetting::SatOperand;
    nonforgetting::SatCircuit c;
    std::optional<std::size_t> inputs;
    std::map<std::string, std::size_t> gate_index;
    std::optional<std::string> output;
    std::size_t output_line = 1, output_col = 1;

    for (const auto& line : detail::lex(text)) {
        detail::Reader in(line);
        const std::string keyword = in.identifier("'inputs', 'gate' or 'output'");
        if (keyword == "inputs") {
            if (inputs)
                in.fail("inputs declared twice");
            in.expect(":");
            const std::size_t col = in.column();
            const auto n = in.number("an input count");
            if (n < 1)
                throw ParseError(line.number, col, "a circuit needs at least one input");
            inputs = static_cast<std::size_t>(n);
            in.end();
        } else if (keyword == "gate") {
            if (!inputs)
                in.fail("gate before the inputs line");
            const std::size_t col = in.column();
            std::string name = in.identifier("a gate name");
            if (gate_index.count(name) || (name.size() > 1 && name[0] == 'x' &&
                                           name.find_first_not_of("0123456789", 1) == std::string::npos))
                throw DuplicateName(line.number, col, "gate name '" + name + "' is taken");
            in.expect("=");
            in.expect("NAND");
            in.expect("(");
            auto operand = [&] {
                const std::size_t ocol = in.column();
                const std::string ref = in.identifier("an operand");
                if (ref.size() > 1 && ref[0] == 'x' && ref.find_first_not_of("0123456789", 1) == std::string::npos) {
                    const auto k = std::stoull(ref.substr(1));
                    if (k < 1 || k > *inputs)
                        throw ParseError(line.number, ocol, "no input '" + ref + "'");
                    return SatOperand{SatOperand::Kind::Input, static_cast<std::size_t>(k - 1)};
                }
                auto it = gate_index.find(ref);
                if (it == gate_index.end())
                    throw ParseError(line.number, ocol, "operand '" + ref + "' is not an earlier gate");
                return SatOperand{SatOperand::Kind::Gate, it->second};
            };
            const SatOperand lhs = operand();
            in.expect(",");
            const SatOperand rhs = operand();
            in.expect(")");
            in.end();
            gate_index.emplace(name, c.gates.size());
            c.gates.push_back({std::move(name), lhs, rhs});
        } else if (keyword == "output") {
            if (output)
                in.fail("output declared twice");
            in.expect(":");
            output_line = line.number;
            output_col = in.column();
            output = in.identifier("a gate name");
            in.end();
        } else {
            throw ParseError(line.number, 1, "unknown directive '" + keyword + "'");
        }
    }
    if (!inputs)
        throw ParseError(1, 1, "missing inputs line");
    if (c.gates.empty())
        throw ParseError(1, 1, "a circuit needs at least one gate");
    if (!output)
        throw ParseError(1, 1, "missing output line");
    auto it = gate_index.find(*output);
    if (it == gate_index.end())
        throw ParseError(output_line, output_col, "output '" + *output + "' is not a gate");
    c.inputs = *inputs;
    c.output = it->second;
    return c;
}

inline std::string print_circuit(const nonforgetting::SatCircuit& c) {
    using nonforgetting::SatOperand;
    auto gate_name = [&](std::size_t j) {
        return c.gates.at(j).name.empty() ? "g" + std::to_string(j + 1) : c.gates.at(j).name;
    };
    auto name = [&](const SatOperand& op) {
        return op.kind == SatOperand::Kind::Input ? "x" + std::to_string(op.index + 1) : gate_name(op.index);
    };
    std::string out = "inputs: " + std::to_string(c.inputs) + "\n";
    for (std::size_t j = 0; j < c.gates.size(); ++j)
        out += "gate " + gate_name(j) + " = NAND(" + name(c.gates[j].lhs) + ", " + name(c.gates[j].rhs) + ")\n";
    return out + "output: " + gate_name(c.output) + "\n";
}

} // namespace ionet::text
