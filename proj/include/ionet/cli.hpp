#pragma once

// Command-line front end. `run` takes the argument list without the
// program name and writes the report to `out`, diagnostics to `err`.
//
// Exit codes: check 0 reachable / 1 unreachable / 2 near-miss;
// verify-cert and validate-* 0 accepted / 1 rejected; find-cert and oracle
// 0 found / 1 not found / 3 budget exceeded; near-miss 0 none / 2 witness;
// 64 usage, I/O or parse error; 65 input violates a precondition;
// 70 internal error.

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionet/core.hpp"
#include "ionet/maxflow.hpp"
#include "ionet/nearmiss.hpp"
#include "ionet/nonforgetting.hpp"
#include "ionet/oracle.hpp"
#include "ionet/text_format.hpp"

namespace ionet::cli {

inline constexpr int kUsageError = 64;
inline constexpr int kPreconditionFailed = 65;
inline constexpr int kInternalError = 70;

struct IoError : Error {
    using Error::Error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content))
        throw IoError("cannot write '" + path + "'");
}

namespace detail {

using json = nlohmann::ordered_json;

// Marking argument: a marking name from the net file, or inline `p=3,q=1`.
inline Marking resolve_marking(const text::NetFile& f, const std::string& arg) {
    if (arg.find('=') != std::string::npos)
        return text::parse_marking_assignments(f.net, arg);
    if (const auto* m = f.find_marking(arg))
        return *m;
    throw IoError("no marking named '" + arg + "' in the net file");
}

inline std::string triple_text(const IONet& net, const nearmiss::Triple& t) {
    return "(" + net.place_name(t.p) + "," + net.place_name(t.r) + "," + net.place_name(t.q) + ")";
}

inline std::string place_set_text(const IONet& net, const std::vector<PlaceId>& ps) {
    std::string out = "{";
    for (std::size_t i = 0; i < ps.size(); ++i)
        out += (i ? "," : "") + net.place_name(ps[i]);
    return out + "}";
}

inline json sequence_json(const IONet& net, const AcceleratedSequence& seq) {
    json steps = json::array();
    for (const auto& s : seq.steps)
        steps.push_back({{"transition", net.transition(s.transition).name}, {"count", s.count}});
    return steps;
}

inline json place_list_json(const IONet& net, const std::vector<PlaceId>& ps) {
    json out = json::array();
    for (auto p : ps)
        out.push_back(net.place_name(p));
    return out;
}

inline json marking_json(const IONet& net, const Marking& m) {
    json out = json::object();
    for (auto p : net.places())
        out[net.place_name(p)] = m[p];
    return out;
}

// Key-value header lines followed by a blank line and prose.
class Report {
public:
    void field(const std::string& key, const std::string& value) { lines_.push_back(key + ": " + value); }
    void prose(const std::string& text) { prose_.push_back(text); }

    void write(std::ostream& out) const {
        for (const auto& l : lines_)
            out << l << "\n";
        if (!prose_.empty()) {
            out << "\n";
            for (const auto& p : prose_)
                out << p << "\n";
        }
    }

private:
    std::vector<std::string> lines_;
    std::vector<std::string> prose_;
};

struct Options {
    std::string net_path;
    std::string from;
    std::string to;
    std::string artifact_path;
    std::string emit_sequence;
    std::string emit_history;
    std::string emit_witness;
    std::string emit_cert;
    std::size_t budget = 0;
    bool json = false;
    bool stable = false;
};

inline int run_check(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const IONet& net = f.net;
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto verdict = nearmiss::decide_reachability(net, m, m2);

    std::string name;
    int code = 0;
    json j = {{"command", "check"}};
    Report r;
    r.field("command", "check");
    r.field("from", text::print_marking_assignments(net, m));
    r.field("to", text::print_marking_assignments(net, m2));

    auto triples_field = [&](const nearmiss::RestrictionSet& rs) {
        std::string line;
        json arr = json::array();
        for (const auto& t : rs.allowed_triples()) {
            line += (line.empty() ? "" : " ") + triple_text(net, t);
            arr.push_back({net.place_name(t.p), net.place_name(t.r), net.place_name(t.q)});
        }
        r.field("allowed-triples", line);
        j["allowed_triples"] = arr;
    };

    if (const auto* v = std::get_if<nearmiss::Reachable>(&verdict)) {
        name = "reachable";
        r.field("verdict", name);
        j["verdict"] = name;
        triples_field(v->restrictions);

        const auto g = nearmiss::restriction_flow_graph(net, m, m2, v->restrictions);
        const nearmiss::RestrictionLayout L{net.place_count()};
        std::string flow_line;
        json flow_arr = json::array();
        for (const auto& [p, q] : v->restrictions.allowed_pairs()) {
            const auto units = v->solution[*g.find_arc(L.initial(p), L.final(q))];
            if (units == 0)
                continue;
            flow_line += (flow_line.empty() ? "" : " ") + net.place_name(p) + "->" + net.place_name(q) + "=" +
                         std::to_string(units);
            flow_arr.push_back({{"from", net.place_name(p)}, {"to", net.place_name(q)}, {"value", units}});
        }
        r.field("flow", flow_line);
        j["flow"] = flow_arr;

        std::string seq = text::print_sequence(net, v->sequence);
        seq.pop_back();
        r.field("sequence", seq.substr(seq.find(':') + 1 + (v->sequence.empty() ? 0 : 1)));
        r.field("firings", std::to_string(v->sequence.firing_count()));
        r.field("history-length", std::to_string(v->history.length()));
        j["sequence"] = sequence_json(net, v->sequence);
        j["firings"] = v->sequence.firing_count();
        j["history_length"] = v->history.length();
        r.prose("The target marking is reachable: " + std::to_string(v->sequence.steps.size()) +
                " accelerated steps, " + std::to_string(v->sequence.firing_count()) + " firings in total.");
        if (!o.emit_sequence.empty())
            write_file(o.emit_sequence, text::print_sequence(net, v->sequence));
        if (!o.emit_history.empty())
            write_file(o.emit_history, text::print_history(net, v->history));
    } else if (const auto* v = std::get_if<nearmiss::Unreachable>(&verdict)) {
        name = "unreachable";
        code = 1;
        r.field("verdict", name);
        j["verdict"] = name;
        triples_field(v->restrictions);
        const auto g = nearmiss::detail::restriction_graph_unchecked(net, m, m2, v->restrictions);
        std::vector<std::string> side;
        for (std::size_t x = 0; x < v->cut.inlet_side.size(); ++x)
            if (v->cut.inlet_side[x])
                side.push_back(g.vertex_name(x));
        std::string side_text;
        for (const auto& s : side)
            side_text += (side_text.empty() ? "" : ",") + s;
        r.field("cut", "{" + side_text + "}");
        r.field("cut-capacity", v->cut.capacity.to_string());
        r.field("tokens", std::to_string(m.size()) + " -> " + std::to_string(m2.size()));
        j["cut"] = {{"inlet_side", side}, {"capacity", v->cut.capacity.to_string()}};
        if (m.size() != m2.size())
            r.prose("The target marking is unreachable: transitions conserve the number of tokens.");
        else
            r.prose("The target marking is unreachable: the cut above has capacity " +
                    v->cut.capacity.to_string() + " below the " + std::to_string(m.size()) +
                    " tokens every history must route.");
    } else {
        const auto& nm = std::get<nearmiss::NearMiss>(verdict);
        name = "near-miss";
        code = 2;
        r.field("verdict", name);
        j["verdict"] = name;
        triples_field(nm.restrictions);
        r.field("witness-x", place_set_text(net, nm.witness.x));
        r.field("witness-y", place_set_text(net, nm.witness.y));
        r.field("delta", std::to_string(nm.witness.delta));
        j["witness"] = {{"x", place_list_json(net, nm.witness.x)},
                        {"y", place_list_json(net, nm.witness.y)},
                        {"delta", nm.witness.delta}};
        r.prose("Declined: M(X) and M'(Y) differ by " + std::to_string(nm.witness.delta) +
                ", within the near-miss bound " + std::to_string(nearmiss::near_miss_bound(net.place_count())) +
                ".");
        if (!o.emit_witness.empty())
            write_file(o.emit_witness, text::print_witness(net, nm.witness));
    }

    if (o.json)
        out << j.dump(2) << "\n";
    else
        r.write(out);
    return code;
}

inline int run_verify_cert(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const auto cert = text::parse_certificate(f.net, read_file(o.artifact_path));
    const auto result = nonforgetting::verify_certificate(f.net, cert);
    json j = {{"command", "verify-cert"}, {"phases", cert.markings.size()}};
    Report r;
    r.field("command", "verify-cert");
    r.field("phases", std::to_string(cert.markings.size()));
    int code = 0;
    if (const auto* seq = std::get_if<AcceleratedSequence>(&result)) {
        r.field("verdict", "accepted");
        std::string s = text::print_sequence(f.net, *seq);
        s.pop_back();
        r.field("sequence", s.substr(s.find(':') + 1 + (seq->empty() ? 0 : 1)));
        j["verdict"] = "accepted";
        j["sequence"] = sequence_json(f.net, *seq);
        r.prose("Certificate accepted; the reconstructed sequence replays to the last marking.");
    } else {
        const auto& rej = std::get<nonforgetting::CertificateRejection>(result);
        code = 1;
        r.field("verdict", "rejected");
        r.field("reason", nonforgetting::to_string(rej.kind));
        r.field("phase", std::to_string(rej.phase));
        j["verdict"] = "rejected";
        j["reason"] = nonforgetting::to_string(rej.kind);
        j["phase"] = rej.phase;
        j["detail"] = rej.detail;
        r.prose("Certificate rejected: " + rej.detail);
    }
    if (o.json)
        out << j.dump(2) << "\n";
    else
        r.write(out);
    return code;
}

inline int run_find_cert(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    if (!is_non_forgetting(f.net))
        throw Error("net is not non-forgetting; run 'closure' first");
    const auto search = nonforgetting::find_certificate(f.net, m, m2, o.budget);
    json j = {{"command", "find-cert"},
              {"status", nonforgetting::to_string(search.status)},
              {"states_explored", search.states_explored}};
    Report r;
    r.field("command", "find-cert");
    r.field("status", nonforgetting::to_string(search.status));
    r.field("states-explored", std::to_string(search.states_explored));
    int code = 1;
    if (search.certificate) {
        code = 0;
        r.field("phases", std::to_string(search.certificate->markings.size()));
        json phases = json::array();
        for (const auto& mk : search.certificate->markings)
            phases.push_back(marking_json(f.net, mk));
        j["certificate"] = phases;
        std::ostringstream cert;
        cert << text::print_certificate(f.net, *search.certificate);
        r.prose("Certificate:\n" + cert.str().substr(0, cert.str().size() - 1));
        if (!o.emit_cert.empty())
            write_file(o.emit_cert, text::print_certificate(f.net, *search.certificate));
    } else if (search.status == nonforgetting::CertificateSearch::Status::BudgetExceeded) {
        code = 3;
        r.prose("Search budget exhausted before a certificate was found.");
    } else {
        r.prose("No certificate exists: the target is unreachable.");
    }
    if (o.json)
        out << j.dump(2) << "\n";
    else
        r.write(out);
    return code;
}

inline int run_gen_sat(const Options& o, std::ostream& out) {
    const auto circuit = text::parse_circuit(read_file(o.net_path));
    const auto red = nonforgetting::sat_to_net(circuit);
    text::NetFile f{red.net, {{"initial", red.initial}, {"target", red.target}}};
    out << text::print_net_file(f);
    return 0;
}

inline int run_oracle(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto res = oracle::bfs_reach(f.net, m, m2, o.budget);
    json j = {{"command", "oracle"},
              {"status", oracle::to_string(res.status)},
              {"states_explored", res.states_explored}};
    Report r;
    r.field("command", "oracle");
    r.field("status", oracle::to_string(res.status));
    r.field("states-explored", std::to_string(res.states_explored));
    int code = 1;
    if (res.path) {
        code = 0;
        std::string s = text::print_sequence(f.net, *res.path);
        s.pop_back();
        r.field("sequence", s.substr(s.find(':') + 1 + (res.path->empty() ? 0 : 1)));
        j["sequence"] = sequence_json(f.net, *res.path);
    } else if (res.status == oracle::SearchResult::Status::BudgetExceeded) {
        code = 3;
    }
    if (o.json)
        out << j.dump(2) << "\n";
    else
        r.write(out);
    return code;
}

inline int run_closure(const Options& o, std::ostream& out) {
    auto f = text::parse_net_file(read_file(o.net_path));
    f.net = non_forgetting_closure(f.net);
    out << text::print_net_file(f);
    return 0;
}

inline void verdict_report(std::ostream& out, bool json_out, const std::string& command, bool ok,
                           const std::string& detail) {
    if (json_out) {
        out << json{{"command", command}, {"verdict", ok ? "accepted" : "rejected"}, {"detail", detail}}.dump(2)
            << "\n";
        return;
    }
    Report r;
    r.field("command", command);
    r.field("verdict", ok ? "accepted" : "rejected");
    if (!detail.empty())
        r.prose(detail);
    r.write(out);
}

inline int run_validate_sequence(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto seq = text::parse_sequence(f.net, read_file(o.artifact_path));
    bool ok = false;
    std::string detail;
    try {
        const Marking end = replay(f.net, m, seq);
        ok = end == m2;
        detail = ok ? "The sequence replays to the target marking."
                    : "The sequence ends in " + text::print_marking_assignments(f.net, end) + ".";
    } catch (const ReplayFailed& e) {
        detail = e.what();
    }
    verdict_report(out, o.json, "validate-sequence", ok, detail);
    return ok ? 0 : 1;
}

inline int run_validate_history(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto h = text::parse_history(f.net, read_file(o.artifact_path));
    const std::size_t n = f.net.place_count();
    bool ok = false;
    std::string detail;
    if (h.initial_marking(n) != m) {
        detail = "The history does not start in the source marking.";
    } else if (h.final_marking(n) != m2) {
        detail = "The history does not end in the target marking.";
    } else {
        const auto checked = check_history_realizable(f.net, h);
        if (const auto* rej = std::get_if<HistoryRejection>(&checked)) {
            detail = "Step " + std::to_string(rej->step) + ": " + to_string(rej->reason) + ": " + rej->detail;
        } else {
            ok = true;
            detail = "The history is realizable.";
        }
    }
    verdict_report(out, o.json, "validate-history", ok, detail);
    return ok ? 0 : 1;
}

inline int run_validate_witness(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto w = text::parse_witness(f.net, m, m2, read_file(o.artifact_path));
    const bool ok = nearmiss::is_valid_witness(w, m, m2);
    verdict_report(out, o.json, "validate-witness", ok,
                   "M(X) - M'(Y) = " + std::to_string(w.delta) + ", bound " +
                       std::to_string(nearmiss::near_miss_bound(f.net.place_count())) + ".");
    return ok ? 0 : 1;
}

inline int run_near_miss(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    const auto w = nearmiss::is_near_miss(m, m2);
    json j = {{"command", "near-miss"}, {"near_miss", w.has_value()}};
    Report r;
    r.field("command", "near-miss");
    r.field("near-miss", w ? "yes" : "no");
    if (w) {
        r.field("witness-x", place_set_text(f.net, w->x));
        r.field("witness-y", place_set_text(f.net, w->y));
        r.field("delta", std::to_string(w->delta));
        j["witness"] = {{"x", place_list_json(f.net, w->x)}, {"y", place_list_json(f.net, w->y)},
                        {"delta", w->delta}};
        if (!o.emit_witness.empty())
            write_file(o.emit_witness, text::print_witness(f.net, *w));
    }
    if (o.json)
        out << j.dump(2) << "\n";
    else
        r.write(out);
    return w ? 2 : 0;
}

inline int run_flow_dot(const Options& o, std::ostream& out) {
    const auto f = text::parse_net_file(read_file(o.net_path));
    const Marking m = resolve_marking(f, o.from);
    const Marking m2 = resolve_marking(f, o.to);
    nearmiss::RestrictionSet r(f.net.place_count());
    if (o.stable) {
        const auto s = nearmiss::stabilize(f.net, m, m2);
        if (const auto* st = std::get_if<nearmiss::Stable>(&s))
            r = st->restrictions;
        else
            r = std::get<nearmiss::ProvedUnreachable>(s).restrictions;
    }
    const auto g = nearmiss::restriction_flow_graph(f.net, m, m2, r);
    const auto fl = flow::max_flow(g);
    flow::write_dot(out, g, &fl);
    return 0;
}

} // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    detail::Options o;
    CLI::App app{"Reachability analysis for IO Petri nets", "ionet"};
    app.require_subcommand(1);

    auto with_markings = [&](CLI::App* sub) {
        sub->add_option("net", o.net_path, "Net file")->required();
        sub->add_option("from", o.from, "Source marking (name or p=n,...)")->required();
        sub->add_option("to", o.to, "Target marking (name or p=n,...)")->required();
    };
    auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", o.json, "Structured JSON report"); };

    std::map<CLI::App*, std::function<int(const detail::Options&, std::ostream&)>> handlers;

    auto* check = app.add_subcommand("check", "Decide reachability between two markings");
    with_markings(check);
    check->add_option("--emit-sequence", o.emit_sequence, "Write the firing sequence to a file");
    check->add_option("--emit-history", o.emit_history, "Write the history to a file");
    check->add_option("--emit-witness", o.emit_witness, "Write the near-miss witness to a file");
    json_flag(check);
    handlers[check] = detail::run_check;

    auto* verify = app.add_subcommand("verify-cert", "Check a phase certificate on a non-forgetting net");
    verify->add_option("net", o.net_path, "Net file")->required();
    verify->add_option("certificate", o.artifact_path, "Certificate file")->required();
    json_flag(verify);
    handlers[verify] = detail::run_verify_cert;

    auto* find = app.add_subcommand("find-cert", "Search for a phase certificate");
    with_markings(find);
    o.budget = 100000;
    find->add_option("--budget", o.budget, "State budget")->capture_default_str();
    find->add_option("--emit-cert", o.emit_cert, "Write the certificate to a file");
    json_flag(find);
    handlers[find] = detail::run_find_cert;

    auto* gen = app.add_subcommand("gen-sat", "Translate a NAND circuit into a net with markings");
    gen->add_option("circuit", o.net_path, "Circuit file")->required();
    handlers[gen] = detail::run_gen_sat;

    auto* orc = app.add_subcommand("oracle", "Breadth-first reachability search");
    with_markings(orc);
    std::size_t oracle_budget = 1'000'000;
    orc->add_option("--budget", oracle_budget, "State budget")->capture_default_str();
    json_flag(orc);
    handlers[orc] = [&](const detail::Options& opts, std::ostream& os) {
        auto copy = opts;
        copy.budget = oracle_budget;
        return detail::run_oracle(copy, os);
    };

    auto* closure = app.add_subcommand("closure", "Print the non-forgetting closure of a net");
    closure->add_option("net", o.net_path, "Net file")->required();
    handlers[closure] = detail::run_closure;

    auto artifact_command = [&](const std::string& name, const std::string& what, const std::string& desc,
                                int (*handler)(const detail::Options&, std::ostream&)) {
        auto* sub = app.add_subcommand(name, desc);
        with_markings(sub);
        sub->add_option(what, o.artifact_path, what + " file")->required();
        json_flag(sub);
        handlers[sub] = handler;
    };
    artifact_command("validate-sequence", "sequence", "Replay a firing sequence", detail::run_validate_sequence);
    artifact_command("validate-history", "history", "Check that a history is realizable",
                     detail::run_validate_history);
    artifact_command("validate-witness", "witness", "Check a near-miss witness", detail::run_validate_witness);

    auto* near = app.add_subcommand("near-miss", "Look for a near-miss pair of place sets");
    with_markings(near);
    near->add_option("--emit-witness", o.emit_witness, "Write the witness to a file");
    json_flag(near);
    handlers[near] = detail::run_near_miss;

    auto* dot = app.add_subcommand("flow-dot", "Print the restriction flow graph in DOT");
    with_markings(dot);
    dot->add_flag("--stable", o.stable, "Use the stabilized restriction set");
    handlers[dot] = detail::run_flow_dot;

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsageError;
    }

    for (const auto& [sub, handler] : handlers) {
        if (!sub->parsed())
            continue;
        try {
            return handler(o, out);
        } catch (const IoError& e) {
            err << "error: " << e.what() << "\n";
            return kUsageError;
        } catch (const text::ParseError& e) {
            err << "parse error: " << e.what() << "\n";
            return kUsageError;
        } catch (const InternalInvariantBroken& e) {
            err << "internal error: " << e.what() << "\n";
            return kInternalError;
        } catch (const Error& e) {
            err << "error: " << e.what() << "\n";
            return kPreconditionFailed;
        }
    }
    return kUsageError;
}

} // namespace ionet::cli
