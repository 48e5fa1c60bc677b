// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ionet/cli.hpp"
#include "ionet/nearmiss.hpp"
#include "ionet/nonforgetting.hpp"
#include "ionet/oracle.hpp"
#include "support/generators.hpp"

using namespace ionet;
using namespace testsupport;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string note;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            note = what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    if (out)
        *out = o.str();
    return code;
}

bool is_reachable(const oracle::SearchResult& r) { return r.status == oracle::SearchResult::Status::Reachable; }

Outcome ac1_enzyme() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto net = enzyme_net();
    const Marking m{200, 0, 400, 0, 0}, m2{0, 200, 0, 400, 0};
    std::string report;
    o.require(run_cli({"check", fixture_path("nets/enzyme.net"), "M", "M'"}, &report) == 0, "check exit code");
    o.require(report.find("allowed-triples: (PE,PE,E) (PE,E,E) (R,R,P1) (R,P1,P1)\n") != std::string::npos,
              "reported triples");
    o.require(report.find("flow: PE->E=200 R->P1=400\n") != std::string::npos, "reported flow");

    const auto v = nearmiss::decide_reachability(net, m, m2);
    const auto* r = std::get_if<nearmiss::Reachable>(&v);
    o.require(r != nullptr, "verdict is not Reachable");
    if (!r)
        return o;
    const PlaceId PE{0}, E{1}, R{2}, P1{3};
    std::vector<nearmiss::Triple> expected{{PE, PE, E}, {PE, E, E}, {R, R, P1}, {R, P1, P1}};
    std::sort(expected.begin(), expected.end());
    o.require(r->restrictions.allowed_triples() == expected, "allowed triples");

    const auto g = nearmiss::restriction_flow_graph(net, m, m2, r->restrictions);
    const nearmiss::RestrictionLayout L{5};
    o.require(r->solution[*g.find_arc(L.initial(PE), L.final(E))] == 200, "flow PE->E");
    o.require(r->solution[*g.find_arc(L.initial(R), L.final(P1))] == 400, "flow R->P1");
    o.require(r->solution.value == 600, "flow value");
    o.require(replay(net, m, r->sequence) == m2, "sequence does not replay");
    const double elapsed = seconds_since(t0);
    o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    return o;
}

Outcome ac2_threshold() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto net = threshold_net();
    o.require(!is_reachable(oracle::bfs_reach(net, Marking{2, 0, 0}, Marking{0, 0, 2})), "n = 2 reachable");
    for (TokenCount n = 3; n <= 6; ++n) {
        const auto r = oracle::bfs_reach(net, Marking{n, 0, 0}, Marking{0, 0, n});
        o.require(is_reachable(r) && replay(net, Marking{n, 0, 0}, *r.path) == Marking{0, 0, n},
                  "n = " + std::to_string(n) + " unreachable");
    }
    const double elapsed = seconds_since(t0);
    o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    return o;
}

Outcome ac3_certificate() {
    Outcome o;
    const auto file = text::parse_net_file(fixture("nets/proposal.net"));
    const auto& net = file.net;
    o.require(is_non_forgetting(net), "fixture net is not non-forgetting");
    const Marking from{4, 1, 0}, to{1, 0, 4};
    const nonforgetting::PhaseCertificate cert{{from, Marking{3, 1, 1}, to}};
    o.require(text::parse_certificate(net, fixture("nets/proposal.cert")) == cert, "certificate fixture");
    const auto checked = nonforgetting::verify_certificate(net, cert);
    const auto* seq = std::get_if<AcceleratedSequence>(&checked);
    o.require(seq != nullptr, "certificate rejected");
    if (seq)
        o.require(replay(net, from, *seq) == to, "reconstructed sequence does not replay");

    const auto s = nonforgetting::find_certificate(net, from, to, 10'000);
    o.require(s.status == nonforgetting::CertificateSearch::Status::Found, "search status " +
                                                                               std::string(to_string(s.status)));
    if (s.certificate) {
        const auto again = nonforgetting::verify_certificate(net, *s.certificate);
        o.require(std::holds_alternative<AcceleratedSequence>(again), "found certificate rejected");
    }
    return o;
}

Outcome ac4_differential() {
    Outcome o;
    Rng rng(404);
    int reachable = 0, unreachable = 0, near = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto net = random_net(rng, 5, 8);
        const auto tokens = uniform(rng, 0, 6);
        const auto m = random_marking(rng, net.place_count(), tokens);
        const auto m2 = random_marking(rng, net.place_count(), tokens);
        const std::string tag = " (trial " + std::to_string(trial) + ")";

        const auto closed = non_forgetting_closure(net);
        const auto bfs_closed = oracle::bfs_reach(closed, m, m2);
        const auto s = nonforgetting::find_certificate(closed, m, m2, 100'000);
        o.require(s.status != nonforgetting::CertificateSearch::Status::BudgetExceeded, "budget exceeded" + tag);
        o.require((s.status == nonforgetting::CertificateSearch::Status::Found) == is_reachable(bfs_closed),
                  "certificate search disagrees with BFS" + tag);

        const auto bfs = oracle::bfs_reach(net, m, m2);
        try {
            const auto v = nearmiss::decide_reachability(net, m, m2);
            if (const auto* r = std::get_if<nearmiss::Reachable>(&v)) {
                ++reachable;
                o.require(is_reachable(bfs), "Reachable but the oracle disagrees" + tag);
                o.require(replay(net, m, r->sequence) == m2, "sequence does not replay" + tag);
            } else if (std::holds_alternative<nearmiss::Unreachable>(v)) {
                ++unreachable;
                o.require(!is_reachable(bfs), "Unreachable but the oracle disagrees" + tag);
            } else {
                ++near;
                o.require(oracle::exhaustive_near_miss(m, m2), "NearMiss without a near-miss pair" + tag);
            }
        } catch (const Error& e) {
            o.require(false, std::string(e.what()) + tag);
        }
    }
    if (o.pass)
        o.note = std::to_string(reachable) + " reachable, " + std::to_string(unreachable) + " unreachable, " +
                 std::to_string(near) + " near-miss";
    return o;
}

Outcome ac5_flow() {
    Outcome o;
    Rng rng(505);
    int bounded = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = random_flow_graph(rng, 12, 20);
        const std::string tag = " (trial " + std::to_string(trial) + ")";
        try {
            const auto r = flow::solve(g);
            ++bounded;
            o.require(!flow::flow_problem(g, r.flow), "invalid flow" + tag);
            o.require(r.flow.value == oracle::naive_max_flow(g), "naive value differs" + tag);
            o.require(oracle::exhaustive_min_cut(g) == flow::Capacity::finite(r.flow.value),
                      "min cut differs" + tag);
            o.require(r.cut.capacity == flow::Capacity::finite(r.flow.value), "reported cut differs" + tag);
        } catch (const flow::UnboundedFlow&) {
            o.require(oracle::exhaustive_min_cut(g).is_infinite(), "unbounded flow with a finite cut" + tag);
        }
    }
    if (o.pass)
        o.note = std::to_string(bounded) + " bounded graphs";
    return o;
}

Outcome ac6_sat() {
    Outcome o;
    std::size_t circuits = 0, satisfiable = 0;
    for (std::size_t inputs = 1; inputs <= 2; ++inputs)
        for (std::size_t gates = 1; gates <= 3; ++gates)
            for_each_circuit(inputs, gates, [&](const nonforgetting::SatCircuit& c) {
                ++circuits;
                const auto red = nonforgetting::sat_to_net(c);
                o.require(is_non_forgetting(red.net), "reduction net forgets");
                const bool sat = oracle::truth_table_sat(c).has_value();
                satisfiable += sat ? 1 : 0;
                const auto bfs = oracle::bfs_reach(red.net, red.initial, red.target);
                o.require(bfs.status != oracle::SearchResult::Status::BudgetExceeded, "BFS budget exceeded");
                o.require(is_reachable(bfs) == sat, "reachability differs from satisfiability");
            });
    if (o.pass)
        o.note = std::to_string(circuits) + " circuits, " + std::to_string(satisfiable) + " satisfiable";
    return o;
}

Outcome ac7_witnesses() {
    Outcome o;
    Rng rng(707);
    int cases = 0, witnesses = 0, sequences = 0;
    auto audit = [&](const IONet& net, const Marking& m, const Marking& m2) {
        ++cases;
        if (const auto w = nearmiss::is_near_miss(m, m2)) {
            ++witnesses;
            const auto gap = w->delta < 0 ? -w->delta : w->delta;
            o.require(nearmiss::is_valid_witness(*w, m, m2) && gap > 0 &&
                          gap <= nearmiss::near_miss_bound(net.place_count()),
                      "invalid detected witness");
        }
        const auto v = nearmiss::decide_reachability(net, m, m2);
        if (const auto* nm = std::get_if<nearmiss::NearMiss>(&v)) {
            ++witnesses;
            o.require(nearmiss::is_valid_witness(nm->witness, m, m2), "invalid verdict witness");
        } else if (const auto* r = std::get_if<nearmiss::Reachable>(&v)) {
            ++sequences;
            const auto trace = replay_trace(net, m, r->sequence);
            o.require(trace.back() == m2, "sequence does not replay");
            for (const auto& step : trace)
                o.require(step.size() == m.size(), "token count changed during replay");
            if (r->sequence.firing_count() <= 2000) {
                Marking cur = m;
                for (const auto& s : r->sequence.steps)
                    for (TokenCount k = 0; k < s.count; ++k) {
                        cur = fire(net, cur, s.transition);
                        o.require(cur.size() == m.size(), "token count changed during a firing");
                    }
            }
        }
    };
    try {
        while (cases < 10'000) {
            const auto net = random_net(rng, 5, 8);
            const auto n = net.place_count();
            // Small counts exercise the near-miss side; large ones the
            // constructed sequences.
            const TokenCount tokens = coin(rng) ? uniform(rng, 0, 6) : uniform(rng, 0, 4000);
            const auto m = random_marking(rng, n, tokens);
            audit(net, m, random_marking(rng, n, tokens));
            // A target reached by random firings is always reachable.
            Marking walk = m;
            for (int k = uniform(rng, 0, 40); k > 0; --k) {
                std::vector<TransitionId> enabled;
                for (std::uint32_t t = 0; t < net.transition_count(); ++t)
                    if (is_enabled(net, walk, TransitionId{t}))
                        enabled.push_back(TransitionId{t});
                if (enabled.empty())
                    break;
                const auto id = enabled[static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(enabled.size()) - 1))];
                const auto room = std::min<TokenCount>(max_consecutive_firings(net, walk, id), walk.size());
                AcceleratedSequence burst{{{id, uniform(rng, 1, std::max<TokenCount>(room, 1))}}};
                walk = replay(net, walk, burst);
            }
            audit(net, m, walk);
        }
    } catch (const Error& e) {
        o.require(false, e.what());
    }
    if (o.pass)
        o.note = std::to_string(cases) + " cases, " + std::to_string(witnesses) + " witnesses, " +
                 std::to_string(sequences) + " sequences";
    return o;
}

Outcome ac8_scaling() {
    Outcome o;
    const std::string net = fixture_path("nets/enzyme.net");
    const std::vector<std::string> base{"check", net, "M", "M'"};
    const std::vector<std::string> scaled{"check", net, "PE=2000000,R=4000000", "E=2000000,P1=4000000"};
    std::string scaled_report;
    o.require(run_cli(scaled, &scaled_report) == 0, "scaled instance not reachable");
    o.require(scaled_report.find("firings: 6000000\n") != std::string::npos, "scaled firing count");

    auto time_one = [&](const std::vector<std::string>& args) {
        const auto t0 = Clock::now();
        run_cli(args);
        return seconds_since(t0);
    };
    for (int i = 0; i < 20; ++i) {
        time_one(base);
        time_one(scaled);
    }
    std::vector<double> tb, ts;
    for (int i = 0; i < 301; ++i) {
        tb.push_back(time_one(base));
        ts.push_back(time_one(scaled));
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    const double mb = median(tb), ms = median(ts);
    std::ostringstream note;
    note.precision(3);
    note << "base " << mb * 1e6 << " us, scaled " << ms * 1e6 << " us";
    o.require(ms <= 2.0 * mb, "too slow: " + note.str());
    if (o.pass)
        o.note = note.str();
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 enzyme golden check", ac1_enzyme},
        {"AC2 threshold oracle", ac2_threshold},
        {"AC3 non-forgetting certificate", ac3_certificate},
        {"AC4 differential suite", ac4_differential},
        {"AC5 flow engine", ac5_flow},
        {"AC6 SAT reduction", ac6_sat},
        {"AC7 witness validity", ac7_witnesses},
        {"AC8 scaling smoke test", ac8_scaling},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome r;
        const auto t0 = Clock::now();
        try {
            r = check();
        } catch (const std::exception& e) {
            r.pass = false;
            r.note = std::string("exception: ") + e.what();
        }
        std::ostringstream took;
        took.precision(3);
        took << seconds_since(t0) << " s";
        std::cout << (r.pass ? "PASS " : "FAIL ") << name << " [" << took.str() << "]"
                  << (r.note.empty() ? "" : ": " + r.note) << "\n";
        failures += r.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
