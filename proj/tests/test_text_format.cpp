#include <catch_amalgamated.hpp>

#include "ionet/text_format.hpp"
#include "support/generators.hpp"

using namespace ionet;
using namespace ionet::text;
using namespace testsupport;

namespace {

template <class E>
E parse_failure(std::string_view text) {
    try {
        (void)parse_net_file(text);
    } catch (const E& e) {
        return e;
    }
    FAIL("expected a parse failure");
    throw;
}

} // namespace

TEST_CASE("parse the enzyme net", "[text]") {
    const auto f = parse_net_file(fixture("nets/enzyme.net"));
    CHECK(f.net == enzyme_net());
    REQUIRE(f.markings.size() == 2);
    REQUIRE(f.find_marking("M"));
    CHECK(*f.find_marking("M") == Marking{200, 0, 400, 0, 0});
    CHECK(*f.find_marking("M'") == Marking{0, 200, 0, 400, 0});
    CHECK_FALSE(f.find_marking("N"));
}

TEST_CASE("parse the other fixtures", "[text]") {
    const auto th = parse_net_file(fixture("nets/threshold.net"));
    CHECK(th.net == threshold_net());
    CHECK(*th.find_marking("three") == Marking{3, 0, 0});

    const auto pr = parse_net_file(fixture("nets/proposal.net"));
    CHECK(pr.net.transition_count() == 6);
    CHECK(is_non_forgetting(pr.net));
    // the closure's added move under its file name
    auto closed = non_forgetting_closure(proposal_net_core()).transitions();
    closed.back().name = "t6";
    CHECK(pr.net.transitions() == closed);
    const auto cert = parse_certificate(pr.net, fixture("nets/proposal.cert"));
    REQUIRE(cert.markings.size() == 3);
    CHECK(cert.markings[1] == Marking{3, 1, 1});
}

TEST_CASE("net file errors carry positions", "[text]") {
    const auto empty = parse_failure<ParseError>("places:\n");
    CHECK(empty.line == 1);

    const auto unknown = parse_failure<UnknownPlace>("places: a b\n\ntransition t: a -> c obs -\n");
    CHECK(unknown.line == 3);
    CHECK(unknown.column == 20);

    const auto dup = parse_failure<DuplicateName>("places: a b a\n");
    CHECK(dup.column == 13);
    CHECK(parse_failure<DuplicateName>("places: a\ntransition t: a -> a obs a\ntransition t: a -> a obs -\n").line == 3);
    CHECK(parse_failure<DuplicateName>("places: a b\nmarking m: a=1 b=2 a=3\n").column == 20);

    CHECK(parse_failure<ParseError>("transition t: a -> a obs -\n").line == 1);
    CHECK(parse_failure<ParseError>("places: a\nmarking m: a=-1\n").line == 2);
    CHECK(parse_failure<ParseError>("places: a\ntransition t: a a obs -\n").column == 17);
    CHECK(parse_failure<ParseError>("# nothing here\n").detail == "missing places line");
    CHECK(parse_failure<ParseError>("places: a\nflow: a\n").detail.find("unknown directive") != std::string::npos);
}

TEST_CASE("comments and blank lines are ignored", "[text]") {
    const auto f = parse_net_file("# header\n\nplaces: a b   # two places\n\nmarking m: b=4\n");
    CHECK(f.net.place_count() == 2);
    CHECK(*f.find_marking("m") == Marking{0, 4});
}

TEST_CASE("net files round-trip", "[text][property]") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        NetFile f{random_net(rng, 6, 8), {}};
        const auto markings = uniform(rng, 0, 3);
        for (std::int64_t i = 0; i < markings; ++i)
            f.markings.emplace_back("m" + std::to_string(i), random_marking_upto(rng, f.net.place_count(), 50));
        const auto text = print_net_file(f);
        const auto back = parse_net_file(text);
        CHECK(back == f);
        CHECK(print_net_file(back) == text);
    }
}

TEST_CASE("inline marking assignments", "[text]") {
    const auto net = enzyme_net();
    CHECK(parse_marking_assignments(net, "PE=3,R=1") == Marking{3, 0, 1, 0, 0});
    CHECK(parse_marking_assignments(net, "PE=3 R=1") == Marking{3, 0, 1, 0, 0});
    CHECK(parse_marking_assignments(net, "") == Marking(5));
    CHECK(print_marking_assignments(net, Marking{1, 2, 3, 4, 5}) == "PE=1,E=2,R=3,P1=4,P2=5");
    CHECK_THROWS_AS(parse_marking_assignments(net, "Q=1"), UnknownPlace);
}

TEST_CASE("sequences round-trip and keep their steps", "[text]") {
    const auto net = enzyme_net();
    const std::string text = "sequence: produce^199 use^399 use^1 produce^1\n";
    const auto seq = parse_sequence(net, text);
    CHECK(seq.steps.size() == 4);
    CHECK(seq.firing_count() == 600);
    CHECK(print_sequence(net, seq) == text);
    CHECK(print_sequence(net, parse_sequence(net, "sequence:\n")) == "sequence:\n");
    CHECK_THROWS_AS(parse_sequence(net, "sequence: fly^2\n"), ParseError);
    CHECK_THROWS_AS(parse_sequence(net, "sequence: use^0\n"), ParseError);
    CHECK_THROWS_AS(parse_sequence(net, "sequence: use\n"), ParseError);
}

TEST_CASE("histories round-trip", "[text]") {
    const auto net = enzyme_net();
    const std::string text = "history 3\ntrajectory 2: PE PE E\ntrajectory 5: R P1 P1\n";
    const auto h = parse_history(net, text);
    CHECK(h.length() == 3);
    CHECK(h.trajectories().size() == 2);
    CHECK(h.marking_at(0, 5) == Marking{2, 0, 5, 0, 0});
    CHECK(print_history(net, h) == text);
    CHECK_THROWS_AS(parse_history(net, "history 3\ntrajectory 1: PE E\n"), ParseError);
    CHECK_THROWS_AS(parse_history(net, "history 0\n"), ParseError);
    CHECK_THROWS_AS(parse_history(net, "history 2\ntrajectory 0: PE E\n"), ParseError);
}

TEST_CASE("witnesses round-trip", "[text]") {
    const IONet net({"p1", "p2", "p3", "p4", "p5"}, {});
    const Marking m{130, 470, 0, 0, 0}, m2{0, 0, 200, 200, 200};
    const auto w = parse_witness(net, m, m2, "nearmiss X={p1} Y={p3}\n");
    CHECK(w.delta == -70);
    CHECK(print_witness(net, w) == "nearmiss X={p1} Y={p3}\n");
    const auto empty = parse_witness(net, m, m2, "nearmiss X={} Y={p3,p4}");
    CHECK(empty.x.empty());
    CHECK(empty.y.size() == 2);
    CHECK_THROWS_AS(parse_witness(net, m, m2, "nearmiss X={p1,p1} Y={}"), DuplicateName);
    CHECK_THROWS_AS(parse_witness(net, m, m2, "nearmiss Y={} X={}"), ParseError);
}

TEST_CASE("certificates round-trip", "[text]") {
    const auto net = non_forgetting_closure(proposal_net_core());
    const nonforgetting::PhaseCertificate cert{{Marking{4, 1, 0}, Marking{3, 1, 1}, Marking{1, 0, 4}}};
    const auto text = print_certificate(net, cert);
    CHECK(text == fixture("nets/proposal.cert"));
    CHECK(parse_certificate(net, text) == cert);
}

TEST_CASE("circuits round-trip", "[text][sat]") {
    const auto nand = parse_circuit(fixture("circuits/nand.sat"));
    CHECK(nand.inputs == 2);
    CHECK(nand.gates.size() == 1);

    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_circuit(rng, static_cast<std::size_t>(uniform(rng, 1, 4)),
                                      static_cast<std::size_t>(uniform(rng, 1, 6)));
        const auto text = print_circuit(c);
        CHECK(parse_circuit(text) == c);
    }

    CHECK_THROWS_AS(parse_circuit("inputs: 1\ngate g = NAND(x2, x1)\noutput: g\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("inputs: 1\ngate g = NAND(h, x1)\noutput: g\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("inputs: 1\ngate g = NAND(x1, x1)\noutput: h\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("inputs: 1\ngate x1 = NAND(x1, x1)\noutput: x1\n"), DuplicateName);
    CHECK_THROWS_AS(parse_circuit("inputs: 1\noutput: g\n"), ParseError);
}
