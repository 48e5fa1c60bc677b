#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ionet/cli.hpp"
#include "support/generators.hpp"

using namespace ionet;
using testsupport::fixture_path;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Scratch directory removed at the end of each test.
struct Scratch {
    std::filesystem::path dir;
    Scratch() {
        static int counter = 0;
        dir = std::filesystem::temp_directory_path() / ("ionet_cli_test_" + std::to_string(std::random_device{}()) + "_" +
                                                        std::to_string(counter++));
        std::filesystem::create_directories(dir);
    }
    ~Scratch() { std::filesystem::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    std::string write(const std::string& name, const std::string& content) const {
        std::ofstream(path(name)) << content;
        return path(name);
    }
};


bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

} // namespace

TEST_CASE("check on the enzyme net", "[cli]") {
    const auto r = run({"check", fixture_path("nets/enzyme.net"), "M", "M'"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "verdict: reachable\n"));
    CHECK(contains(r.out, "allowed-triples: (PE,PE,E) (PE,E,E) (R,R,P1) (R,P1,P1)\n"));
    CHECK(contains(r.out, "flow: PE->E=200 R->P1=400\n"));
    CHECK(contains(r.out, "firings: 600\n"));
    CHECK(contains(r.out, "\n\nThe target marking is reachable"));
    CHECK(r.err.empty());
}

TEST_CASE("check with identical markings", "[cli]") {
    const auto r = run({"check", fixture_path("nets/enzyme.net"), "M", "M"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "sequence: \n"));
    CHECK(contains(r.out, "firings: 0\n"));
}

TEST_CASE("check reports unreachable and near-miss verdicts", "[cli]") {
    const auto unreachable = run({"check", fixture_path("nets/enzyme.net"), "M", "E=400,P1=200"});
    CHECK(unreachable.code == 1);
    CHECK(contains(unreachable.out, "verdict: unreachable\n"));
    CHECK(contains(unreachable.out, "cut: {"));

    const auto lost = run({"check", fixture_path("nets/enzyme.net"), "M", "E=1"});
    CHECK(lost.code == 1);
    CHECK(contains(lost.out, "tokens: 600 -> 1\n"));

    const auto near = run({"check", fixture_path("nets/threshold.net"), "two", "all_in_p3_2"});
    CHECK(near.code == 2);
    CHECK(contains(near.out, "verdict: near-miss\n"));
    CHECK(contains(near.out, "delta: "));
}

TEST_CASE("emitted artifacts validate", "[cli]") {
    Scratch s;
    const auto net = fixture_path("nets/enzyme.net");
    const auto r = run({"check", net, "M", "M'", "--emit-sequence", s.path("seq.txt"), "--emit-history",
                        s.path("hist.txt")});
    REQUIRE(r.code == 0);
    CHECK(run({"validate-sequence", net, "M", "M'", s.path("seq.txt")}).code == 0);
    CHECK(run({"validate-history", net, "M", "M'", s.path("hist.txt")}).code == 0);
    CHECK(run({"validate-sequence", net, "M", "M", s.path("seq.txt")}).code == 1);
    CHECK(run({"validate-history", net, "M'", "M'", s.path("hist.txt")}).code == 1);

    const auto th = fixture_path("nets/threshold.net");
    REQUIRE(run({"check", th, "two", "all_in_p3_2", "--emit-witness", s.path("w.txt")}).code == 2);
    CHECK(run({"validate-witness", th, "two", "all_in_p3_2", s.path("w.txt")}).code == 0);
    const auto bad = s.write("bad.txt", "nearmiss X={} Y={}\n");
    CHECK(run({"validate-witness", th, "two", "all_in_p3_2", bad}).code == 1);
    const auto stuck = s.write("stuck.txt", "sequence: t3^1\n");
    const auto v = run({"validate-sequence", th, "two", "all_in_p3_2", stuck});
    CHECK(v.code == 1);
    CHECK(contains(v.out, "verdict: rejected\n"));
}

TEST_CASE("output is deterministic", "[cli]") {
    const std::vector<std::string> args{"check", fixture_path("nets/enzyme.net"), "M", "M'"};
    const auto a = run(args);
    const auto b = run(args);
    CHECK(a.out == b.out);
    const auto ja = run({"check", fixture_path("nets/enzyme.net"), "M", "M'", "--json"});
    const auto jb = run({"check", fixture_path("nets/enzyme.net"), "M", "M'", "--json"});
    CHECK(ja.out == jb.out);
}

TEST_CASE("JSON reports", "[cli]") {
    const auto r = run({"check", fixture_path("nets/enzyme.net"), "M", "M'", "--json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["command"] == "check");
    CHECK(j["verdict"] == "reachable");
    CHECK(j["allowed_triples"].size() == 4);
    CHECK(j["flow"].size() == 2);
    CHECK(j["firings"] == 600);
    std::int64_t total = 0;
    for (const auto& step : j["sequence"])
        total += step["count"].get<std::int64_t>();
    CHECK(total == 600);

    const auto u = nlohmann::json::parse(
        run({"check", fixture_path("nets/enzyme.net"), "M", "E=600", "--json"}).out);
    CHECK(u["verdict"] == "unreachable");
    CHECK(u["cut"].contains("capacity"));
}

TEST_CASE("certificates on the command line", "[cli]") {
    Scratch s;
    const auto net = fixture_path("nets/proposal.net");
    const auto ok = run({"verify-cert", net, fixture_path("nets/proposal.cert")});
    CHECK(ok.code == 0);
    CHECK(contains(ok.out, "verdict: accepted\n"));

    const auto bad = s.write("bad.cert", "marking A: I=4 P=1 R=0\nmarking B: I=1 P=0 R=4\n");
    const auto rej = run({"verify-cert", net, bad, "--json"});
    CHECK(rej.code == 1);
    CHECK(nlohmann::json::parse(rej.out)["reason"] == "phase flow deficit");

    const auto found = run({"find-cert", net, "start", "end", "--emit-cert", s.path("found.cert")});
    CHECK(found.code == 0);
    CHECK(run({"verify-cert", net, s.path("found.cert")}).code == 0);
    CHECK(run({"find-cert", net, "start", "I=5"}).code == 1);
    CHECK(run({"find-cert", net, "start", "end", "--budget", "0"}).code == 3);
    // once c empties into d, a -> b would need to observe d
    const auto forgetful = s.write("forgetful.net", "places: a b c d\ntransition t: a -> b obs c\ntransition u: c -> d obs -\n");
    CHECK(run({"find-cert", forgetful, "a=1,c=1", "b=1,d=1"}).code == 65);
}

TEST_CASE("circuits and closures", "[cli][sat]") {
    Scratch s;
    const auto gen = run({"gen-sat", fixture_path("circuits/nand.sat")});
    REQUIRE(gen.code == 0);
    const auto net = s.write("nand.net", gen.out);
    CHECK(run({"oracle", net, "initial", "target"}).code == 0);
    CHECK(run({"find-cert", net, "initial", "target"}).code == 0);

    const auto never = run({"gen-sat", fixture_path("circuits/contradiction.sat")});
    REQUIRE(never.code == 0);
    const auto never_net = s.write("never.net", never.out);
    CHECK(run({"oracle", never_net, "initial", "target"}).code == 1);
    CHECK(run({"find-cert", never_net, "initial", "target"}).code == 1);

    const auto closed = run({"closure", fixture_path("nets/enzyme.net")});
    REQUIRE(closed.code == 0);
    const auto closed_net = s.write("closed.net", closed.out);
    // 600 tokens spread over five places: the budget stops the search early
    CHECK(run({"find-cert", closed_net, "M", "M'", "--budget", "1000"}).code == 3);
}

TEST_CASE("oracle exit codes", "[cli]") {
    const auto th = fixture_path("nets/threshold.net");
    CHECK(run({"oracle", th, "three", "all_in_p3_3"}).code == 0);
    CHECK(run({"oracle", th, "two", "all_in_p3_2"}).code == 1);
    const auto b = run({"oracle", th, "p1=6", "p3=6", "--budget", "1", "--json"});
    CHECK(b.code == 3);
    CHECK(nlohmann::json::parse(b.out)["status"] == "budget-exceeded");
}

TEST_CASE("near-miss and flow-dot", "[cli]") {
    const auto th = fixture_path("nets/threshold.net");
    CHECK(run({"near-miss", th, "two", "all_in_p3_2"}).code == 2);
    CHECK(run({"near-miss", fixture_path("nets/enzyme.net"), "M", "M'"}).code == 0);

    const auto dot = run({"flow-dot", fixture_path("nets/enzyme.net"), "M", "M'", "--stable"});
    CHECK(dot.code == 0);
    CHECK(dot.out.rfind("digraph flow {", 0) == 0);
    CHECK(contains(dot.out, "P2^i"));
}

TEST_CASE("usage and input errors", "[cli]") {
    Scratch s;
    CHECK(run({}).code == 64);
    CHECK(run({"frobnicate"}).code == 64);
    CHECK(run({"check", fixture_path("nets/enzyme.net"), "M"}).code == 64);
    const auto missing = run({"check", s.path("nope.net"), "M", "M'"});
    CHECK(missing.code == 64);
    CHECK_FALSE(missing.err.empty());

    const auto broken = s.write("broken.net", "places: a\ntransition t: a -> b obs -\n");
    const auto parse = run({"check", broken, "a=1", "a=1"});
    CHECK(parse.code == 64);
    CHECK(contains(parse.err, "2:"));

    CHECK(run({"check", fixture_path("nets/enzyme.net"), "M", "Nope"}).code == 64);
    CHECK(run({"check", fixture_path("nets/enzyme.net"), "M", "Q=1"}).code == 64);
    CHECK(run({"--help"}).code == 0);
}
