#include <doctest.h>

#include <random>
#include <set>

#include "rbcheck/error.hpp"
#include "rbcheck/template_io.hpp"
#include "rbcheck/unwinding.hpp"
#include "support/fixtures.hpp"
#include "support/random_templates.hpp"

using namespace rbcheck;
using namespace rbcheck::testing;

namespace {

std::vector<StateId> states_of(const ProcessTemplate& t, std::initializer_list<const char*> names) {
    std::vector<StateId> out;
    for (auto n : names) out.push_back(st(t, n));
    return out;
}

std::vector<EdgeId> edges_of(const ProcessTemplate& t, std::initializer_list<const char*> ids) {
    std::vector<EdgeId> out;
    for (auto id : ids) out.push_back(ed(t, id));
    return out;
}

// Every kept edge has all partner letters kept, and nothing else qualifies.
void check_saturated(const ProcessTemplate& t, const Component& c) {
    std::set<EdgeId> r(c.edges.begin(), c.edges.end());
    for (StateId s : c.init) CHECK(c.contains(s));
    for (EdgeId e : c.edges) {
        const auto& edge = t.edge(e);
        CHECK(c.contains(edge.src));
        CHECK(c.contains(edge.dst));
        for (std::uint32_t l = 1; l <= t.k(); ++l) {
            bool partner = false;
            for (EdgeId f : t.letter_edges(Letter{edge.label.letter().action, l})) partner |= r.count(f) > 0;
            CHECK(partner);
        }
    }
    for (EdgeId e = 0; e < t.num_edges(); ++e) {
        const auto& edge = t.edge(e);
        if (edge.is_broadcast() || r.count(e) || !c.contains(edge.src)) continue;
        bool all = true;
        for (std::uint32_t l = 1; l <= t.k(); ++l) {
            bool sourced = false;
            for (EdgeId f : t.letter_edges(Letter{edge.label.letter().action, l})) sourced |= c.contains(t.edge(f).src);
            all &= sourced;
        }
        CHECK_FALSE(all);
    }
    // every state other than the init states is entered by a kept edge
    for (StateId s : c.states) {
        bool reached = std::binary_search(c.init.begin(), c.init.end(), s);
        for (EdgeId e : c.edges) reached |= t.edge(e).dst == s;
        CHECK(reached);
    }
}

}  // namespace

TEST_CASE("saturate examples") {
    auto t2 = fixture("bounded_bursts.tpl");
    auto c = saturate(t2, states_of(t2, {"p"}));
    CHECK(c.states == states_of(t2, {"p", "q"}));
    CHECK(c.edges == edges_of(t2, {"p:a.1:p", "p:a.2:q"}));

    auto t1 = fixture("rendezvous_only.tpl");
    auto all = saturate(t1, states_of(t1, {"p", "r"}));
    CHECK(all.states == states_of(t1, {"p", "q", "r"}));
    CHECK(all.edges.size() == 4);

    auto stuck = saturate(t1, states_of(t1, {"q"}));
    CHECK(stuck.states == states_of(t1, {"q"}));
    CHECK(stuck.edges.empty());
}

TEST_CASE("unwinding of the non-regular example") {
    auto t = fixture("bounded_bursts.tpl");
    auto u = build_unwinding(t);
    CHECK(u.n() == 0);
    CHECK(u.m() == 0);
    CHECK(u.r() == 1);
    REQUIRE(u.components().size() == 1);
    CHECK(u.component(0).states == states_of(t, {"p", "q"}));
    REQUIRE(u.edges().size() == 4);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 4; ++i) ids.push_back(u.edge_id(i));
    CHECK(ids == std::vector<std::string>{"p:a.1:p@comp0", "p:a.2:q@comp0", "p:b:p@comp0", "q:b:p@comp0"});
    CHECK(u.find_edge(std::string_view("q:b:p@comp0")) == 3u);
    CHECK_FALSE(u.find_edge(std::string_view("q:b:q@comp0")));
    CHECK_FALSE(u.find_edge(std::string_view("q:b:p@comp1")));
    const auto& lt = u.as_template();
    CHECK(lt.edge(3).src == *u.lifted_state(st(t, "q"), 0));
    CHECK(lt.edge(3).dst == *u.lifted_state(st(t, "p"), 0));
}

TEST_CASE("unwinding of synthetic fixtures") {
    SUBCASE("identity broadcast") {
        auto t = fixture("green.tpl");
        auto u = build_unwinding(t);
        CHECK(u.n() == 0);
        CHECK(u.r() == 1);
    }
    SUBCASE("two phases") {
        auto t = fixture("two_phase.tpl");
        auto u = build_unwinding(t);
        CHECK(u.n() == 0);
        CHECK(u.r() == 2);
        CHECK(u.component(1).init == states_of(t, {"p1"}));
        CHECK(u.component(1).edges.empty());
    }
    SUBCASE("dead end has a prefix component") {
        auto t = fixture("dead_end.tpl");
        auto u = build_unwinding(t);
        CHECK(u.n() == 1);
        CHECK(u.r() == 1);
        CHECK(u.component(1).init == states_of(t, {"p", "d"}));
    }
    SUBCASE("rendezvous-only templates close on an empty component") {
        auto t = fixture("rendezvous_only.tpl");
        auto u = build_unwinding(t);
        CHECK(u.n() == 1);
        CHECK(u.r() == 1);
        CHECK(u.component(1).states.empty());
    }
    SUBCASE("malformed template") {
        auto t = parse_template("system rb\nk 2\nstate p init\nedge p a.1 p\nedge p a.2 p\n");
        CHECK_THROWS_AS(build_unwinding(t), Error);
    }
}

TEST_CASE("comp") {
    auto t = fixture("bounded_bursts.tpl");
    auto u = build_unwinding(t);
    CHECK(u.comp(17) == 0);

    // n = 2, r = 3 via a chain that closes back onto its third component
    auto chain = parse_template(
        "system rb\nk 2\nstate s0 init\nstate s1\nstate s2\nstate s3\nstate s4\n"
        "edge s0 b s1\nedge s1 b s2\nedge s2 b s3\nedge s3 b s4\nedge s4 b s2\n");
    auto uc = build_unwinding(chain);
    REQUIRE(uc.n() == 2);
    REQUIRE(uc.r() == 3);
    CHECK(uc.comp(1) == 1);
    CHECK(uc.comp(9) == 3);
    CHECK(uc.next(4) == 2);
}

TEST_CASE("lift_run and project_circ") {
    auto t = fixture("bounded_bursts.tpl");
    auto u = build_unwinding(t);
    Path run{conf(t, {"p", "p"}), {}};
    run.steps.push_back(make_rendezvous(t, run.end(), {{1, ed(t, "p:a.1:p")}, {2, ed(t, "p:a.2:q")}}));
    run.steps.push_back(make_broadcast(t, run.end(), {{1, ed(t, "p:b:p")}, {2, ed(t, "q:b:p")}}));
    auto lifted = lift_run(u, run);
    CHECK(is_valid_path(u.as_template(), lifted));
    for (const auto& step : lifted.steps)
        for (const auto& m : step.moves) CHECK(u.edge(m.edge).comp == 0);
    CHECK(project_circ(u, lifted).steps == run.steps);

    Path empty{conf(t, {"p"}), {}};
    CHECK(lift_run(u, empty).steps.empty());

    // a.2 is only sourced in q, which nothing reaches
    auto pt = parse_template("system rb\nk 2\nstate p init\nstate q\nedge p a.1 q\nedge q a.2 q\nedge p b p\nedge q b q\n");
    auto pu = build_unwinding(pt);
    CHECK(pu.component(0).edges.empty());
    Path bad{conf(pt, {"p", "q"}), {}};
    bad.steps.push_back(make_rendezvous(pt, bad.end(), {{1, ed(pt, "p:a.1:q")}, {2, ed(pt, "q:a.2:q")}}));
    CHECK_THROWS_AS(lift_run(pu, bad), Error);
}

TEST_CASE("A^fin") {
    auto t = fixture("bounded_bursts.tpl");
    auto a = build_afin(build_unwinding(t));
    CHECK(a.num_states == 2);
    CHECK(a.accepts(std::vector<EdgeId>{}));
    CHECK_FALSE(a.accepts(edges_of(t, {"q:b:p"})));
    CHECK(a.accepts(edges_of(t, {"p:a.1:p", "p:a.1:p", "p:a.2:q", "q:b:p", "p:b:p"})));
    CHECK_FALSE(a.accepts(edges_of(t, {"p:a.2:q", "p:a.2:q"})));
}

TEST_CASE("exports") {
    auto u = build_unwinding(fixture("bounded_bursts.tpl"));
    auto j = unwinding_json(u);
    CHECK(j["n"] == 0);
    CHECK(j["r"] == 1);
    CHECK(j["components"].size() == 1);
    CHECK(j["broadcast_edges"].size() == 2);
    auto dot = unwinding_dot(u);
    CHECK(dot.find("cluster_0") != std::string::npos);
    CHECK(dot.find("cluster_1") == std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos);
}

TEST_CASE("unwinding properties on random templates") {
    std::mt19937_64 rng(42);
    for (int iter = 0; iter < 300; ++iter) {
        auto t = random_template(rng, {.max_states = 6});
        auto u = build_unwinding(t);
        CHECK(u.m() < (std::size_t{1} << t.num_states()));
        CHECK(u.r() >= 1);
        std::set<std::vector<StateId>> inits;
        for (const auto& c : u.components()) {
            check_saturated(t, c);
            CHECK(inits.insert(c.init).second);
            CHECK(saturate(t, c.init).edges == c.edges);
        }
        for (const auto& e : u.edges()) {
            const auto& c = u.component(e.comp);
            CHECK(c.contains(t.edge(e.base).src));
            if (e.broadcast) {
                const auto& nc = u.component(u.next(e.comp));
                CHECK(std::binary_search(nc.init.begin(), nc.init.end(), t.edge(e.base).dst));
            }
        }
        CHECK(validate_template(u.as_template(), {.require_unique_letters = true}).empty());

        // lift then project is the identity on random runs
        std::vector<StateId> init = t.initial_states();
        std::vector<StateId> states(1 + rng() % 3);
        for (auto& s : states) s = init[rng() % init.size()];
        Path run{Configuration::from_states(states, t.num_states()), {}};
        for (int i = 0; i < 8; ++i) {
            auto succ = successors(t, run.end());
            if (succ.empty()) break;
            run.steps.push_back(succ[rng() % succ.size()]);
        }
        auto lifted = lift_run(u, run);
        CHECK(is_valid_path(u.as_template(), lifted));
        CHECK(project_circ(u, lifted).steps == run.steps);
        std::vector<EdgeId> word = project_run(run, 1);
        CHECK(build_afin(u).accepts(word));
    }
}
