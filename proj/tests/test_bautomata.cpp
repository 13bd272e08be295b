#include <doctest.h>

#include <random>

#include "rbcheck/bautomata.hpp"
#include "rbcheck/error.hpp"
#include "support/fixtures.hpp"
#include "support/random_templates.hpp"

using namespace rbcheck;
using namespace rbcheck::testing;

namespace {

SpecAutomaton spec_fixture(const std::string& name) { return load_spec(fixture_path(name)); }

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_spec(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

const char* kAcceptAll = "spec nbw\nstate s init accepting\ntrans s * s\n";
const char* kAcceptNothing = "spec nbw\nstate s init\ntrans s * s\n";

std::vector<EdgeId> word(const ProcessTemplate& t, std::initializer_list<const char*> ids) {
    std::vector<EdgeId> out;
    for (auto id : ids) out.push_back(ed(t, id));
    return out;
}

}  // namespace

TEST_CASE("A-infinity of the non-regular example") {
    auto t = fixture("bounded_bursts.tpl");
    auto u = build_unwinding(t);
    auto a = build_ainf(u, classify(u));
    std::size_t copy2 = 0, copy3 = 0;
    for (const auto& tr : a.transitions) {
        if (tr.src >= ainf_state(u, 3, 0)) ++copy3;
        else if (tr.src >= ainf_state(u, 2, 0)) {
            ++copy2;
            CHECK(tr.op == (t.edge(tr.letter).is_broadcast() ? CounterOp::Reset : CounterOp::Increment));
        } else {
            CHECK(tr.op == CounterOp::Noop);
        }
    }
    CHECK(copy2 == 4);
    CHECK(copy3 == 0);
    CHECK(a.transitions.size() == 3 * 4 + 4);
    CHECK(a.initial[ainf_state(u, 1, 0)]);
    CHECK_FALSE(a.buchi[0][ainf_state(u, 1, 0)]);
    CHECK(a.buchi[0][ainf_state(u, 2, 0)]);
}

TEST_CASE("membership on the non-regular example") {
    auto t = fixture("bounded_bursts.tpl");
    auto u = build_unwinding(t);
    auto a = build_ainf(u, classify(u));
    CHECK(accepts_lasso(a, {}, word(t, {"p:b:p"})));
    CHECK(accepts_lasso(a, {}, word(t, {"p:a.1:p", "p:a.1:p", "p:a.2:q", "q:b:p"})));
    // unboundedly many a.1 without broadcast is not an execution
    CHECK_FALSE(accepts_lasso(a, {}, word(t, {"p:a.1:p"})));
    // a.2 leaves the process in q, where only the broadcast moves on
    CHECK_FALSE(accepts_lasso(a, {}, word(t, {"p:a.2:q", "q:b:p", "p:a.2:q"})));
    CHECK_FALSE(accepts_lasso(a, word(t, {"p:b:p"}), word(t, {"q:b:p"})));
}

TEST_CASE("liveness on the non-regular example") {
    auto t = fixture("bounded_bursts.tpl");
    auto holds = check_liveness(t, spec_fixture("nob_infa1.spec"));
    CHECK(holds.holds);
    auto violated = check_liveness(t, spec_fixture("infa1_infb.spec"));
    REQUIRE_FALSE(violated.holds);
    CHECK_FALSE(violated.cycle.empty());
    auto u = build_unwinding(t);
    auto a = build_ainf(u, classify(u));
    CHECK(accepts_lasso(a, violated.prefix, violated.cycle));
    auto j = verdict_json(t, violated);
    CHECK(j["status"] == "violated");
    CHECK(j["counterexample"]["cycle"].size() == violated.cycle.size());
}

TEST_CASE("intersection with trivial specs") {
    for (const char* name : {"bounded_bursts.tpl", "rendezvous_only.tpl", "green.tpl", "dead_end.tpl", "two_phase.tpl", "pruned.tpl"}) {
        INFO(name);
        auto t = fixture(name);
        auto u = build_unwinding(t);
        auto a = build_ainf(u, classify(u));
        const bool nonempty = emptiness(a).lasso.has_value();
        auto all = intersect(a, parse_spec(kAcceptAll), template_alphabet(t));
        CHECK(emptiness(all).lasso.has_value() == nonempty);
        CHECK_FALSE(emptiness(intersect(a, parse_spec(kAcceptNothing), template_alphabet(t))).lasso);
        // copy 3 has no broadcasts
        for (const auto& tr : a.transitions)
            if (tr.src >= ainf_state(u, 3, 0)) CHECK_FALSE(t.edge(tr.letter).is_broadcast());
    }
}

TEST_CASE("emptiness certificates") {
    BoundedCounterAutomaton a;
    a.state_names = {"0", "1", "2"};
    a.initial = {true, false, false};
    a.buchi = {{false, true, false}};
    // 0 -> 1 with an increment loop on 1: only unbounded runs visit 1
    a.transitions = {{0, 0, CounterOp::Noop, 1}, {1, 0, CounterOp::Increment, 1}};
    CHECK_FALSE(emptiness(a).lasso);
    // a reset through 2 makes the counter bounded again
    a.transitions.push_back({1, 1, CounterOp::Reset, 2});
    a.transitions.push_back({2, 1, CounterOp::Noop, 1});
    auto r = emptiness(a);
    REQUIRE(r.lasso);
    CHECK(lasso_accepting(a, *r.lasso));
    // unreachable accepting loops do not count
    BoundedCounterAutomaton b;
    b.state_names = {"0", "1"};
    b.initial = {true, false};
    b.buchi = {{false, true}};
    b.transitions = {{1, 0, CounterOp::Noop, 1}, {0, 0, CounterOp::Noop, 0}};
    CHECK_FALSE(emptiness(b).lasso);
    std::string why;
    CHECK_FALSE(lasso_accepting(b, Lasso{{}, {1}}, &why));
}

TEST_CASE("safety") {
    auto t = fixture("bounded_bursts.tpl");
    auto v = check_safety(t, spec_fixture("two_a2.spec"));
    CHECK(v.holds);
    auto m = fixture("bursts_with_return.tpl");
    auto bad = check_safety(m, spec_fixture("two_a2_mutated.spec"));
    REQUIRE_FALSE(bad.holds);
    CHECK(bad.cycle.empty());
    auto u = build_unwinding(m);
    CHECK(build_afin(u).accepts(bad.prefix));
    CHECK(m.edge_name(bad.prefix.back()) == "p:a.2:q");
    // the empty word
    auto now = check_safety(t, parse_spec("spec nfw\nstate s init accepting\n"));
    CHECK_FALSE(now.holds);
    CHECK(now.prefix.empty());
    // an edge the unwinding never takes
    auto dead = fixture("pruned.tpl");
    CHECK(check_safety(dead, parse_spec("spec nfw\nstate s init\nstate t accepting\ntrans s * s\ntrans s (d _ x) t\n")).holds);
}

TEST_CASE("spec alphabet and kind errors") {
    auto t = fixture("bounded_bursts.tpl");
    CHECK_THROWS_AS(check_safety(fixture("bounded_bursts.tpl"), spec_fixture("two_a2_mutated.spec")), Error);
    CHECK_THROWS_AS(check_liveness(t, spec_fixture("two_a2.spec")), Error);
    CHECK_THROWS_AS(check_safety(t, spec_fixture("nob_infa1.spec")), Error);
    CHECK_THROWS_AS(check_liveness(t, parse_spec("spec nbw\nstate s init accepting\ntrans s (zz _ _) s\n")), Error);
}

TEST_CASE("spec parser") {
    auto s = parse_spec("spec nbw\nstate s0 init\nstate s1 accepting\ntrans s0 * s0\ntrans s0 (_ b _) s1\ntrans s1 (p a.1 p) s1\n");
    CHECK(s.states.size() == 2);
    REQUIRE(s.transitions.size() == 3);
    CHECK(s.transitions[0].pattern.any);
    CHECK(s.transitions[1].pattern.letter == "b");
    CHECK(s.transitions[1].pattern.src.empty());
    CHECK(s.transitions[2].pattern.src == "p");
    CHECK(parse_error_line("spec nbw\nstate s init\ntrans s (_ b) s\n") == 3);
    CHECK(parse_error_line("spec xyz\n") == 1);
    CHECK(parse_error_line("spec nbw\nstate s init\ntrans s * t\n") == 3);
    CHECK(parse_error_line("spec nbw\nstate s\n") > 0);
    CHECK(parse_error_line("state s init\n") == 1);
}

TEST_CASE("timed alphabet matches original names") {
    auto t = load_timed_template(fixture_path("clocked.ttpl"));
    auto r = reduce_to_rb(t);
    auto alpha = timed_alphabet(t, r);
    const auto& e = r.rb.edge(r.actions[0].letter_edges[0]);
    (void)e;
    CHECK(pattern_matches(EdgePattern{false, "q0", "a.1", "q0"}, alpha.edges[r.actions[0].letter_edges[0]]));
    CHECK(pattern_matches(EdgePattern{false, "q0__x_1", "a__1.1", ""}, alpha.edges[r.actions[0].letter_edges[0]]));
    CHECK_FALSE(pattern_matches(EdgePattern{false, "", "b", ""}, alpha.edges[r.actions[0].letter_edges[0]]));
}

TEST_CASE("adding an accepting sink never turns violated into holds") {
    std::mt19937_64 rng(5);
    const char* specs[] = {
        "spec nbw\nstate s init\nstate f accepting\ntrans s * s\ntrans s (_ b _) f\ntrans f * s\n",
        "spec nbw\nstate s init\nstate f accepting\ntrans s * s\ntrans s (_ a0.1 _) f\ntrans f (_ a0.1 _) f\n",
    };
    for (int iter = 0; iter < 40; ++iter) {
        auto t = random_template(rng, {.max_states = 4, .max_actions = 2});
        if (t.num_actions() < 1) continue;
        for (const char* text : specs) {
            auto spec = parse_spec(text);
            auto before = check_liveness(t, spec);
            spec.states.push_back("sink");
            spec.initial.push_back(false);
            spec.accepting.push_back(true);
            spec.transitions.push_back({0, EdgePattern{true, "", "", ""}, spec.states.size() - 1, 0});
            spec.transitions.push_back({spec.states.size() - 1, EdgePattern{true, "", "", ""}, spec.states.size() - 1, 0});
            auto after = check_liveness(t, spec);
            if (!before.holds) CHECK_FALSE(after.holds);
            if (!after.holds) {
                auto u = build_unwinding(t);
                auto a = build_ainf(u, classify(u));
                CHECK(accepts_lasso(a, after.prefix, after.cycle));
            }
        }
    }
}
