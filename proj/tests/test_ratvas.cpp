#include <doctest.h>

#include <random>

#include "rbcheck/error.hpp"
#include "rbcheck/ratvas.hpp"
#include "support/fixtures.hpp"

using namespace rbcheck;
using namespace rbcheck::testing;

namespace {

CounterVector cv(std::initializer_list<int> xs) {
    CounterVector out;
    for (int x : xs) out.emplace_back(x);
    return out;
}

// sum_a y_a * a# = 0 over the actions of the template, y_target >= 1
LinearSystem zero_sum_system(const ProcessTemplate& t, ActionId target) {
    LinearSystem sys;
    std::vector<ActionEffect> effects;
    for (ActionId a = 0; a < t.num_actions(); ++a) {
        sys.add_variable("y_" + t.action_name(a));
        effects.push_back(action_effect(t, a));
    }
    for (StateId s = 0; s < t.num_states(); ++s) {
        std::vector<Term> terms;
        for (ActionId a = 0; a < t.num_actions(); ++a)
            if (effects[a].delta[s] != 0) terms.push_back({a, Rational(effects[a].delta[s])});
        sys.add_equality(std::move(terms), 0, "bal_" + t.state_name(s));
    }
    sys.require_at_least_one(target);
    return sys;
}

}  // namespace

TEST_CASE("counter_rep") {
    auto t = fixture("rendezvous_only.tpl");
    CHECK(counter_rep(conf(t, {"p", "q", "q", "r"})) == cv({1, 2, 1}));
    CHECK(counter_rep(conf(t, {"p", "r", "q", "q"})) == cv({1, 2, 1}));
    CHECK(counter_rep(conf(t, {"p"})) == cv({1, 0, 0}));
}

TEST_CASE("counter_rep equality coincides with twins") {
    std::mt19937_64 rng(7);
    auto t = fixture("rendezvous_only.tpl");
    for (int i = 0; i < 200; ++i) {
        std::vector<StateId> a(3), b(3);
        for (auto& s : a) s = rng() % 3;
        for (auto& s : b) s = rng() % 3;
        auto f = Configuration::from_states(a, 3);
        auto g = Configuration::from_states(b, 3, 10);
        CHECK(twins(f, g) == (counter_rep(f) == counter_rep(g)));
    }
}

TEST_CASE("action_effect") {
    auto t = fixture("rendezvous_only.tpl");
    auto a = action_effect(t, t.find_action("a").value());
    auto c = action_effect(t, t.find_action("c").value());
    CHECK(a.delta == std::vector<std::int64_t>{-2, 2, 0});
    CHECK(c.delta == std::vector<std::int64_t>{1, -1, 0});

    auto g = fixture("green.tpl");
    CHECK(action_effect(g, 0).delta == std::vector<std::int64_t>{0});

    SUBCASE("missing letter in the allowed set") {
        std::vector<EdgeId> only{ed(t, "p:a.1:q")};
        CHECK_THROWS_AS(action_effect(t, 0, only), Error);
    }
}

TEST_CASE("is_legal") {
    auto t = fixture("rendezvous_only.tpl");
    Path run{conf(t, {"p", "q", "q", "r"}), {}};
    run.steps.push_back(make_rendezvous(t, run.end(), {{3, ed(t, "q:c.1:r")}, {4, ed(t, "r:c.2:p")}}));
    run.steps.push_back(make_rendezvous(t, run.end(), {{2, ed(t, "q:c.1:r")}, {3, ed(t, "r:c.2:p")}}));
    run.steps.push_back(make_rendezvous(t, run.end(), {{3, ed(t, "p:a.1:q")}, {4, ed(t, "p:a.2:q")}}));
    RationalPath rp{counter_rep(run.start), {}};
    for (const auto& s : run.steps) {
        CounterVector d(3);
        auto src = counter_rep(s.src), dst = counter_rep(s.dst);
        for (int i = 0; i < 3; ++i) d[i] = dst[i] - src[i];
        rp.displacements.push_back(d);
    }
    CHECK(is_legal(rp));
    CHECK_FALSE(is_legal(RationalPath{cv({0}), {cv({-1})}}));
    CHECK(is_legal(RationalPath{cv({1}), {cv({-1}), cv({1})}}));
}

TEST_CASE("lp_feasible examples") {
    auto t = fixture("rendezvous_only.tpl");
    SUBCASE("zero-sum action multiset through c") {
        auto sys = zero_sum_system(t, t.find_action("c").value());
        auto x = lp_feasible(sys);
        REQUIRE(x);
        CHECK(sys.satisfied_by(*x));
        CHECK((*x)[1] == 2 * (*x)[0]);
    }
    SUBCASE("single draining variable") {
        LinearSystem sys;
        auto y = sys.add_variable("y_a");
        sys.add_equality({{y, -1}});
        sys.require_at_least_one(y);
        CHECK_FALSE(lp_feasible(sys));
    }
    SUBCASE("empty system") {
        auto x = lp_feasible(LinearSystem{});
        REQUIRE(x);
        CHECK(x->empty());
    }
    SUBCASE("pinned variables stay at zero") {
        LinearSystem sys;
        auto a = sys.add_variable("a");
        auto b = sys.add_variable("b");
        sys.add_equality({{a, 1}, {b, 1}}, 3);
        sys.pin_zero(a);
        auto x = lp_feasible(sys);
        REQUIRE(x);
        CHECK((*x)[0] == 0);
        CHECK((*x)[1] == 3);
        sys.pin_zero(b);
        CHECK_FALSE(lp_feasible(sys));
    }
    SUBCASE("inconsistent constant row") {
        LinearSystem sys;
        sys.add_equality({}, 1);
        CHECK_FALSE(lp_feasible(sys));
    }
}

TEST_CASE("max_support_solution") {
    auto t = fixture("rendezvous_only.tpl");
    auto sys = zero_sum_system(t, t.find_action("c").value());
    auto r = max_support_solution(sys);
    REQUIRE(r);
    CHECK(r->support == std::vector<bool>{true, true});

    LinearSystem forced;
    auto a = forced.add_variable("y_a");
    auto b = forced.add_variable("y_b");
    forced.add_equality({{a, 1}});
    forced.require_at_least_one(b);
    auto f = max_support_solution(forced);
    REQUIRE(f);
    CHECK(f->support == std::vector<bool>{false, true});

    forced.require_at_least_one(a);
    CHECK_FALSE(max_support_solution(forced));
}

TEST_CASE("max support agrees with per-variable feasibility") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 100; ++iter) {
        LinearSystem sys;
        const int n = 2 + rng() % 5, m = 1 + rng() % 3;
        for (int v = 0; v < n; ++v) sys.add_variable("x" + std::to_string(v));
        for (int i = 0; i < m; ++i) {
            std::vector<Term> terms;
            for (int v = 0; v < n; ++v)
                if (rng() % 2) terms.push_back({static_cast<VarId>(v), Rational(static_cast<int>(rng() % 5) - 2)});
            sys.add_equality(terms);
        }
        auto r = max_support_solution(sys);
        REQUIRE(r);  // zero is always feasible
        for (VarId v = 0; v < static_cast<VarId>(n); ++v) {
            LinearSystem probe = sys;
            probe.require_at_least_one(v);
            CHECK(r->support[v] == lp_feasible(probe).has_value());
        }
    }
}

TEST_CASE("integer_scale") {
    using V = std::vector<Rational>;
    CHECK(integer_scale(V{Rational(1, 3), Rational(2, 3)}) == std::vector<Integer>{1, 2});
    CHECK(integer_scale(V{Rational(4), Rational(0)}) == std::vector<Integer>{4, 0});
    CHECK(integer_scale(V{Rational(1, 2), Rational(1, 3)}) == std::vector<Integer>{3, 2});
}

TEST_CASE("integer_scale keeps homogeneous solutions feasible") {
    LinearSystem sys;
    auto a = sys.add_variable("a");
    auto b = sys.add_variable("b");
    auto c = sys.add_variable("c");
    sys.add_equality({{a, 3}, {b, -2}, {c, -1}});
    sys.add_equality({{b, 5}, {c, -7}});
    sys.require_at_least_one(c);
    auto x = lp_feasible(sys);
    REQUIRE(x);
    auto z = integer_scale(*x);
    Solution back;
    for (const auto& i : z) back.emplace_back(i);
    CHECK(sys.satisfied_by(back));
}

TEST_CASE("planted random systems are never declared infeasible") {
    std::mt19937_64 rng(1234);
    for (int iter = 0; iter < 300; ++iter) {
        const int n = 1 + rng() % 7, m = rng() % 6;
        LinearSystem sys;
        Solution planted;
        for (int v = 0; v < n; ++v) {
            sys.add_variable("x" + std::to_string(v));
            planted.emplace_back(static_cast<int>(rng() % 4), static_cast<int>(1 + rng() % 3));
            planted.back().canonicalize();
            if (rng() % 4 == 0) {
                planted.back() += 1;
                sys.require_at_least_one(v);
            }
        }
        for (int i = 0; i < m; ++i) {
            std::vector<Term> terms;
            Rational rhs = 0;
            for (int v = 0; v < n; ++v) {
                if (rng() % 3 == 0) continue;
                Rational c(static_cast<int>(rng() % 9) - 4, static_cast<int>(1 + rng() % 2));
                c.canonicalize();
                terms.push_back({static_cast<VarId>(v), c});
                rhs += c * planted[v];
            }
            sys.add_equality(terms, rhs);
        }
        REQUIRE(sys.satisfied_by(planted));
        auto x = lp_feasible(sys);
        REQUIRE(x);
        CHECK(sys.satisfied_by(*x));
    }
    CHECK(solver_stats().residual_failures == 0);
}

TEST_CASE("dump_lp lists rows and bounds") {
    LinearSystem sys;
    auto a = sys.add_variable("y_a");
    auto c = sys.add_variable("y_c");
    sys.add_equality({{a, -2}, {c, 1}}, 0, "bal_p");
    sys.require_at_least_one(c);
    auto text = dump_lp(sys);
    CHECK(text.find("bal_p: - 2 y_a + y_c = 0") != std::string::npos);
    CHECK(text.find("y_c >= 1") != std::string::npos);
    CHECK(text.find("y_a >= 0") != std::string::npos);
}
