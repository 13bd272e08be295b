#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "rbcheck/error.hpp"
#include "rbcheck/model.hpp"
#include "rbcheck/template_io.hpp"
#include "support/fixtures.hpp"
#include "support/random_templates.hpp"

using namespace rbcheck;
using namespace rbcheck::testing;

namespace {

// (p,q,q,r) -c-> (p,q,r,p) -c-> (p,r,p,p) -a-> (p,r,q,q)
Path example_pseudo_cycle(const ProcessTemplate& t) {
    Path path{conf(t, {"p", "q", "q", "r"}), {}};
    auto step = [&](std::vector<Move> moves) {
        path.steps.push_back(make_rendezvous(t, path.end(), std::move(moves)));
    };
    step({{3, ed(t, "q:c.1:r")}, {4, ed(t, "r:c.2:p")}});
    step({{2, ed(t, "q:c.1:r")}, {3, ed(t, "r:c.2:p")}});
    step({{3, ed(t, "p:a.1:q")}, {4, ed(t, "p:a.2:q")}});
    return path;
}

// (p,p) -a-> (p,q) -b-> (p,p)
Path bursts_cycle(const ProcessTemplate& t) {
    Path path{conf(t, {"p", "p"}), {}};
    path.steps.push_back(make_rendezvous(t, path.end(), {{1, ed(t, "p:a.1:p")}, {2, ed(t, "p:a.2:q")}}));
    path.steps.push_back(make_broadcast(t, path.end(), {{1, ed(t, "p:b:p")}, {2, ed(t, "q:b:p")}}));
    return path;
}

Configuration random_configuration(std::mt19937_64& rng, const ProcessTemplate& t, std::size_t n) {
    std::vector<StateId> states(n);
    for (auto& s : states) s = static_cast<StateId>(rng() % t.num_states());
    return Configuration::from_states(states, t.num_states());
}

Path random_run(std::mt19937_64& rng, const ProcessTemplate& t, const Configuration& start, std::size_t len) {
    Path path{start, {}};
    for (std::size_t i = 0; i < len; ++i) {
        auto succ = successors(t, path.end());
        if (succ.empty()) break;
        path.steps.push_back(succ[rng() % succ.size()]);
    }
    return path;
}

}  // namespace

TEST_CASE("validate_template accepts the fixtures") {
    CHECK(validate_template(fixture("bounded_bursts.tpl")).empty());
    CHECK(validate_template(fixture("rendezvous_only.tpl")).empty());
    CHECK(validate_template(fixture("bounded_bursts.tpl"), {.require_unique_letters = true}).empty());
}

TEST_CASE("validate_template reports a missing broadcast edge") {
    auto t = parse_template("system rb\nk 2\nstate p init\nstate q\nedge p a.1 p\nedge p a.2 q\nedge p b p\n");
    auto diags = validate_template(t);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].rule == "missing broadcast edge");
    CHECK(diags[0].location == "state q");
}

TEST_CASE("validate_template flags repeated letters only on request") {
    auto t = parse_template("system rb\nk 2\nstate p init\nstate q\nedge p a.1 p\nedge q a.1 q\n"
                            "edge p a.2 q\nedge p b p\nedge q b q\n");
    CHECK(validate_template(t).empty());
    auto diags = validate_template(t, {.require_unique_letters = true});
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].location == "letter a.1");
}

TEST_CASE("template parser rejects malformed input with positions") {
    auto line_of = [](const std::string& text) {
        try {
            parse_template(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("system rb\nk 2\nstate p init\nstate p\n") == 4);
    CHECK(line_of("system rb\nk 2\nstate p init\nedge p b p\nedge p b p\n") == 5);
    CHECK(line_of("system rb\nk 2\nstate 1p\n") == 3);
    CHECK(line_of("system rb\nk 2\nstate b\n") == 3);
    CHECK(line_of("system rb\nk 2\nstate p\nedge p b.1 p\n") == 4);
    CHECK(line_of("system rb\nk 2\nstate p\nedge p a.3 p\n") == 4);
    CHECK(line_of("system rb\nstate p\n") == 2);
    CHECK(line_of("k 2\n") == 1);
    CHECK(line_of("system rb\nk 2\nstate p\nedge p a.1 zz\n") == 4);
}

TEST_CASE("template text round-trips") {
    for (auto name : {"rendezvous_only.tpl", "bounded_bursts.tpl", "dead_end.tpl", "two_phase.tpl"}) {
        auto t = fixture(name);
        auto text = write_template(t);
        CHECK(write_template(parse_template(text)) == text);
    }
}

TEST_CASE("the four-process pseudo-cycle replays through successors") {
    auto t = fixture("rendezvous_only.tpl");
    auto path = example_pseudo_cycle(t);
    CHECK(is_valid_path(t, path));
    for (const auto& step : path.steps) {
        auto succ = successors(t, step.src);
        CHECK(std::find(succ.begin(), succ.end(), step) != succ.end());
    }
    CHECK(path.steps[0].dst == conf(t, {"p", "q", "r", "p"}));
    CHECK(path.end() == conf(t, {"p", "r", "q", "q"}));
    CHECK(is_pseudo_cycle(path));
}

TEST_CASE("successors in the non-regular example") {
    auto t = fixture("bounded_bursts.tpl");
    SUBCASE("single process at q can only broadcast") {
        auto succ = successors(t, conf(t, {"q"}));
        REQUIRE(succ.size() == 1);
        CHECK(succ[0].broadcast);
        CHECK(succ[0].dst == conf(t, {"p"}));
    }
    SUBCASE("two processes at p") {
        auto succ = successors(t, conf(t, {"p", "p"}));
        auto rendezvous = std::count_if(succ.begin(), succ.end(), [](const auto& s) { return !s.broadcast; });
        CHECK(rendezvous == 2);
        CHECK(succ.size() == 3);
    }
}

TEST_CASE("r_only templates have no broadcast successors") {
    auto t = fixture("rendezvous_only.tpl");
    for (const auto& s : successors(t, conf(t, {"p", "q"}))) CHECK_FALSE(s.broadcast);
}

TEST_CASE("capped successor enumeration") {
    auto t = parse_template("system rb\nk 2\nstate p init\nstate q\nedge p b p\nedge p b q\nedge q b q\n");
    auto f = conf(t, {"p", "p", "p", "p", "p", "p"});
    CHECK(successors(t, f).size() == 64);
    CHECK_THROWS_AS(successors(t, f, {.limit = 10}), BudgetExceeded);
}

TEST_CASE("project_run") {
    auto t = fixture("rendezvous_only.tpl");
    auto path = example_pseudo_cycle(t);
    CHECK(project_run(path, 3) ==
          std::vector<EdgeId>{ed(t, "q:c.1:r"), ed(t, "r:c.2:p"), ed(t, "p:a.1:q")});
    CHECK(project_run(path, 4) == std::vector<EdgeId>{ed(t, "r:c.2:p"), ed(t, "p:a.2:q")});
    CHECK(project_run(path, 1).empty());
    CHECK_THROWS_AS(project_run(path, 9), Error);

    auto t2 = fixture("bounded_bursts.tpl");
    Path run{conf(t2, {"q"}), {}};
    run.steps.push_back(make_broadcast(t2, run.end(), {{1, ed(t2, "q:b:p")}}));
    run.steps.push_back(make_broadcast(t2, run.end(), {{1, ed(t2, "p:b:p")}}));
    CHECK(project_run(run, 1) == std::vector<EdgeId>{ed(t2, "q:b:p"), ed(t2, "p:b:p")});
}

TEST_CASE("twins and pseudo-cycles") {
    auto t = fixture("rendezvous_only.tpl");
    CHECK(twins(conf(t, {"p", "q", "q", "r"}), conf(t, {"p", "r", "q", "q"})));
    CHECK_FALSE(twins(conf(t, {"p", "q", "q", "r"}), conf(t, {"p", "q", "r", "p"})));
    auto f = conf(t, {"r", "q"});
    CHECK(twins(f, f));

    auto path = example_pseudo_cycle(t);
    Path first_two{path.start, {path.steps[0], path.steps[1]}};
    CHECK_FALSE(is_pseudo_cycle(first_two));

    auto t2 = fixture("bounded_bursts.tpl");
    Path one{conf(t2, {"p", "p"}), {}};
    one.steps.push_back(make_broadcast(t2, one.end(), {{1, ed(t2, "p:b:p")}, {2, ed(t2, "p:b:p")}}));
    CHECK(is_pseudo_cycle(one));
    CHECK_FALSE(is_pseudo_cycle(Path{one.start, {}}));
}

TEST_CASE("compose_runs") {
    auto t = fixture("rendezvous_only.tpl");
    auto cycle = example_pseudo_cycle(t);
    std::vector<Path> runs{cycle, cycle};

    SUBCASE("two copies interleaved round-robin") {
        auto schedule = round_robin_schedule(runs);
        auto comp = compose_runs(t, runs, schedule);
        CHECK(comp.run.start.size() == 8);
        CHECK(comp.run.steps.size() == 6);
        CHECK(is_valid_path(t, comp.run));
        CHECK(is_pseudo_cycle(comp.run));
        for (std::size_t g = 0; g < runs.size(); ++g)
            for (const auto& [orig, now] : comp.renamings[g])
                CHECK(project_run(comp.run, now) == project_run(runs[g], orig));
    }
    SUBCASE("single run with identity schedule is the run itself") {
        std::vector<Path> one{cycle};
        std::vector<ScheduleEntry> schedule(3, ScheduleEntry::step(0));
        auto comp = compose_runs(t, one, schedule);
        CHECK(comp.run.start == cycle.start);
        CHECK(comp.run.steps == cycle.steps);
    }
    SUBCASE("unequal broadcast counts") {
        auto t2 = fixture("bounded_bursts.tpl");
        auto with = bursts_cycle(t2);
        Path without{with.start, {with.steps[0]}};
        std::vector<Path> mixed{with, without};
        CHECK_THROWS_AS(compose_runs(t2, mixed, round_robin_schedule(mixed)), Error);
    }
    SUBCASE("schedule crossing the broadcast barrier") {
        auto t2 = fixture("bounded_bursts.tpl");
        auto c = bursts_cycle(t2);
        std::vector<Path> two{c, c};
        std::vector<ScheduleEntry> bad{ScheduleEntry::step(0), ScheduleEntry::broadcast(), ScheduleEntry::step(1)};
        CHECK_THROWS_AS(compose_runs(t2, two, bad), Error);
        std::vector<ScheduleEntry> early{ScheduleEntry::step(0), ScheduleEntry::step(0)};
        CHECK_THROWS_AS(compose_runs(t2, two, early), Error);
        std::vector<ScheduleEntry> good{ScheduleEntry::step(1), ScheduleEntry::step(0), ScheduleEntry::broadcast()};
        auto comp = compose_runs(t2, two, good);
        CHECK(comp.run.steps.size() == 3);
        CHECK(comp.run.broadcasts() == 1);
        CHECK(is_valid_path(t2, comp.run));
    }
}

TEST_CASE("pump_pseudo_cycle") {
    SUBCASE("four-process example twice") {
        auto t = fixture("rendezvous_only.tpl");
        auto cycle = example_pseudo_cycle(t);
        auto pumped = pump_pseudo_cycle(cycle, 2);
        REQUIRE(pumped.steps.size() == 6);
        CHECK(is_valid_path(t, pumped));
        CHECK(twins(pumped.steps[2].dst, cycle.start));
        CHECK(twins(pumped.steps[5].dst, cycle.start));
        for (std::size_t i = 0; i < 6; ++i) {
            const auto& a = t.edge(pumped.steps[i].moves[0].edge);
            const auto& b = t.edge(cycle.steps[i % 3].moves[0].edge);
            CHECK(a.label.letter().action == b.label.letter().action);
        }
    }
    SUBCASE("a true cycle repeats with identity renaming") {
        auto t = fixture("bounded_bursts.tpl");
        auto cycle = bursts_cycle(t);
        auto pumped = pump_pseudo_cycle(cycle, 3);
        REQUIRE(pumped.steps.size() == 6);
        CHECK(is_valid_path(t, pumped));
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(pumped.steps[i].broadcast == (i % 2 == 1));
            CHECK(pumped.steps[i] == cycle.steps[i % 2]);
        }
    }
    SUBCASE("rejects non pseudo-cycles") {
        auto t = fixture("rendezvous_only.tpl");
        auto cycle = example_pseudo_cycle(t);
        Path first{cycle.start, {cycle.steps[0]}};
        CHECK_THROWS_AS(pump_pseudo_cycle(first, 2), Error);
    }
}

TEST_CASE("model properties on random templates") {
    std::mt19937_64 rng(20261016);
    for (int iter = 0; iter < 150; ++iter) {
        auto t = random_template(rng, {.max_states = 4});
        const std::size_t n = 1 + rng() % 4;
        auto f = random_configuration(rng, t, n);
        for (const auto& step : successors(t, f)) {
            CHECK(is_valid_step(t, step));
            CHECK(step.moved().size() == (step.broadcast ? n : t.k()));
        }
        auto run = random_run(rng, t, f, 8);
        REQUIRE(is_valid_path(t, run));
        for (ProcessId p : run.start.processes()) {
            auto edges = project_run(run, p);
            for (std::size_t i = 1; i < edges.size(); ++i) CHECK(t.edge(edges[i - 1]).dst == t.edge(edges[i]).src);
        }

        // pseudo-cycle status survives renaming
        Renaming ren;
        for (ProcessId p : run.start.processes()) ren.emplace(p, 100 + 7 * p);
        for (std::size_t len = 1; len <= run.steps.size(); ++len) {
            Path prefix{run.start, {run.steps.begin(), run.steps.begin() + static_cast<std::ptrdiff_t>(len)}};
            CHECK(is_pseudo_cycle(prefix) == is_pseudo_cycle(rename(prefix, ren)));
            if (is_pseudo_cycle(prefix)) {
                auto pumped = pump_pseudo_cycle(prefix, 3);
                CHECK(is_valid_path(t, pumped));
                for (std::size_t i = len; i <= pumped.steps.size(); i += len)
                    CHECK(twins(pumped.steps[i - 1].dst, prefix.start));
            }
        }

        // composing then projecting back returns the original runs
        auto other = random_run(rng, t, random_configuration(rng, t, 1 + rng() % 3), 6);
        if (other.broadcasts() == run.broadcasts()) {
            std::vector<Path> runs{run, other};
            auto comp = compose_runs(t, runs, round_robin_schedule(runs));
            CHECK(is_valid_path(t, comp.run));
            for (std::size_t g = 0; g < 2; ++g)
                for (const auto& [orig, now] : comp.renamings[g])
                    CHECK(project_run(comp.run, now) == project_run(runs[g], orig));
        }
    }
}
