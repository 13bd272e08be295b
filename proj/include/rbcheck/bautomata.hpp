#pragma once

// Büchi automata with one bounded counter, bad-behaviour specifications over
// template edges, and the liveness/safety pipelines built on them.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rbcheck/classifier.hpp"
#include "rbcheck/timed.hpp"
#include "rbcheck/unwinding.hpp"

namespace rbcheck {

enum class CounterOp { Noop, Increment, Reset };

std::string_view counter_op_name(CounterOp op);

/// Letters are edges of the base template. Accepting runs visit every Büchi
/// set infinitely often and keep the counter bounded.
struct BoundedCounterAutomaton {
    struct Transition {
        std::size_t src = 0;
        EdgeId letter = 0;
        CounterOp op = CounterOp::Noop;
        std::size_t dst = 0;
    };

    std::vector<std::string> state_names;
    std::vector<bool> initial;
    std::vector<Transition> transitions;
    std::vector<std::vector<bool>> buchi;
    /// Products record which component states they pair; empty otherwise.
    std::vector<std::pair<std::size_t, std::size_t>> origin;

    std::size_t num_states() const noexcept { return state_names.size(); }
};

/// Three copies of the unwinding: copy 1 keeps every edge, copy 2 the green
/// and orange ones with counter updates, copy 3 the blue and green ones.
BoundedCounterAutomaton build_ainf(const Unwinding& u, const Classification& c);

/// State index of (copy, unwinding state) in build_ainf's output.
std::size_t ainf_state(const Unwinding& u, int copy, StateId s);

struct EdgePattern {
    /// `*`: any edge.
    bool any = false;
    /// Empty field = `_`.
    std::string src, letter, dst;
};

struct SpecAutomaton {
    enum class Kind { Nbw, Nfw };

    Kind kind = Kind::Nbw;
    std::vector<std::string> states;
    std::vector<bool> initial;
    std::vector<bool> accepting;
    struct Transition {
        std::size_t src = 0;
        EdgePattern pattern;
        std::size_t dst = 0;
        std::size_t line = 0;
    };
    std::vector<Transition> transitions;
};

SpecAutomaton parse_spec(std::string_view text);
SpecAutomaton load_spec(const std::filesystem::path& path);

/// Names each base edge answers to when matched against a pattern.
struct EdgeAlphabet {
    struct Names {
        std::vector<std::string> src, letter, dst;
    };
    std::vector<Names> edges;
    std::vector<std::string> states;
    std::vector<std::string> letters;
};

EdgeAlphabet template_alphabet(const ProcessTemplate& t);
/// Reduced edges answer to both their own names and the original timed names.
EdgeAlphabet timed_alphabet(const TimedTemplate& t, const Reduction& r);

bool pattern_matches(const EdgePattern& p, const EdgeAlphabet::Names& edge);
/// Throws Error when a pattern names a state or letter the alphabet lacks.
void check_spec_alphabet(const SpecAutomaton& s, const EdgeAlphabet& alphabet);

/// Synchronous product over reachable pairs; Büchi sets of `a` followed by the spec's accepting set.
BoundedCounterAutomaton intersect(const BoundedCounterAutomaton& a, const SpecAutomaton& s, const EdgeAlphabet& alphabet);

/// Lasso as transition indices: prefix from an initial state, then a cycle back to its own start.
struct Lasso {
    std::vector<std::size_t> prefix;
    std::vector<std::size_t> cycle;
};

struct EmptinessResult {
    std::optional<Lasso> lasso;
    std::size_t reachable = 0;
    std::size_t sccs = 0;
};

/// Nonempty iff some reachable strongly connected part meets every Büchi set
/// and either contains a reset or avoids increments altogether.
EmptinessResult emptiness(const BoundedCounterAutomaton& a);

/// Re-checks a lasso against the acceptance condition; `why` gets the first problem.
bool lasso_accepting(const BoundedCounterAutomaton& a, const Lasso& l, std::string* why = nullptr);

/// Membership of the ultimately periodic word prefix·cycle^ω.
bool accepts_lasso(const BoundedCounterAutomaton& a, std::span<const EdgeId> prefix, std::span<const EdgeId> cycle);

struct Verdict {
    bool holds = true;
    /// Template-edge words; `cycle` is empty for safety counterexamples.
    std::vector<EdgeId> prefix;
    std::vector<EdgeId> cycle;
    std::optional<std::size_t> realized_at_n;
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t sccs = 0;
    double ms = 0;
};

struct CheckOptions {
    unsigned jobs = 1;
};

/// Bad-behaviour NBW against the infinite executions.
Verdict check_liveness(const ProcessTemplate& t, const SpecAutomaton& bad, const EdgeAlphabet& alphabet,
                       const CheckOptions& options = {});
Verdict check_liveness(const ProcessTemplate& t, const SpecAutomaton& bad, const CheckOptions& options = {});
/// Bad-prefix NFW against the finite executions.
Verdict check_safety(const ProcessTemplate& t, const SpecAutomaton& bad, const EdgeAlphabet& alphabet);
Verdict check_safety(const ProcessTemplate& t, const SpecAutomaton& bad);

nlohmann::json verdict_json(const ProcessTemplate& t, const Verdict& v);

}  // namespace rbcheck
