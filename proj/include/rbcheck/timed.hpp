#pragma once

// Discrete timed networks and their reduction to plain templates: clock
// values are collapsed above each clock's largest constant, a unit time step
// becomes a broadcast, and guards are pushed into the states.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rbcheck/model.hpp"

namespace rbcheck {

using ClockId = std::uint32_t;

struct Guard {
    enum class Kind { True, False, Lt, Eq, And, Or, Not };

    Kind kind = Kind::True;
    /// For Lt / Eq: `constant < clock` / `constant = clock`.
    std::uint32_t constant = 0;
    ClockId clock = 0;
    std::vector<Guard> children;

    static Guard truth(bool value) { return Guard{value ? Kind::True : Kind::False, 0, 0, {}}; }
    static Guard lt(std::uint32_t c, ClockId x) { return Guard{Kind::Lt, c, x, {}}; }
    static Guard eq(std::uint32_t c, ClockId x) { return Guard{Kind::Eq, c, x, {}}; }

    bool operator==(const Guard&) const = default;
};

/// Above-cap clock value.
inline constexpr std::uint32_t kTop = std::numeric_limits<std::uint32_t>::max();

/// One value per clock in 0..cap or kTop.
using ClockValuation = std::vector<std::uint32_t>;

/// Throws Error if the guard mentions a clock outside the valuation.
bool eval_guard(const Guard& g, const ClockValuation& v);
/// Adds one to every clock; values above their cap become kTop.
ClockValuation tick(const ClockValuation& v, const std::vector<std::uint32_t>& caps);
/// Collapses concrete values above the caps.
ClockValuation abstract_valuation(const std::vector<std::uint64_t>& concrete, const std::vector<std::uint32_t>& caps);

struct TimedEdge {
    StateId src = 0;
    Letter letter;
    StateId dst = 0;
    Guard guard;
    std::vector<ClockId> resets;
};

struct TimedTemplate {
    std::uint32_t k = 2;
    std::vector<std::string> states;
    std::vector<bool> initial;
    std::vector<std::string> clocks;
    /// Declared bound per clock, if any.
    std::vector<std::optional<std::uint32_t>> declared_max;
    std::vector<std::string> actions;
    std::vector<TimedEdge> edges;

    std::optional<StateId> find_state(std::string_view name) const;
    std::optional<ClockId> find_clock(std::string_view name) const;
    std::string edge_name(std::size_t e) const;
    /// Largest constant compared against each clock, or its declared bound.
    std::vector<std::uint32_t> caps(std::optional<std::uint32_t> global_cap = std::nullopt) const;
};

TimedTemplate parse_timed_template(std::string_view text);
TimedTemplate load_timed_template(const std::filesystem::path& path);
std::string guard_text(const TimedTemplate& t, const Guard& g);

struct ReduceOptions {
    /// Cap on |Q| times the number of valuations.
    std::size_t max_states = 200000;
    /// Cap on the number of relabelled actions.
    std::size_t max_actions = 200000;
    std::optional<std::uint32_t> global_cap;
};

struct RelabeledAction {
    std::string name;
    ActionId orig_action = 0;
    /// Per letter: the timed edge instantiated and the reduced edge emitted.
    std::vector<std::size_t> timed_edges;
    std::vector<EdgeId> letter_edges;
};

struct Reduction {
    ProcessTemplate rb;
    std::vector<std::uint32_t> caps;
    /// Reduced state -> (timed state, valuation).
    std::vector<std::pair<StateId, ClockValuation>> state_origin;
    /// Indexed by the reduced template's action ids.
    std::vector<RelabeledAction> actions;

    /// Original action name behind a reduced action.
    const std::string& orig_action_name(const TimedTemplate& t, ActionId reduced) const;
};

/// Throws BudgetExceeded, with the offending size, when a cap is exceeded.
Reduction reduce_to_rb(const TimedTemplate& t, const ReduceOptions& options = {});

/// `{new_action: {orig_action, letter_edges: [reduced edge ids]}}`
nlohmann::json relabel_json(const TimedTemplate& t, const Reduction& r);

std::string valuation_text(const TimedTemplate& t, const ClockValuation& v);

}  // namespace rbcheck
