#pragma once

// Reachability-unwinding: the template is unrolled along broadcasts into a
// lasso of saturated components P_0 .. P_m, where P_m loops back to P_n.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rbcheck/model.hpp"

namespace rbcheck {

struct Component {
    std::size_t index = 0;
    std::vector<StateId> init;
    std::vector<StateId> states;
    /// Rendezvous edges of the base template, in declaration order.
    std::vector<EdgeId> edges;
    /// Actions with at least one letter edge in `edges`.
    std::vector<ActionId> actions;

    bool contains(StateId s) const;
};

/// Least fixed point: an edge sourced in the state set is kept once every
/// letter of its action has some edge sourced in the state set.
Component saturate(const ProcessTemplate& t, std::span<const StateId> init);

struct UnwindingEdge {
    /// Component of the source state.
    std::size_t comp = 0;
    /// Edge of the base template.
    EdgeId base = 0;
    /// Endpoints as states of as_template().
    StateId src = 0;
    StateId dst = 0;
    bool broadcast = false;
};

class Unwinding {
public:
    Unwinding() = default;

    const ProcessTemplate& base() const noexcept { return base_; }
    const std::vector<Component>& components() const noexcept { return comps_; }
    const Component& component(std::size_t i) const { return comps_.at(i); }
    /// Length of the prefix, index of the last component, and the period.
    std::size_t n() const noexcept { return n_; }
    std::size_t m() const noexcept { return comps_.size() - 1; }
    std::size_t r() const noexcept { return comps_.size() - n_; }

    /// Component reached after `broadcasts` broadcasts.
    std::size_t comp(std::size_t broadcasts) const noexcept;
    /// Component following i along a broadcast.
    std::size_t next(std::size_t i) const noexcept { return i + 1 < comps_.size() ? i + 1 : n_; }
    bool in_loop(std::size_t i) const noexcept { return i >= n_; }

    /// Unwinding edges: per component, its rendezvous edges then its broadcast edges.
    const std::vector<UnwindingEdge>& edges() const noexcept { return edges_; }
    const UnwindingEdge& edge(std::size_t i) const { return edges_.at(i); }
    std::optional<std::size_t> find_edge(EdgeId base, std::size_t comp) const;
    /// `src:letter:dst@compI`
    std::string edge_id(std::size_t i) const;
    std::optional<std::size_t> find_edge(std::string_view id) const;

    /// The unwinding as an ordinary template over states `s@i`; its edge ids
    /// coincide with the indices of edges(). Actions are renamed `a@i` so
    /// different components never synchronize.
    const ProcessTemplate& as_template() const noexcept { return lifted_; }
    StateId base_state(StateId u) const { return state_info_.at(u).first; }
    std::size_t state_comp(StateId u) const { return state_info_.at(u).second; }
    std::optional<StateId> lifted_state(StateId s, std::size_t comp) const;

private:
    friend Unwinding build_unwinding(const ProcessTemplate& t);

    ProcessTemplate base_;
    std::vector<Component> comps_;
    std::size_t n_ = 0;
    std::vector<UnwindingEdge> edges_;
    std::map<std::pair<EdgeId, std::size_t>, std::size_t> edge_index_;
    ProcessTemplate lifted_;
    std::vector<std::pair<StateId, std::size_t>> state_info_;
    std::map<std::pair<StateId, std::size_t>, StateId> state_index_;
};

/// Throws Error when the template is not well formed.
Unwinding build_unwinding(const ProcessTemplate& t);

/// Annotates every state with comp(#broadcasts so far). Throws when some step
/// has no counterpart in the unwinding.
Path lift_run(const Unwinding& u, const Path& run);
/// Strips the annotations of a path over u.as_template().
Path project_circ(const Unwinding& u, const Path& path);

/// Nondeterministic finite-word automaton whose letters are base-template edges.
struct Nfa {
    struct Transition {
        std::uint32_t src = 0;
        EdgeId letter = 0;
        std::uint32_t dst = 0;
    };

    std::size_t num_states = 0;
    std::vector<bool> initial;
    std::vector<bool> accepting;
    std::vector<Transition> transitions;

    bool accepts(std::span<const EdgeId> word) const;
};

/// States are the unwinding states, all accepting.
Nfa build_afin(const Unwinding& u);

nlohmann::json unwinding_json(const Unwinding& u);
std::string unwinding_dot(const Unwinding& u);

}  // namespace rbcheck
