#pragma once

// Counter abstraction of configurations and an exact rational feasibility
// solver for the linear systems built over it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "rbcheck/model.hpp"

namespace rbcheck {

using Rational = mpq_class;
using Integer = mpz_class;

/// Per-state values in the template's state declaration order.
using CounterVector = std::vector<Rational>;

CounterVector counter_rep(const Configuration& f);

struct ActionEffect {
    ActionId action = 0;
    /// Net change of each state's count; sums to zero.
    std::vector<std::int64_t> delta;
    /// The edge taken for letter j+1.
    std::vector<EdgeId> letter_edges;
};

/// Effect of `action` using only edges from `allowed` (all edges when empty).
/// Throws if some letter of the action has no allowed edge, or more than one.
ActionEffect action_effect(const ProcessTemplate& t, ActionId action, std::span<const EdgeId> allowed = {});

struct RationalPath {
    CounterVector origin;
    std::vector<CounterVector> displacements;
};

/// All prefix sums are nonnegative in every coordinate.
bool is_legal(const RationalPath& path);

using VarId = std::uint32_t;

struct Term {
    VarId var = 0;
    Rational coeff;
};

struct Equality {
    std::vector<Term> terms;
    Rational rhs;
    std::string label;
};

/// Equalities over nonnegative variables. Individual variables may be
/// required to be at least 1 or pinned to 0.
class LinearSystem {
public:
    VarId add_variable(std::string name);
    void add_equality(std::vector<Term> terms, Rational rhs = 0, std::string label = {});
    void require_at_least_one(VarId v);
    void pin_zero(VarId v);

    std::size_t num_variables() const noexcept { return names_.size(); }
    const std::string& name(VarId v) const { return names_.at(v); }
    std::optional<VarId> find_variable(std::string_view name) const;
    const std::vector<Equality>& equalities() const noexcept { return rows_; }
    bool at_least_one(VarId v) const { return lower_.at(v); }
    bool pinned(VarId v) const { return pinned_.at(v); }

    /// True iff `x` satisfies every equality and bound exactly.
    bool satisfied_by(std::span<const Rational> x) const;

private:
    std::vector<std::string> names_;
    std::vector<bool> lower_;
    std::vector<bool> pinned_;
    std::vector<Equality> rows_;
};

using Solution = std::vector<Rational>;

/// Feasible point or nothing. Deterministic: phase-1 simplex with Bland's rule,
/// pivoting in variable declaration order. Every returned point is re-checked
/// against the system; a failed check throws.
std::optional<Solution> lp_feasible(const LinearSystem& sys);

struct SupportSolution {
    Solution solution;
    std::vector<bool> support;
};

/// Feasible point whose support is the union of the supports of all feasible points.
/// Assumes the system is homogeneous apart from the at-least-one bounds.
std::optional<SupportSolution> max_support_solution(const LinearSystem& sys);

/// Multiplies by the lcm of the denominators.
std::vector<Integer> integer_scale(std::span<const Rational> x);

/// Process-wide solver counters, used to audit solver integrity.
struct SolverStats {
    std::uint64_t solves = 0;
    std::uint64_t feasible = 0;
    std::uint64_t checked = 0;
    std::uint64_t residual_failures = 0;
};
SolverStats solver_stats();

/// Human-readable dump in an LP-like syntax.
std::string dump_lp(const LinearSystem& sys);

}  // namespace rbcheck
