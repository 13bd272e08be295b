#pragma once

// Explicit-state ground truth for fixed instance sizes. Configurations are
// searched up to twin equivalence: a vertex is the count vector of the
// anonymous processes, plus the state of process 1 when it is tracked.

#include <chrono>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rbcheck/model.hpp"
#include "rbcheck/timed.hpp"
#include "rbcheck/unwinding.hpp"

namespace rbcheck {

struct SearchBudget {
    std::size_t max_n = 6;
    std::size_t max_depth = 64;
    std::size_t max_states = 200000;
    std::size_t max_ms = 10000;
};

/// Process 1 (when tracked) plus per-state counts of the other processes.
struct QConfig {
    std::optional<StateId> tracked;
    std::vector<std::uint32_t> counts;

    std::size_t size() const;
    auto operator<=>(const QConfig&) const = default;
};

QConfig quotient(const Configuration& f, bool track_first);
/// Process 1 at the tracked state, the others numbered upwards in state order.
Configuration representative(const QConfig& q);

/// One step between quotient vertices.
struct QStep {
    bool broadcast = false;
    /// Edge taken by process 1, if tracked and moving.
    std::optional<EdgeId> tracked_edge;
    /// Rendezvous: edge per letter, in letter order; the tracked letter is included.
    std::vector<EdgeId> letters;
    std::optional<std::size_t> tracked_letter;
    /// Broadcast: how many anonymous processes take each edge.
    std::vector<std::pair<EdgeId, std::uint32_t>> spread;
    QConfig dst;
};

std::vector<QStep> quotient_successors(const ProcessTemplate& t, const QConfig& q);
/// The concrete step moving the lowest-numbered anonymous processes; with
/// `track_first`, process 1 moves only as the step says.
GlobalTransition concretize_step(const ProcessTemplate& t, const Configuration& f, const QStep& s, bool track_first);

/// Every size-n initial vertex, in a fixed order.
std::vector<QConfig> initial_vertices(const ProcessTemplate& t, std::size_t n, bool track_first);

struct StateGraph {
    struct Arc {
        std::size_t src = 0;
        std::size_t dst = 0;
        QStep step;
    };

    std::vector<QConfig> vertices;
    /// Search-specific annotation per vertex (word position, broadcast count); 0 in enumerate.
    std::vector<std::size_t> tag;
    bool track_first = false;
    std::vector<Arc> arcs;
    std::vector<std::vector<std::size_t>> out;
    /// Breadth-first parent arc of each vertex; none for initial vertices.
    std::vector<std::optional<std::size_t>> parent;
    std::vector<std::size_t> depth;
    bool truncated = false;

    std::optional<std::size_t> find(const QConfig& q, std::size_t tag = 0) const;
    /// Explicit path from an initial vertex to vertex `v`.
    Path path_to(const ProcessTemplate& t, std::size_t v) const;
};

/// Breadth-first reachable fragment of the size-n instance.
StateGraph enumerate(const ProcessTemplate& t, std::size_t n, const SearchBudget& budget, bool track_first = false);

std::string state_graph_dot(const ProcessTemplate& t, const StateGraph& g, std::size_t max_vertices = 200);

struct WordSet {
    std::set<std::vector<EdgeId>> words;
    bool truncated = false;
};

/// Projections on process 1 of all runs with at most `max_len` steps.
WordSet exec_fin(const ProcessTemplate& t, std::size_t n, std::size_t max_len, const SearchBudget& budget = {});

/// Smallest size up to budget.max_n with a run whose projection on process 1 is `word`.
struct WordRun {
    std::size_t n = 0;
    Path run;
};
std::optional<WordRun> find_word_run(const ProcessTemplate& t, std::span<const EdgeId> word, const SearchBudget& budget = {});

enum class CycleKind { Any, BroadcastFree, WithBroadcast };

struct FoundCycle {
    std::size_t n = 0;
    Path prefix;
    Path cycle;
    std::size_t broadcasts = 0;
};

struct CycleSearch {
    std::optional<FoundCycle> found;
    bool truncated = false;
};

/// Reachable pseudo-cycle of u.as_template() at size n through unwinding edge `e`.
CycleSearch find_pseudo_cycle(const Unwinding& u, std::size_t e, std::size_t n, const SearchBudget& budget,
                              CycleKind kind = CycleKind::Any);

struct LoadingRun {
    std::size_t n = 0;
    Path run;
};

/// A run with exactly b broadcasts ending with at least n_target processes in
/// every state of component comp(b), trying sizes 1..budget.max_n.
std::optional<LoadingRun> find_loading_run(const Unwinding& u, std::size_t b, std::size_t n_target,
                                           const SearchBudget& budget);

struct RealizedLasso {
    std::size_t n = 0;
    /// Prefix run followed by one closing loop; `loop_start` indexes its steps.
    Path run;
    std::size_t loop_start = 0;
};

/// Smallest size at which process 1 can follow prefix·cycle^j and end in a
/// twin (process 1 fixed) of where the loop began, so the run repeats forever.
std::optional<RealizedLasso> realize_lasso(const ProcessTemplate& t, std::span<const EdgeId> prefix,
                                           std::span<const EdgeId> cycle, const SearchBudget& budget);

/// Compares the runs of the size-n instance with the projected runs of its
/// unwinding up to `depth` steps, one reachable (configuration, broadcast
/// count) at a time. Returns a description of the first difference.
std::optional<std::string> compare_lifted_runs(const Unwinding& u, std::size_t n, std::size_t depth);

/// Concrete timed semantics: clocks are unbounded integers, a tick advances
/// every clock of every process. Steps render as `q|letter|q'|v|v'` with
/// valuations abstracted by the caps.
std::set<std::vector<std::string>> timed_exec_fin(const TimedTemplate& t, std::size_t n, std::size_t max_len,
                                                  std::optional<std::uint32_t> global_cap = std::nullopt);
/// The same rendering applied to exec_fin of the reduced template.
std::set<std::vector<std::string>> reduced_exec_fin(const TimedTemplate& t, const Reduction& r, std::size_t n,
                                                    std::size_t max_len);

}  // namespace rbcheck
