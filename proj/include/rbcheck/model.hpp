#pragma once

// Process templates for systems of identical processes that synchronize by
// k-wise rendezvous and by a symmetric broadcast, plus the explicit semantics
// of the finite instance with a fixed set of processes.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rbcheck {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using EdgeId = std::uint32_t;
using ProcessId = std::uint32_t;

/// Letter a_j of a rendezvous action; `index` is 1-based.
struct Letter {
    ActionId action = 0;
    std::uint32_t index = 1;

    auto operator<=>(const Letter&) const = default;
};

/// An edge label: either a rendezvous letter or the broadcast symbol.
class Label {
public:
    static Label broadcast() { return Label{}; }
    static Label of(Letter letter) { return Label{letter}; }
    static Label of(ActionId action, std::uint32_t index) { return Label{Letter{action, index}}; }

    bool is_broadcast() const noexcept { return !letter_.has_value(); }
    const Letter& letter() const;

    auto operator<=>(const Label&) const = default;

private:
    Label() = default;
    explicit Label(Letter letter) : letter_(letter) {}

    std::optional<Letter> letter_;
};

struct Edge {
    StateId src = 0;
    Label label = Label::broadcast();
    StateId dst = 0;

    bool is_broadcast() const noexcept { return label.is_broadcast(); }
    auto operator<=>(const Edge&) const = default;
};

struct RendezvousAction {
    std::string name;
};

/// Finite edge-labelled process description. Identifiers are dense and follow
/// declaration order, which fixes the global state ordering used by counter
/// vectors and every tie-break.
class ProcessTemplate {
public:
    explicit ProcessTemplate(std::uint32_t k = 2, bool r_only = false);

    StateId add_state(std::string name, bool initial = false);
    /// Returns the existing id when `name` is already declared.
    ActionId add_action(std::string name);
    /// Throws on a duplicate edge or an undeclared endpoint/action.
    EdgeId add_edge(StateId src, Label label, StateId dst);

    std::uint32_t k() const noexcept { return k_; }
    bool r_only() const noexcept { return r_only_; }

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    const std::string& state_name(StateId s) const { return states_.at(s); }
    std::optional<StateId> find_state(std::string_view name) const;
    bool is_initial(StateId s) const { return initial_.at(s); }
    std::vector<StateId> initial_states() const;

    const std::string& action_name(ActionId a) const { return actions_.at(a).name; }
    std::optional<ActionId> find_action(std::string_view name) const;

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Edge& edge(EdgeId e) const { return edges_.at(e); }
    const std::vector<EdgeId>& edges_from(StateId s) const { return out_.at(s); }
    std::vector<EdgeId> broadcast_edges_from(StateId s) const;
    /// All edges carrying `letter`, in declaration order.
    std::vector<EdgeId> letter_edges(Letter letter) const;
    std::optional<EdgeId> find_edge(const Edge& edge) const;

    /// `a.1`, or `b` for the broadcast symbol.
    std::string label_name(const Label& label) const;
    /// Stable textual id `src:letter:dst`.
    std::string edge_name(EdgeId e) const;
    /// Parses an id produced by edge_name.
    std::optional<EdgeId> find_edge(std::string_view id) const;
    std::optional<Label> parse_label(std::string_view text) const;

private:
    std::uint32_t k_;
    bool r_only_;
    std::vector<std::string> states_;
    std::vector<bool> initial_;
    std::unordered_map<std::string, StateId> state_index_;
    std::vector<RendezvousAction> actions_;
    std::unordered_map<std::string, ActionId> action_index_;
    std::vector<Edge> edges_;
    std::vector<std::vector<EdgeId>> out_;
    std::map<Edge, EdgeId> edge_index_;
};

struct Diagnostic {
    std::string rule;
    std::string location;

    bool operator==(const Diagnostic&) const = default;
};

struct ValidateOptions {
    bool require_unique_letters = false;
};

/// Empty result iff the template is well formed.
std::vector<Diagnostic> validate_template(const ProcessTemplate& t, ValidateOptions options = {});

/// Assignment of processes to states. Holds both the explicit map (sorted by
/// process id) and the per-state counts; the two views never diverge.
class Configuration {
public:
    Configuration() = default;
    Configuration(std::vector<std::pair<ProcessId, StateId>> assignment, std::size_t num_states);

    /// Processes first, first+1, ... placed in `states`.
    static Configuration from_states(std::span<const StateId> states, std::size_t num_states,
                                     ProcessId first = 1);

    std::size_t size() const noexcept { return assignment_.size(); }
    std::size_t num_states() const noexcept { return counts_.size(); }
    const std::vector<std::pair<ProcessId, StateId>>& assignment() const noexcept { return assignment_; }
    const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }
    std::optional<StateId> state_of(ProcessId p) const;
    bool contains(ProcessId p) const { return state_of(p).has_value(); }
    std::vector<ProcessId> processes() const;

    bool operator==(const Configuration& other) const { return assignment_ == other.assignment_; }
    auto operator<=>(const Configuration& other) const { return assignment_ <=> other.assignment_; }

private:
    std::vector<std::pair<ProcessId, StateId>> assignment_;
    std::vector<std::uint32_t> counts_;
};

struct Move {
    ProcessId process = 0;
    EdgeId edge = 0;

    auto operator<=>(const Move&) const = default;
};

/// One step of a finite instance. For a rendezvous the moves are listed in
/// letter order a_1..a_k; for a broadcast every process moves, in id order.
struct GlobalTransition {
    Configuration src;
    Configuration dst;
    bool broadcast = false;
    std::vector<Move> moves;

    std::optional<EdgeId> edge_of(ProcessId p) const;
    std::vector<ProcessId> moved() const;
    bool operator==(const GlobalTransition&) const = default;
};

/// A finite path with an explicit start, so empty paths still know their processes.
struct Path {
    Configuration start;
    std::vector<GlobalTransition> steps;

    const Configuration& end() const { return steps.empty() ? start : steps.back().dst; }
    std::size_t broadcasts() const;
};

/// Builds the rendezvous step where moves[j] takes an edge labelled a_{j+1}.
/// Throws when the step is not enabled in `f`.
GlobalTransition make_rendezvous(const ProcessTemplate& t, const Configuration& f, std::vector<Move> moves);
/// `moves` must name one broadcast edge per process of `f`.
GlobalTransition make_broadcast(const ProcessTemplate& t, const Configuration& f, std::vector<Move> moves);
/// Rendezvous along `letter_edges` (one per letter, in order) moving the
/// lowest-numbered processes able to take them; nothing when some edge finds no free process.
std::optional<GlobalTransition> fire_lowest(const ProcessTemplate& t, const Configuration& f,
                                            std::span<const EdgeId> letter_edges);

/// Structural legality of a single step; `why` receives the reason on failure.
bool is_valid_step(const ProcessTemplate& t, const GlobalTransition& step, std::string* why = nullptr);
/// Every step legal and consecutive steps chained.
bool is_valid_path(const ProcessTemplate& t, const Path& path, std::string* why = nullptr);
bool is_initial(const ProcessTemplate& t, const Configuration& f);

struct SuccessorOptions {
    /// Hard cap on the number of transitions produced; exceeding it throws BudgetExceeded.
    std::size_t limit = 1u << 20;
};

std::vector<GlobalTransition> successors(const ProcessTemplate& t, const Configuration& f,
                                         SuccessorOptions options = {});

/// Edges taken by process `p` along the path, in order. Throws if `p` is not a process of the path.
std::vector<EdgeId> project_run(const Path& run, ProcessId p);

bool twins(const Configuration& f, const Configuration& g);
bool is_pseudo_cycle(const Path& path);

using Renaming = std::map<ProcessId, ProcessId>;

Configuration rename(const Configuration& f, const Renaming& r);
GlobalTransition rename(const GlobalTransition& t, const Renaming& r);
Path rename(const Path& path, const Renaming& r);

/// One entry of a composition schedule: the next step of a group, or a merged broadcast.
struct ScheduleEntry {
    static ScheduleEntry step(std::size_t group) { return ScheduleEntry{group}; }
    static ScheduleEntry broadcast() { return ScheduleEntry{}; }

    std::optional<std::size_t> group;
};

struct Composition {
    Path run;
    /// Per input run: original process id -> id in the composed run.
    std::vector<Renaming> renamings;
};

/// Runs the given paths side by side on disjoint groups of processes.
Composition compose_runs(const ProcessTemplate& t, std::span<const Path> runs,
                         std::span<const ScheduleEntry> schedule);
/// Interleaves the rendezvous steps of each segment one group at a time.
std::vector<ScheduleEntry> round_robin_schedule(std::span<const Path> runs);

/// Matches the processes of `from` onto twins in `to`, lowest ids first per state.
Renaming twin_matching(const Configuration& from, const Configuration& to);

/// Replays a pseudo-cycle forever, renaming processes between iterations.
class PseudoCyclePump {
public:
    explicit PseudoCyclePump(Path cycle);

    /// Next iteration, starting where the previous one ended.
    Path next();
    std::size_t iterations() const noexcept { return iteration_; }
    /// Renaming applied by one iteration: process i of the start plays the role of step(i) next time.
    const Renaming& step_renaming() const noexcept { return step_; }

private:
    Path cycle_;
    Renaming step_;
    Renaming current_;
    std::size_t iteration_ = 0;
};

/// `iterations` consecutive copies of the pseudo-cycle joined into one path.
Path pump_pseudo_cycle(const Path& cycle, std::size_t iterations);

}  // namespace rbcheck
