#include "rbcheck/model.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "rbcheck/error.hpp"

namespace rbcheck {

const Letter& Label::letter() const {
    if (!letter_) throw Error("broadcast label has no letter");
    return *letter_;
}

ProcessTemplate::ProcessTemplate(std::uint32_t k, bool r_only) : k_(k), r_only_(r_only) {}

StateId ProcessTemplate::add_state(std::string name, bool initial) {
    if (state_index_.count(name)) throw Error("duplicate state '" + name + "'");
    const auto id = static_cast<StateId>(states_.size());
    state_index_.emplace(name, id);
    states_.push_back(std::move(name));
    initial_.push_back(initial);
    out_.emplace_back();
    return id;
}

ActionId ProcessTemplate::add_action(std::string name) {
    if (auto it = action_index_.find(name); it != action_index_.end()) return it->second;
    const auto id = static_cast<ActionId>(actions_.size());
    action_index_.emplace(name, id);
    actions_.push_back(RendezvousAction{std::move(name)});
    return id;
}

EdgeId ProcessTemplate::add_edge(StateId src, Label label, StateId dst) {
    if (src >= states_.size() || dst >= states_.size()) throw Error("edge endpoint is not a declared state");
    if (!label.is_broadcast() && label.letter().action >= actions_.size())
        throw Error("edge label names an undeclared action");
    Edge edge{src, label, dst};
    if (edge_index_.count(edge))
        throw Error("duplicate edge " + states_[src] + " " + label_name(label) + " " + states_[dst]);
    const auto id = static_cast<EdgeId>(edges_.size());
    edges_.push_back(edge);
    edge_index_.emplace(edge, id);
    out_[src].push_back(id);
    return id;
}

std::optional<StateId> ProcessTemplate::find_state(std::string_view name) const {
    if (auto it = state_index_.find(std::string(name)); it != state_index_.end()) return it->second;
    return std::nullopt;
}

std::vector<StateId> ProcessTemplate::initial_states() const {
    std::vector<StateId> result;
    for (StateId s = 0; s < states_.size(); ++s)
        if (initial_[s]) result.push_back(s);
    return result;
}

std::optional<ActionId> ProcessTemplate::find_action(std::string_view name) const {
    if (auto it = action_index_.find(std::string(name)); it != action_index_.end()) return it->second;
    return std::nullopt;
}

std::vector<EdgeId> ProcessTemplate::broadcast_edges_from(StateId s) const {
    std::vector<EdgeId> result;
    for (EdgeId e : out_.at(s))
        if (edges_[e].is_broadcast()) result.push_back(e);
    return result;
}

std::vector<EdgeId> ProcessTemplate::letter_edges(Letter letter) const {
    std::vector<EdgeId> result;
    for (EdgeId e = 0; e < edges_.size(); ++e)
        if (!edges_[e].is_broadcast() && edges_[e].label.letter() == letter) result.push_back(e);
    return result;
}

std::optional<EdgeId> ProcessTemplate::find_edge(const Edge& edge) const {
    if (auto it = edge_index_.find(edge); it != edge_index_.end()) return it->second;
    return std::nullopt;
}

std::string ProcessTemplate::label_name(const Label& label) const {
    if (label.is_broadcast()) return "b";
    const auto& l = label.letter();
    return actions_.at(l.action).name + "." + std::to_string(l.index);
}

std::string ProcessTemplate::edge_name(EdgeId e) const {
    const auto& edge = edges_.at(e);
    return states_[edge.src] + ":" + label_name(edge.label) + ":" + states_[edge.dst];
}

std::optional<Label> ProcessTemplate::parse_label(std::string_view text) const {
    if (text == "b") return Label::broadcast();
    const auto dot = text.rfind('.');
    if (dot == std::string_view::npos || dot + 1 >= text.size()) return std::nullopt;
    auto action = find_action(text.substr(0, dot));
    if (!action) return std::nullopt;
    std::uint32_t index = 0;
    for (char c : text.substr(dot + 1)) {
        if (c < '0' || c > '9') return std::nullopt;
        index = index * 10 + static_cast<std::uint32_t>(c - '0');
        if (index > 1'000'000) return std::nullopt;
    }
    if (index < 1 || index > k_) return std::nullopt;
    return Label::of(*action, index);
}

std::optional<EdgeId> ProcessTemplate::find_edge(std::string_view id) const {
    const auto first = id.find(':');
    const auto last = id.rfind(':');
    if (first == std::string_view::npos || first == last) return std::nullopt;
    auto src = find_state(id.substr(0, first));
    auto dst = find_state(id.substr(last + 1));
    auto label = parse_label(id.substr(first + 1, last - first - 1));
    if (!src || !dst || !label) return std::nullopt;
    return find_edge(Edge{*src, *label, *dst});
}

std::vector<Diagnostic> validate_template(const ProcessTemplate& t, ValidateOptions options) {
    std::vector<Diagnostic> out;
    if (t.k() < 2) out.push_back({"arity must be at least 2", "k " + std::to_string(t.k())});
    if (t.num_states() == 0) out.push_back({"no states declared", "template"});
    if (t.initial_states().empty()) out.push_back({"no initial state", "template"});

    std::map<Letter, std::vector<EdgeId>> by_letter;
    for (EdgeId e = 0; e < t.num_edges(); ++e) {
        const auto& edge = t.edge(e);
        if (edge.src >= t.num_states() || edge.dst >= t.num_states())
            out.push_back({"edge endpoint not declared", "edge " + std::to_string(e)});
        if (edge.is_broadcast()) {
            if (t.r_only()) out.push_back({"broadcast edge in r_only template", "edge " + t.edge_name(e)});
            continue;
        }
        const auto& l = edge.label.letter();
        if (l.index < 1 || l.index > t.k())
            out.push_back({"letter index out of range", "edge " + t.edge_name(e)});
        by_letter[l].push_back(e);
    }
    if (!t.r_only()) {
        for (StateId s = 0; s < t.num_states(); ++s)
            if (t.broadcast_edges_from(s).empty())
                out.push_back({"missing broadcast edge", "state " + t.state_name(s)});
    }
    if (options.require_unique_letters) {
        for (const auto& [letter, edges] : by_letter)
            if (edges.size() > 1)
                out.push_back({"letter labels more than one edge",
                               "letter " + t.label_name(Label::of(letter))});
    }
    return out;
}

Configuration::Configuration(std::vector<std::pair<ProcessId, StateId>> assignment, std::size_t num_states)
    : assignment_(std::move(assignment)), counts_(num_states, 0) {
    if (assignment_.empty()) throw Error("configuration needs at least one process");
    std::sort(assignment_.begin(), assignment_.end());
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        if (i > 0 && assignment_[i].first == assignment_[i - 1].first)
            throw Error("process " + std::to_string(assignment_[i].first) + " assigned twice");
        if (assignment_[i].second >= num_states) throw Error("configuration refers to an unknown state");
        ++counts_[assignment_[i].second];
    }
}

Configuration Configuration::from_states(std::span<const StateId> states, std::size_t num_states, ProcessId first) {
    std::vector<std::pair<ProcessId, StateId>> a;
    a.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) a.emplace_back(first + static_cast<ProcessId>(i), states[i]);
    return Configuration(std::move(a), num_states);
}

std::optional<StateId> Configuration::state_of(ProcessId p) const {
    auto it = std::lower_bound(assignment_.begin(), assignment_.end(), std::make_pair(p, StateId{0}));
    if (it == assignment_.end() || it->first != p) return std::nullopt;
    return it->second;
}

std::vector<ProcessId> Configuration::processes() const {
    std::vector<ProcessId> out;
    out.reserve(assignment_.size());
    for (const auto& [p, s] : assignment_) out.push_back(p);
    return out;
}

std::optional<EdgeId> GlobalTransition::edge_of(ProcessId p) const {
    for (const auto& m : moves)
        if (m.process == p) return m.edge;
    return std::nullopt;
}

std::vector<ProcessId> GlobalTransition::moved() const {
    std::vector<ProcessId> out;
    for (const auto& m : moves) out.push_back(m.process);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Path::broadcasts() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const GlobalTransition& s) { return s.broadcast; }));
}

namespace {

Configuration apply_moves(const ProcessTemplate& t, const Configuration& f, const std::vector<Move>& moves) {
    auto a = f.assignment();
    for (const auto& m : moves) {
        auto it = std::lower_bound(a.begin(), a.end(), std::make_pair(m.process, StateId{0}));
        it->second = t.edge(m.edge).dst;
    }
    return Configuration(std::move(a), t.num_states());
}

}  // namespace

bool is_valid_step(const ProcessTemplate& t, const GlobalTransition& step, std::string* why) {
    auto fail = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    const auto& f = step.src;
    std::set<ProcessId> seen;
    for (const auto& m : step.moves) {
        if (m.edge >= t.num_edges()) return fail("unknown edge");
        auto s = f.state_of(m.process);
        if (!s) return fail("process " + std::to_string(m.process) + " not in configuration");
        if (!seen.insert(m.process).second) return fail("process moves twice");
        if (t.edge(m.edge).src != *s) return fail("edge " + t.edge_name(m.edge) + " not enabled for process");
    }
    if (step.broadcast) {
        if (step.moves.size() != f.size()) return fail("broadcast must move every process");
        for (const auto& m : step.moves)
            if (!t.edge(m.edge).is_broadcast()) return fail("broadcast step uses a rendezvous edge");
    } else {
        if (step.moves.size() != t.k()) return fail("rendezvous must move exactly k processes");
        const auto& first = t.edge(step.moves[0].edge);
        if (first.is_broadcast()) return fail("rendezvous step uses a broadcast edge");
        const ActionId action = first.label.letter().action;
        for (std::size_t j = 0; j < step.moves.size(); ++j) {
            const auto& e = t.edge(step.moves[j].edge);
            if (e.is_broadcast() || e.label.letter() != Letter{action, static_cast<std::uint32_t>(j + 1)})
                return fail("rendezvous letters do not spell one action in order");
        }
    }
    if (apply_moves(t, f, step.moves) != step.dst) return fail("destination configuration mismatch");
    return true;
}

bool is_valid_path(const ProcessTemplate& t, const Path& path, std::string* why) {
    const Configuration* current = &path.start;
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        const auto& step = path.steps[i];
        if (step.src != *current) {
            if (why) *why = "step " + std::to_string(i) + " does not start where the previous ended";
            return false;
        }
        std::string reason;
        if (!is_valid_step(t, step, &reason)) {
            if (why) *why = "step " + std::to_string(i) + ": " + reason;
            return false;
        }
        current = &step.dst;
    }
    return true;
}

bool is_initial(const ProcessTemplate& t, const Configuration& f) {
    return std::all_of(f.assignment().begin(), f.assignment().end(),
                       [&](const auto& ps) { return t.is_initial(ps.second); });
}

GlobalTransition make_rendezvous(const ProcessTemplate& t, const Configuration& f, std::vector<Move> moves) {
    GlobalTransition step{f, f, false, std::move(moves)};
    std::string why;
    for (const auto& m : step.moves)
        if (m.edge >= t.num_edges() || !f.contains(m.process)) throw Error("rendezvous refers to unknown edge or process");
    step.dst = apply_moves(t, f, step.moves);
    if (!is_valid_step(t, step, &why)) throw Error("invalid rendezvous: " + why);
    return step;
}

GlobalTransition make_broadcast(const ProcessTemplate& t, const Configuration& f, std::vector<Move> moves) {
    std::sort(moves.begin(), moves.end());
    GlobalTransition step{f, f, true, std::move(moves)};
    for (const auto& m : step.moves)
        if (m.edge >= t.num_edges() || !f.contains(m.process)) throw Error("broadcast refers to unknown edge or process");
    step.dst = apply_moves(t, f, step.moves);
    std::string why;
    if (!is_valid_step(t, step, &why)) throw Error("invalid broadcast: " + why);
    return step;
}

std::optional<GlobalTransition> fire_lowest(const ProcessTemplate& t, const Configuration& f,
                                            std::span<const EdgeId> letter_edges) {
    std::vector<Move> moves;
    std::set<ProcessId> used;
    for (EdgeId e : letter_edges) {
        const StateId src = t.edge(e).src;
        bool found = false;
        for (const auto& [p, s] : f.assignment())
            if (s == src && !used.count(p)) {
                used.insert(p);
                moves.push_back(Move{p, e});
                found = true;
                break;
            }
        if (!found) return std::nullopt;
    }
    return make_rendezvous(t, f, std::move(moves));
}

std::vector<GlobalTransition> successors(const ProcessTemplate& t, const Configuration& f, SuccessorOptions options) {
    std::vector<GlobalTransition> out;
    auto push = [&](GlobalTransition step) {
        if (out.size() >= options.limit)
            throw BudgetExceeded("successor enumeration exceeded limit " + std::to_string(options.limit));
        out.push_back(std::move(step));
    };
    const auto& a = f.assignment();
    const std::size_t n = a.size();
    const std::uint32_t k = t.k();

    // Rendezvous: per action, choose k distinct processes and one edge per letter.
    for (ActionId action = 0; action < t.num_actions(); ++action) {
        std::vector<std::vector<EdgeId>> per_letter(k);
        bool possible = true;
        for (std::uint32_t j = 0; j < k; ++j) {
            per_letter[j] = t.letter_edges(Letter{action, j + 1});
            if (per_letter[j].empty()) possible = false;
        }
        if (!possible || n < k) continue;

        std::vector<std::size_t> chosen(k);
        std::vector<bool> used(n, false);
        std::vector<Move> moves(k);
        auto recurse = [&](auto&& self, std::uint32_t j) -> void {
            if (j == k) {
                Configuration dst = apply_moves(t, f, moves);
                push(GlobalTransition{f, std::move(dst), false, moves});
                return;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (used[i]) continue;
                for (EdgeId e : per_letter[j]) {
                    if (t.edge(e).src != a[i].second) continue;
                    used[i] = true;
                    moves[j] = Move{a[i].first, e};
                    self(self, j + 1);
                    used[i] = false;
                }
            }
        };
        recurse(recurse, 0);
    }

    // Broadcast: every process picks one of its broadcast edges.
    std::vector<std::vector<EdgeId>> options_per(n);
    for (std::size_t i = 0; i < n; ++i) {
        options_per[i] = t.broadcast_edges_from(a[i].second);
        if (options_per[i].empty()) return out;
    }
    std::vector<std::size_t> pick(n, 0);
    while (true) {
        std::vector<Move> moves(n);
        for (std::size_t i = 0; i < n; ++i) moves[i] = Move{a[i].first, options_per[i][pick[i]]};
        Configuration dst = apply_moves(t, f, moves);
        push(GlobalTransition{f, std::move(dst), true, std::move(moves)});
        std::size_t i = 0;
        while (i < n && ++pick[i] == options_per[i].size()) pick[i++] = 0;
        if (i == n) break;
    }
    return out;
}

std::vector<EdgeId> project_run(const Path& run, ProcessId p) {
    if (!run.start.contains(p)) throw Error("process " + std::to_string(p) + " is not part of the run");
    std::vector<EdgeId> out;
    for (const auto& step : run.steps)
        if (auto e = step.edge_of(p)) out.push_back(*e);
    return out;
}

bool twins(const Configuration& f, const Configuration& g) { return f.counts() == g.counts(); }

bool is_pseudo_cycle(const Path& path) {
    if (path.steps.empty()) return false;
    return twins(path.steps.front().src, path.steps.back().dst);
}

namespace {

ProcessId renamed(const Renaming& r, ProcessId p) {
    auto it = r.find(p);
    if (it == r.end()) throw Error("renaming does not cover process " + std::to_string(p));
    return it->second;
}

}  // namespace

Configuration rename(const Configuration& f, const Renaming& r) {
    std::vector<std::pair<ProcessId, StateId>> a;
    a.reserve(f.size());
    for (const auto& [p, s] : f.assignment()) a.emplace_back(renamed(r, p), s);
    return Configuration(std::move(a), f.num_states());
}

GlobalTransition rename(const GlobalTransition& t, const Renaming& r) {
    GlobalTransition out{rename(t.src, r), rename(t.dst, r), t.broadcast, t.moves};
    for (auto& m : out.moves) m.process = renamed(r, m.process);
    if (out.broadcast) std::sort(out.moves.begin(), out.moves.end());
    return out;
}

Path rename(const Path& path, const Renaming& r) {
    Path out{rename(path.start, r), {}};
    out.steps.reserve(path.steps.size());
    for (const auto& s : path.steps) out.steps.push_back(rename(s, r));
    return out;
}

Composition compose_runs(const ProcessTemplate& t, std::span<const Path> runs, std::span<const ScheduleEntry> schedule) {
    if (runs.empty()) throw Error("nothing to compose");
    const std::size_t broadcasts = runs[0].broadcasts();
    for (const auto& r : runs)
        if (r.broadcasts() != broadcasts) throw Error("composed runs must have equal broadcast counts");

    Composition out;
    std::vector<Path> groups;
    ProcessId next = 1;
    for (const auto& r : runs) {
        Renaming ren;
        for (ProcessId p : r.start.processes()) ren.emplace(p, next++);
        groups.push_back(rename(r, ren));
        out.renamings.push_back(std::move(ren));
    }

    std::vector<std::pair<ProcessId, StateId>> start;
    for (const auto& g : groups)
        for (const auto& ps : g.start.assignment()) start.push_back(ps);
    out.run.start = Configuration(std::move(start), t.num_states());

    std::vector<std::size_t> cursor(groups.size(), 0);
    auto current = out.run.start;
    for (const auto& entry : schedule) {
        if (entry.group) {
            const std::size_t g = *entry.group;
            if (g >= groups.size()) throw Error("schedule names an unknown group");
            if (cursor[g] >= groups[g].steps.size()) throw Error("schedule runs past the end of a group");
            const auto& step = groups[g].steps[cursor[g]];
            if (step.broadcast) throw Error("schedule crosses a broadcast barrier");
            auto merged = make_rendezvous(t, current, step.moves);
            current = merged.dst;
            out.run.steps.push_back(std::move(merged));
            ++cursor[g];
        } else {
            std::vector<Move> moves;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                if (cursor[g] >= groups[g].steps.size() || !groups[g].steps[cursor[g]].broadcast)
                    throw Error("broadcast scheduled before every group finished its segment");
                const auto& step = groups[g].steps[cursor[g]];
                moves.insert(moves.end(), step.moves.begin(), step.moves.end());
                ++cursor[g];
            }
            auto merged = make_broadcast(t, current, std::move(moves));
            current = merged.dst;
            out.run.steps.push_back(std::move(merged));
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (cursor[g] != groups[g].steps.size()) throw Error("schedule leaves steps of a group unused");
    return out;
}

std::vector<ScheduleEntry> round_robin_schedule(std::span<const Path> runs) {
    std::vector<ScheduleEntry> out;
    std::vector<std::size_t> cursor(runs.size(), 0);
    while (true) {
        bool progressed = true;
        while (progressed) {
            progressed = false;
            for (std::size_t g = 0; g < runs.size(); ++g) {
                const auto& steps = runs[g].steps;
                if (cursor[g] < steps.size() && !steps[cursor[g]].broadcast) {
                    out.push_back(ScheduleEntry::step(g));
                    ++cursor[g];
                    progressed = true;
                }
            }
        }
        bool any_left = false;
        for (std::size_t g = 0; g < runs.size(); ++g) any_left = any_left || cursor[g] < runs[g].steps.size();
        if (!any_left) break;
        out.push_back(ScheduleEntry::broadcast());
        for (std::size_t g = 0; g < runs.size(); ++g)
            if (cursor[g] < runs[g].steps.size()) ++cursor[g];
    }
    return out;
}

Renaming twin_matching(const Configuration& from, const Configuration& to) {
    if (!twins(from, to)) throw Error("configurations are not twins");
    std::vector<std::vector<ProcessId>> pool(to.num_states());
    for (const auto& [p, s] : to.assignment()) pool[s].push_back(p);
    std::vector<std::size_t> used(to.num_states(), 0);
    Renaming r;
    for (const auto& [p, s] : from.assignment()) r.emplace(p, pool[s][used[s]++]);
    return r;
}

PseudoCyclePump::PseudoCyclePump(Path cycle) : cycle_(std::move(cycle)) {
    if (!is_pseudo_cycle(cycle_)) throw Error("path is not a pseudo-cycle");
    step_ = twin_matching(cycle_.start, cycle_.end());
    for (ProcessId p : cycle_.start.processes()) current_.emplace(p, p);
}

Path PseudoCyclePump::next() {
    Path out = rename(cycle_, current_);
    Renaming composed;
    for (const auto& [p, q] : current_) composed.emplace(p, step_.at(q));
    current_ = std::move(composed);
    ++iteration_;
    return out;
}

Path pump_pseudo_cycle(const Path& cycle, std::size_t iterations) {
    PseudoCyclePump pump(cycle);
    Path out{cycle.start, {}};
    for (std::size_t i = 0; i < iterations; ++i) {
        auto it = pump.next();
        for (auto& s : it.steps) out.steps.push_back(std::move(s));
    }
    return out;
}

}  // namespace rbcheck
