#include "rbcheck/unwinding.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rbcheck/error.hpp"

namespace rbcheck {

bool Component::contains(StateId s) const { return std::binary_search(states.begin(), states.end(), s); }

Component saturate(const ProcessTemplate& t, std::span<const StateId> init) {
    std::vector<bool> in_s(t.num_states(), false);
    std::vector<bool> in_r(t.num_edges(), false);
    for (StateId s : init) in_s.at(s) = true;

    auto action_enabled = [&](ActionId a) {
        for (std::uint32_t j = 1; j <= t.k(); ++j) {
            bool any = false;
            for (EdgeId e : t.letter_edges(Letter{a, j}))
                if (in_s[t.edge(e).src]) {
                    any = true;
                    break;
                }
            if (!any) return false;
        }
        return true;
    };

    for (bool changed = true; changed;) {
        changed = false;
        for (EdgeId e = 0; e < t.num_edges(); ++e) {
            const auto& edge = t.edge(e);
            if (in_r[e] || edge.is_broadcast() || !in_s[edge.src]) continue;
            if (!action_enabled(edge.label.letter().action)) continue;
            in_r[e] = true;
            in_s[edge.dst] = true;
            changed = true;
        }
    }

    Component c;
    c.init.assign(init.begin(), init.end());
    std::sort(c.init.begin(), c.init.end());
    c.init.erase(std::unique(c.init.begin(), c.init.end()), c.init.end());
    std::set<ActionId> actions;
    for (StateId s = 0; s < t.num_states(); ++s)
        if (in_s[s]) c.states.push_back(s);
    for (EdgeId e = 0; e < t.num_edges(); ++e)
        if (in_r[e]) {
            c.edges.push_back(e);
            actions.insert(t.edge(e).label.letter().action);
        }
    c.actions.assign(actions.begin(), actions.end());
    return c;
}

std::size_t Unwinding::comp(std::size_t broadcasts) const noexcept {
    if (broadcasts < n_) return broadcasts;
    return n_ + (broadcasts - n_) % r();
}

std::optional<std::size_t> Unwinding::find_edge(EdgeId base, std::size_t comp) const {
    auto it = edge_index_.find({base, comp});
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
}

std::string Unwinding::edge_id(std::size_t i) const {
    const auto& e = edges_.at(i);
    return base_.edge_name(e.base) + "@comp" + std::to_string(e.comp);
}

std::optional<std::size_t> Unwinding::find_edge(std::string_view id) const {
    const auto at = id.rfind("@comp");
    if (at == std::string_view::npos) return std::nullopt;
    auto base = base_.find_edge(id.substr(0, at));
    if (!base) return std::nullopt;
    std::size_t comp = 0;
    auto digits = id.substr(at + 5);
    if (digits.empty()) return std::nullopt;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        comp = comp * 10 + static_cast<std::size_t>(c - '0');
        if (comp > comps_.size()) return std::nullopt;
    }
    return find_edge(*base, comp);
}

std::optional<StateId> Unwinding::lifted_state(StateId s, std::size_t comp) const {
    auto it = state_index_.find({s, comp});
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
}

Unwinding build_unwinding(const ProcessTemplate& t) {
    if (auto diags = validate_template(t); !diags.empty()) {
        std::string msg = "template is not well formed:";
        for (const auto& d : diags) msg += " " + d.rule + " (" + d.location + ");";
        throw Error(msg);
    }
    Unwinding u;
    u.base_ = t;

    // Components are functions of their init sets, so the lasso closes at the
    // first init set seen before.
    std::map<std::vector<StateId>, std::size_t> seen;
    std::vector<StateId> init = t.initial_states();
    for (;;) {
        if (auto it = seen.find(init); it != seen.end()) {
            u.n_ = it->second;
            break;
        }
        seen.emplace(init, u.comps_.size());
        Component c = saturate(t, init);
        c.index = u.comps_.size();
        std::set<StateId> next;
        for (StateId s : c.states)
            for (EdgeId e : t.broadcast_edges_from(s)) next.insert(t.edge(e).dst);
        u.comps_.push_back(std::move(c));
        init.assign(next.begin(), next.end());
    }

    u.lifted_ = ProcessTemplate(t.k(), t.r_only());
    for (const auto& c : u.comps_)
        for (StateId s : c.states) {
            const bool initial = c.index == 0 && std::binary_search(c.init.begin(), c.init.end(), s);
            const StateId id = u.lifted_.add_state(t.state_name(s) + "@" + std::to_string(c.index), initial);
            u.state_info_.emplace_back(s, c.index);
            u.state_index_.emplace(std::make_pair(s, c.index), id);
        }
    for (const auto& c : u.comps_) {
        auto add = [&](EdgeId base, std::size_t dst_comp) {
            const auto& e = t.edge(base);
            UnwindingEdge ue{c.index, base, u.state_index_.at({e.src, c.index}), u.state_index_.at({e.dst, dst_comp}),
                             e.is_broadcast()};
            Label label = Label::broadcast();
            if (!e.is_broadcast()) {
                const auto& l = e.label.letter();
                label = Label::of(u.lifted_.add_action(t.action_name(l.action) + "@" + std::to_string(c.index)),
                                  l.index);
            }
            u.lifted_.add_edge(ue.src, label, ue.dst);
            u.edge_index_.emplace(std::make_pair(base, c.index), u.edges_.size());
            u.edges_.push_back(ue);
        };
        for (EdgeId e : c.edges) add(e, c.index);
        for (EdgeId e = 0; e < t.num_edges(); ++e)
            if (t.edge(e).is_broadcast() && c.contains(t.edge(e).src)) add(e, u.next(c.index));
    }
    return u;
}

Path lift_run(const Unwinding& u, const Path& run) {
    const auto& t = u.base();
    const auto& lt = u.as_template();
    auto lift_conf = [&](const Configuration& f, std::size_t comp) {
        std::vector<std::pair<ProcessId, StateId>> a;
        for (const auto& [p, s] : f.assignment()) {
            auto ls = u.lifted_state(s, comp);
            if (!ls)
                throw Error("state " + t.state_name(s) + " is not in component " + std::to_string(comp) +
                            " of the unwinding");
            a.emplace_back(p, *ls);
        }
        return Configuration(std::move(a), lt.num_states());
    };
    Path out{lift_conf(run.start, 0), {}};
    std::size_t broadcasts = 0;
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const auto& step = run.steps[i];
        const std::size_t comp = u.comp(broadcasts);
        std::vector<Move> moves;
        for (const auto& m : step.moves) {
            auto ue = u.find_edge(m.edge, comp);
            if (!ue)
                throw Error("step " + std::to_string(i) + ": edge " + t.edge_name(m.edge) + " is absent from component " +
                            std::to_string(comp));
            moves.push_back(Move{m.process, static_cast<EdgeId>(*ue)});
        }
        const Configuration src = out.end();
        out.steps.push_back(step.broadcast ? make_broadcast(lt, src, std::move(moves))
                                           : make_rendezvous(lt, src, std::move(moves)));
        if (step.broadcast) ++broadcasts;
    }
    return out;
}

Path project_circ(const Unwinding& u, const Path& path) {
    const auto& t = u.base();
    auto down = [&](const Configuration& f) {
        std::vector<std::pair<ProcessId, StateId>> a;
        for (const auto& [p, s] : f.assignment()) a.emplace_back(p, u.base_state(s));
        return Configuration(std::move(a), t.num_states());
    };
    Path out{down(path.start), {}};
    for (const auto& step : path.steps) {
        GlobalTransition g{down(step.src), down(step.dst), step.broadcast, {}};
        for (const auto& m : step.moves) g.moves.push_back(Move{m.process, u.edge(m.edge).base});
        out.steps.push_back(std::move(g));
    }
    return out;
}

bool Nfa::accepts(std::span<const EdgeId> word) const {
    std::vector<bool> cur = initial;
    for (EdgeId letter : word) {
        std::vector<bool> next(num_states, false);
        bool any = false;
        for (const auto& tr : transitions)
            if (tr.letter == letter && cur[tr.src]) {
                next[tr.dst] = true;
                any = true;
            }
        if (!any) return false;
        cur = std::move(next);
    }
    for (std::size_t s = 0; s < num_states; ++s)
        if (cur[s] && accepting[s]) return true;
    return false;
}

Nfa build_afin(const Unwinding& u) {
    const auto& lt = u.as_template();
    Nfa a;
    a.num_states = lt.num_states();
    a.initial.assign(a.num_states, false);
    a.accepting.assign(a.num_states, true);
    for (StateId s = 0; s < lt.num_states(); ++s) a.initial[s] = lt.is_initial(s);
    for (const auto& e : u.edges()) a.transitions.push_back({e.src, e.base, e.dst});
    return a;
}

nlohmann::json unwinding_json(const Unwinding& u) {
    const auto& t = u.base();
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : u.components()) {
        nlohmann::json init = nlohmann::json::array(), states = nlohmann::json::array(), edges = nlohmann::json::array();
        for (StateId s : c.init) init.push_back(t.state_name(s));
        for (StateId s : c.states) states.push_back(t.state_name(s));
        for (EdgeId e : c.edges) edges.push_back(u.edge_id(*u.find_edge(e, c.index)));
        comps.push_back({{"index", c.index}, {"init", init}, {"states", states}, {"edges", edges}});
    }
    nlohmann::json bcast = nlohmann::json::array();
    for (std::size_t i = 0; i < u.edges().size(); ++i)
        if (u.edge(i).broadcast) bcast.push_back(u.edge_id(i));
    return {{"n", u.n()}, {"m", u.m()}, {"r", u.r()}, {"components", comps}, {"broadcast_edges", bcast}};
}

std::string unwinding_dot(const Unwinding& u) {
    const auto& t = u.base();
    const auto& lt = u.as_template();
    std::ostringstream out;
    out << "digraph unwinding {\n";
    for (const auto& c : u.components()) {
        out << "  subgraph cluster_" << c.index << " {\n    label=\"P" << c.index << "\";\n";
        for (StateId s : c.states) {
            const StateId id = *u.lifted_state(s, c.index);
            out << "    \"" << lt.state_name(id) << "\" [label=\"" << t.state_name(s) << "\""
                << (lt.is_initial(id) ? ", shape=doublecircle" : "") << "];\n";
        }
        out << "  }\n";
    }
    for (const auto& e : u.edges()) {
        out << "  \"" << lt.state_name(e.src) << "\" -> \"" << lt.state_name(e.dst) << "\" [label=\""
            << t.label_name(t.edge(e.base).label) << "\"" << (e.broadcast ? ", style=dashed" : "") << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace rbcheck
