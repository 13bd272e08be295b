#include "rbcheck/classifier.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "rbcheck/error.hpp"

namespace rbcheck {

std::string_view color_name(EdgeColor c) {
    switch (c) {
        case EdgeColor::Red: return "red";
        case EdgeColor::Blue: return "blue";
        case EdgeColor::Green: return "green";
        case EdgeColor::Orange: return "orange";
    }
    return "?";
}

namespace {

ActionId action_of(const ProcessTemplate& t, EdgeId e) { return t.edge(e).label.letter().action; }

struct ComponentActions {
    std::vector<ActionId> actions;
    std::vector<ActionEffect> effects;
};

ComponentActions component_actions(const Unwinding& u, std::size_t comp) {
    const auto& c = u.component(comp);
    ComponentActions out;
    for (ActionId a : c.actions) {
        out.actions.push_back(a);
        out.effects.push_back(action_effect(u.base(), a, c.edges));
    }
    return out;
}

std::string seg_name(const char* kind, std::size_t j, const std::string& what) {
    return std::string(kind) + std::to_string(j) + "_" + what;
}

void add_actions(const ProcessTemplate& t, SegmentedSystem& sys, SegmentedSystem::Segment& seg,
                 const ComponentActions& ca, const std::string& prefix) {
    for (std::size_t i = 0; i < ca.actions.size(); ++i) {
        seg.y.emplace_back(ca.actions[i], sys.lp.add_variable(prefix + t.action_name(ca.actions[i])));
        seg.letters.push_back(ca.effects[i].letter_edges);
        std::vector<StateId> src, dst;
        for (EdgeId e : ca.effects[i].letter_edges) {
            src.push_back(t.edge(e).src);
            dst.push_back(t.edge(e).dst);
        }
        seg.letter_src.push_back(std::move(src));
        seg.letter_dst.push_back(std::move(dst));
    }
}

// States reachable from `start` by actions with support whose every letter
// source is already reached. `forward` false runs the same closure with edges reversed.
std::vector<bool> activatable(const SegmentedSystem::Segment& seg, const std::vector<bool>& support,
                              std::set<StateId> active, bool forward) {
    std::vector<bool> fired(seg.y.size(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < seg.y.size(); ++i) {
            if (fired[i] || !support[seg.y[i].second]) continue;
            const auto& need = forward ? seg.letter_src[i] : seg.letter_dst[i];
            const auto& gain = forward ? seg.letter_dst[i] : seg.letter_src[i];
            if (!std::all_of(need.begin(), need.end(), [&](StateId s) { return active.count(s) > 0; })) continue;
            fired[i] = true;
            active.insert(gain.begin(), gain.end());
            changed = true;
        }
    }
    return fired;
}

}  // namespace

std::optional<VarId> SegmentedSystem::var_for_edge(const Unwinding& u, std::size_t e) const {
    const auto& edge = u.edge(e);
    for (const auto& seg : segments) {
        if (seg.comp != edge.comp) continue;
        if (edge.broadcast) {
            for (const auto& [ue, var] : seg.z)
                if (ue == e) return var;
        } else {
            const ActionId a = action_of(u.base(), edge.base);
            for (const auto& [act, var] : seg.y)
                if (act == a) return var;
        }
    }
    return std::nullopt;
}

SegmentedSystem build_t1_system(const Unwinding& u, std::size_t comp) {
    const auto& t = u.base();
    const auto& c = u.component(comp);
    auto ca = component_actions(u, comp);
    SegmentedSystem sys;
    SegmentedSystem::Segment seg;
    seg.comp = comp;
    add_actions(t, sys, seg, ca, "y_");
    for (StateId s : c.states) {
        std::vector<Term> terms;
        for (std::size_t i = 0; i < ca.actions.size(); ++i)
            if (ca.effects[i].delta[s] != 0) terms.push_back({seg.y[i].second, Rational(ca.effects[i].delta[s])});
        sys.lp.add_equality(std::move(terms), 0, "bal_" + t.state_name(s));
    }
    sys.segments.push_back(std::move(seg));
    return sys;
}

SegmentedSystem build_t2_system(const Unwinding& u) {
    const auto& t = u.base();
    SegmentedSystem sys;
    std::vector<ComponentActions> cas;
    for (std::size_t j = 0; j < u.r(); ++j) {
        const std::size_t comp = u.n() + j;
        const auto& c = u.component(comp);
        cas.push_back(component_actions(u, comp));
        SegmentedSystem::Segment seg;
        seg.comp = comp;
        for (StateId s : c.states) seg.v.emplace_back(s, sys.lp.add_variable(seg_name("v", j, t.state_name(s))));
        add_actions(t, sys, seg, cas[j], "y" + std::to_string(j) + "_");
        for (std::size_t e = 0; e < u.edges().size(); ++e)
            if (u.edge(e).broadcast && u.edge(e).comp == comp) {
                seg.z.emplace_back(e, sys.lp.add_variable(seg_name("z", j, u.edge_id(e))));
                seg.z_src.push_back(t.edge(u.edge(e).base).src);
            }
        sys.segments.push_back(std::move(seg));
    }
    for (std::size_t j = 0; j < u.r(); ++j) {
        const auto& seg = sys.segments[j];
        // every process present at the end of the segment takes one broadcast edge
        for (std::size_t si = 0; si < seg.v.size(); ++si) {
            const StateId s = seg.v[si].first;
            std::vector<Term> terms;
            for (std::size_t zi = 0; zi < seg.z.size(); ++zi)
                if (seg.z_src[zi] == s) terms.push_back({seg.z[zi].second, 1});
            terms.push_back({seg.v[si].second, -1});
            for (std::size_t i = 0; i < seg.y.size(); ++i)
                if (cas[j].effects[i].delta[s] != 0)
                    terms.push_back({seg.y[i].second, Rational(-cas[j].effects[i].delta[s])});
            sys.lp.add_equality(std::move(terms), 0, seg_name("out", j, t.state_name(s)));
        }
        // the broadcast flows are the start counts of the next segment
        const std::size_t jn = (j + 1) % u.r();
        for (const auto& [s, var] : sys.segments[jn].v) {
            std::vector<Term> terms{{var, 1}};
            for (const auto& [e, zv] : seg.z)
                if (t.edge(u.edge(e).base).dst == s) terms.push_back({zv, -1});
            sys.lp.add_equality(std::move(terms), 0, seg_name("in", jn, t.state_name(s)));
        }
    }
    return sys;
}

std::optional<SupportSolution> prune_support(SegmentedSystem& sys) {
    for (;;) {
        auto ms = max_support_solution(sys.lp);
        if (!ms) return std::nullopt;
        bool pinned = false;
        for (const auto& seg : sys.segments) {
            // segments without start counts (the broadcast-free shape) are not pruned
            if (seg.v.empty() && seg.z.empty()) continue;
            std::set<StateId> start, end;
            for (const auto& [s, var] : seg.v)
                if (ms->support[var]) start.insert(s);
            for (std::size_t zi = 0; zi < seg.z.size(); ++zi)
                if (ms->support[seg.z[zi].second]) end.insert(seg.z_src[zi]);
            auto fwd = activatable(seg, ms->support, start, true);
            auto bwd = activatable(seg, ms->support, end, false);
            for (std::size_t i = 0; i < seg.y.size(); ++i) {
                const VarId var = seg.y[i].second;
                if (ms->support[var] && !(fwd[i] && bwd[i])) {
                    sys.lp.pin_zero(var);
                    pinned = true;
                }
            }
        }
        if (!pinned) return ms;
    }
}

namespace {

CycleWitness make_witness(const Unwinding& u, const SegmentedSystem& sys, const Solution& x, std::size_t target,
                          CycleWitness::Kind kind) {
    CycleWitness w{kind, target, {}};
    for (const auto& seg : sys.segments) {
        WitnessSegment ws{seg.comp, {}, {}, {}};
        for (const auto& [s, var] : seg.v)
            if (sgn(x[var]) != 0) ws.v.emplace_back(s, x[var]);
        for (const auto& [a, var] : seg.y)
            if (sgn(x[var]) != 0) ws.y.emplace_back(a, x[var]);
        for (const auto& [e, var] : seg.z)
            if (sgn(x[var]) != 0) ws.z.emplace_back(e, x[var]);
        w.segments.push_back(std::move(ws));
    }
    std::string why;
    if (!witness_valid(u, w, &why)) throw Error("internal: invalid cycle witness for " + u.edge_id(target) + ": " + why);
    return w;
}

// Homogeneous solutions may be scaled; bring the target variable up to 1.
Solution lift_target(Solution x, VarId target) {
    if (x[target] < 1) {
        const Rational f = 1 / x[target];
        for (auto& q : x) q *= f;
    }
    return x;
}

void require_strict(const Unwinding& u) {
    auto diags = validate_template(u.base(), {.require_unique_letters = true});
    for (const auto& d : diags)
        if (d.rule == "letter labels more than one edge")
            throw Error("classification needs one edge per letter; " + d.location + " labels several");
}

}  // namespace

std::optional<CycleWitness> t1_witness(const Unwinding& u, std::size_t e) {
    const auto& edge = u.edge(e);
    if (edge.broadcast) throw Error("T1 is undefined for broadcast edge " + u.edge_id(e));
    auto sys = build_t1_system(u, edge.comp);
    const VarId var = sys.var_for_edge(u, e).value();
    sys.lp.require_at_least_one(var);
    auto x = lp_feasible(sys.lp);
    if (!x) return std::nullopt;
    return make_witness(u, sys, *x, e, CycleWitness::Kind::T1);
}

std::optional<CycleWitness> t2_witness(const Unwinding& u, std::size_t e) {
    const auto& edge = u.edge(e);
    if (!u.in_loop(edge.comp)) return std::nullopt;
    auto sys = build_t2_system(u);
    auto var = sys.var_for_edge(u, e);
    if (!var) return std::nullopt;
    sys.lp.require_at_least_one(*var);
    auto ms = prune_support(sys);
    if (!ms) return std::nullopt;
    return make_witness(u, sys, ms->solution, e, CycleWitness::Kind::T2);
}

bool witness_valid(const Unwinding& u, const CycleWitness& w, std::string* why) {
    auto fail = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    const auto& t = u.base();
    if (w.target >= u.edges().size()) return fail("unknown target edge");
    const auto& te = u.edge(w.target);
    std::vector<std::vector<Rational>> delta_cache;

    // returns the per-state net effect of the segment's actions, or nothing on a bad action
    auto net_effect = [&](const WitnessSegment& seg, std::vector<Rational>& net) -> bool {
        const auto& c = u.component(seg.comp);
        net.assign(t.num_states(), 0);
        for (const auto& [a, y] : seg.y) {
            if (sgn(y) < 0) return false;
            if (std::find(c.actions.begin(), c.actions.end(), a) == c.actions.end()) return false;
            auto eff = action_effect(t, a, c.edges);
            for (StateId s = 0; s < t.num_states(); ++s) net[s] += y * eff.delta[s];
        }
        return true;
    };
    auto y_of = [](const WitnessSegment& seg, ActionId a) {
        for (const auto& [b, y] : seg.y)
            if (a == b) return y;
        return Rational(0);
    };

    std::vector<Rational> net;
    if (w.kind == CycleWitness::Kind::T1) {
        if (w.segments.size() != 1) return fail("T1 witness must have one segment");
        const auto& seg = w.segments[0];
        if (te.broadcast || seg.comp != te.comp) return fail("T1 target must be a rendezvous edge of the segment");
        if (!seg.v.empty() || !seg.z.empty()) return fail("T1 witness carries start counts or flows");
        if (!net_effect(seg, net)) return fail("T1 witness uses a foreign or negative action");
        for (StateId s = 0; s < t.num_states(); ++s)
            if (sgn(net[s]) != 0) return fail("nonzero net effect at " + t.state_name(s));
        if (y_of(seg, action_of(t, te.base)) < 1) return fail("target multiplicity below 1");
        return true;
    }

    if (w.segments.size() != u.r()) return fail("T2 witness needs one segment per loop component");
    bool target_hit = false;
    for (std::size_t j = 0; j < u.r(); ++j) {
        const auto& seg = w.segments[j];
        if (seg.comp != u.n() + j) return fail("segment " + std::to_string(j) + " has the wrong component");
        const auto& c = u.component(seg.comp);
        if (!net_effect(seg, net)) return fail("segment uses a foreign or negative action");
        std::vector<Rational> v(t.num_states(), 0), out(t.num_states(), 0), in_next(t.num_states(), 0);
        for (const auto& [s, x] : seg.v) {
            if (sgn(x) < 0 || !c.contains(s)) return fail("bad start count");
            v[s] += x;
        }
        for (const auto& [e, x] : seg.z) {
            if (e >= u.edges().size() || !u.edge(e).broadcast || u.edge(e).comp != seg.comp || sgn(x) < 0)
                return fail("bad broadcast flow");
            out[t.edge(u.edge(e).base).src] += x;
            in_next[t.edge(u.edge(e).base).dst] += x;
            if (e == w.target && x >= 1) target_hit = true;
        }
        for (StateId s = 0; s < t.num_states(); ++s)
            if (v[s] + net[s] != out[s]) return fail("segment " + std::to_string(j) + " leaves processes behind at " + t.state_name(s));
        std::vector<Rational> vn(t.num_states(), 0);
        for (const auto& [s, x] : w.segments[(j + 1) % u.r()].v) vn[s] += x;
        if (vn != in_next) return fail("flows of segment " + std::to_string(j) + " do not match the next start");
        if (!te.broadcast && seg.comp == te.comp && y_of(seg, action_of(t, te.base)) >= 1) target_hit = true;
    }
    if (!target_hit) return fail("target multiplicity below 1");
    return true;
}

Classification classify(const Unwinding& u, const ClassifyOptions& options) {
    require_strict(u);
    std::vector<std::size_t> edges = options.only;
    if (edges.empty())
        for (std::size_t e = 0; e < u.edges().size(); ++e) edges.push_back(e);
    for (auto e : edges)
        if (e >= u.edges().size()) throw Error("unknown unwinding edge " + std::to_string(e));

    std::vector<EdgeClass> results(edges.size());
    if (options.per_edge) {
        detail::parallel_for(edges.size(), options.jobs, [&](std::size_t i) {
            const auto e = edges[i];
            auto& r = results[i];
            if (!u.edge(e).broadcast) r.w1 = t1_witness(u, e);
            r.w2 = t2_witness(u, e);
        });
    } else {
        // One maximum-support solution per system answers every edge at once:
        // the target bound only removes solutions whose target is zero.
        std::set<std::size_t> comps;
        for (auto e : edges)
            if (!u.edge(e).broadcast) comps.insert(u.edge(e).comp);
        std::vector<std::size_t> comp_list(comps.begin(), comps.end());
        std::vector<std::optional<std::pair<SegmentedSystem, SupportSolution>>> t1(comp_list.size());
        std::optional<std::pair<SegmentedSystem, SupportSolution>> t2;
        detail::parallel_for(comp_list.size() + 1, options.jobs, [&](std::size_t i) {
            if (i == comp_list.size()) {
                auto sys = build_t2_system(u);
                if (auto ms = prune_support(sys)) t2.emplace(std::move(sys), std::move(*ms));
                return;
            }
            auto sys = build_t1_system(u, comp_list[i]);
            if (auto ms = max_support_solution(sys.lp)) t1[i].emplace(std::move(sys), std::move(*ms));
        });
        detail::parallel_for(edges.size(), options.jobs, [&](std::size_t i) {
            const auto e = edges[i];
            auto& r = results[i];
            if (!u.edge(e).broadcast) {
                const auto ci = static_cast<std::size_t>(std::find(comp_list.begin(), comp_list.end(), u.edge(e).comp) -
                                                         comp_list.begin());
                if (const auto& s = t1[ci]) {
                    const VarId var = s->first.var_for_edge(u, e).value();
                    if (s->second.support[var])
                        r.w1 = make_witness(u, s->first, lift_target(s->second.solution, var), e, CycleWitness::Kind::T1);
                }
            }
            if (t2 && u.in_loop(u.edge(e).comp)) {
                if (auto var = t2->first.var_for_edge(u, e); var && t2->second.support[*var])
                    r.w2 = make_witness(u, t2->first, lift_target(t2->second.solution, *var), e, CycleWitness::Kind::T2);
            }
        });
    }

    Classification out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto& r = results[i];
        r.t1 = r.w1.has_value();
        r.t2 = r.w2.has_value();
        r.color = r.t1 ? (r.t2 ? EdgeColor::Green : EdgeColor::Blue) : (r.t2 ? EdgeColor::Orange : EdgeColor::Red);
        out.emplace(edges[i], std::move(r));
    }
    return out;
}

nlohmann::json witness_json(const Unwinding& u, const CycleWitness& w) {
    const auto& t = u.base();
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& seg : w.segments) {
        nlohmann::json v = nlohmann::json::object(), y = nlohmann::json::object(), z = nlohmann::json::object();
        for (const auto& [s, x] : seg.v) v[t.state_name(s)] = x.get_str();
        for (const auto& [a, x] : seg.y) y[t.action_name(a)] = x.get_str();
        for (const auto& [e, x] : seg.z) z[u.edge_id(e)] = x.get_str();
        nlohmann::json js = {{"comp", seg.comp}, {"y", y}};
        if (w.kind == CycleWitness::Kind::T2) {
            js["v"] = v;
            js["z"] = z;
        }
        segs.push_back(js);
    }
    return {{"kind", w.kind == CycleWitness::Kind::T1 ? "T1" : "T2"}, {"target", u.edge_id(w.target)}, {"segments", segs}};
}

nlohmann::json classification_json(const Unwinding& u, const Classification& c) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [e, r] : c) {
        nlohmann::json witness = nullptr;
        if (r.w1 || r.w2)
            witness = {{"t1", r.w1 ? witness_json(u, *r.w1) : nlohmann::json(nullptr)},
                       {"t2", r.w2 ? witness_json(u, *r.w2) : nlohmann::json(nullptr)}};
        out[u.edge_id(e)] = {{"color", color_name(r.color)}, {"t1", r.t1}, {"t2", r.t2}, {"witness", witness}};
    }
    return out;
}

std::string classification_dot(const Unwinding& u, const Classification& c) {
    const auto& t = u.base();
    const auto& lt = u.as_template();
    std::ostringstream out;
    out << "digraph classification {\n";
    for (const auto& comp : u.components()) {
        out << "  subgraph cluster_" << comp.index << " {\n    label=\"P" << comp.index << "\";\n";
        for (StateId s : comp.states)
            out << "    \"" << lt.state_name(*u.lifted_state(s, comp.index)) << "\" [label=\"" << t.state_name(s) << "\"];\n";
        out << "  }\n";
    }
    for (std::size_t i = 0; i < u.edges().size(); ++i) {
        const auto& e = u.edge(i);
        auto it = c.find(i);
        out << "  \"" << lt.state_name(e.src) << "\" -> \"" << lt.state_name(e.dst) << "\" [label=\""
            << t.label_name(t.edge(e.base).label) << "\", color=" << (it == c.end() ? "gray" : color_name(it->second.color))
            << (e.broadcast ? ", style=dashed" : "") << "];\n";
    }
    out << "}\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Realization

namespace {

struct AbstractStep {
    bool broadcast = false;
    std::size_t segment = 0;
    /// Rendezvous: index into the segment's actions.
    std::size_t action = 0;
    /// Broadcast: processes routed along each unwinding edge.
    std::vector<std::pair<std::size_t, std::size_t>> routes;
};

using Counts = std::vector<std::size_t>;

bool enabled(const Counts& counts, const std::vector<StateId>& sources) {
    std::map<StateId, std::size_t> need;
    for (StateId s : sources) ++need[s];
    for (const auto& [s, n] : need)
        if (counts[s] < n) return false;
    return true;
}

void fire(Counts& counts, const std::vector<StateId>& src, const std::vector<StateId>& dst) {
    for (StateId s : src) --counts[s];
    for (StateId s : dst) ++counts[s];
}

std::size_t to_size(const Integer& z, std::size_t cap) {
    if (z > Integer(static_cast<unsigned long>(cap))) return cap + 1;
    return z.get_ui();
}

// Per segment: letter endpoints of each action of the witness.
struct SegActions {
    std::vector<ActionId> actions;
    std::vector<std::vector<EdgeId>> letters;
    std::vector<std::vector<StateId>> src, dst;
};

SegActions seg_actions(const Unwinding& u, const WitnessSegment& seg) {
    const auto& t = u.base();
    SegActions out;
    for (const auto& [a, y] : seg.y) {
        (void)y;
        auto eff = action_effect(t, a, u.component(seg.comp).edges);
        out.actions.push_back(a);
        std::vector<StateId> src, dst;
        for (EdgeId e : eff.letter_edges) {
            src.push_back(t.edge(e).src);
            dst.push_back(t.edge(e).dst);
        }
        out.letters.push_back(eff.letter_edges);
        out.src.push_back(std::move(src));
        out.dst.push_back(std::move(dst));
    }
    return out;
}

// Fires every action its full multiplicity. Greedy takes the first enabled
// action in declaration order; balanced takes the enabled action that is
// least far along relative to its multiplicity, which tracks the straight
// line from start to end counts.
bool schedule_segment(const SegActions& sa, std::vector<std::size_t> remaining, Counts& counts, bool balanced,
                      std::size_t segment, std::vector<AbstractStep>& steps) {
    const std::vector<std::size_t> total = remaining;
    for (;;) {
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < sa.actions.size(); ++i) {
            if (remaining[i] == 0 || !enabled(counts, sa.src[i])) continue;
            if (!balanced) {
                pick = i;
                break;
            }
            // compare done_i / total_i < done_p / total_p without division
            auto done = [&](std::size_t k) { return total[k] - remaining[k]; };
            if (!pick || done(i) * total[*pick] < done(*pick) * total[i]) pick = i;
        }
        if (!pick) return std::all_of(remaining.begin(), remaining.end(), [](std::size_t r) { return r == 0; });
        fire(counts, sa.src[*pick], sa.dst[*pick]);
        --remaining[*pick];
        steps.push_back(AbstractStep{false, segment, *pick, {}});
    }
}

Path concretize(const Unwinding& u, std::size_t comp0, const Counts& start, const std::vector<SegActions>& sas,
                const std::vector<std::size_t>& seg_comp, const std::vector<AbstractStep>& steps) {
    const auto& lt = u.as_template();
    std::vector<StateId> states;
    for (StateId s = 0; s < start.size(); ++s)
        for (std::size_t i = 0; i < start[s]; ++i) states.push_back(*u.lifted_state(s, comp0));
    Path path{Configuration::from_states(states, lt.num_states()), {}};
    for (const auto& st : steps) {
        const Configuration cur = path.end();
        if (!st.broadcast) {
            std::vector<EdgeId> lifted;
            for (EdgeId e : sas[st.segment].letters[st.action])
                lifted.push_back(static_cast<EdgeId>(*u.find_edge(e, seg_comp[st.segment])));
            auto step = fire_lowest(lt, cur, lifted);
            if (!step) throw Error("internal: scheduled rendezvous is not enabled");
            path.steps.push_back(std::move(*step));
        } else {
            std::map<StateId, std::vector<ProcessId>> pool;
            for (const auto& [p, s] : cur.assignment()) pool[s].push_back(p);
            std::map<StateId, std::size_t> used;
            std::vector<Move> moves;
            for (const auto& [e, n] : st.routes) {
                const StateId src = u.edge(e).src;
                for (std::size_t i = 0; i < n; ++i) moves.push_back(Move{pool[src].at(used[src]++), static_cast<EdgeId>(e)});
            }
            path.steps.push_back(make_broadcast(lt, cur, std::move(moves)));
        }
    }
    return path;
}

}  // namespace

Realization realize_witness(const Unwinding& u, const CycleWitness& w, const RealizeOptions& options) {
    Realization out;
    std::string why;
    if (!witness_valid(u, w, &why)) {
        out.diagnostics = "invalid witness: " + why;
        return out;
    }
    const auto& t = u.base();
    const std::size_t d = t.num_states();

    std::vector<Rational> all;
    for (const auto& seg : w.segments) {
        for (const auto& [s, x] : seg.v) all.push_back(x);
        for (const auto& [a, x] : seg.y) all.push_back(x);
        for (const auto& [e, x] : seg.z) all.push_back(x);
    }
    const auto ints = integer_scale(all);
    std::vector<SegActions> sas;
    std::vector<std::size_t> seg_comp;
    for (const auto& seg : w.segments) {
        sas.push_back(seg_actions(u, seg));
        seg_comp.push_back(seg.comp);
    }

    if (w.kind == CycleWitness::Kind::T1) {
        // Load processes on demand: whenever the next firing lacks a process
        // at some source, one more process starts there.
        const auto& sa = sas[0];
        std::vector<std::size_t> remaining;
        for (std::size_t i = 0; i < sa.actions.size(); ++i) remaining.push_back(to_size(ints[i], options.max_steps));
        std::size_t total = 0;
        for (auto r : remaining) total += r;
        if (total > options.max_steps) {
            out.diagnostics = "witness needs more than " + std::to_string(options.max_steps) + " steps";
            return out;
        }
        Counts load(d, 0), counts(d, 0);
        std::vector<AbstractStep> steps;
        for (bool any = true; any;) {
            any = false;
            for (std::size_t i = 0; i < sa.actions.size(); ++i) {
                if (remaining[i] == 0) continue;
                std::map<StateId, std::size_t> need;
                for (StateId s : sa.src[i]) ++need[s];
                for (const auto& [s, n] : need)
                    if (counts[s] < n) {
                        load[s] += n - counts[s];
                        counts[s] = n;
                    }
                fire(counts, sa.src[i], sa.dst[i]);
                --remaining[i];
                steps.push_back(AbstractStep{false, 0, i, {}});
                any = true;
            }
        }
        std::size_t n = 0;
        for (auto x : load) n += x;
        if (n > options.max_processes) {
            out.diagnostics = "witness needs more than " + std::to_string(options.max_processes) + " processes";
            return out;
        }
        auto path = concretize(u, seg_comp[0], load, sas, seg_comp, steps);
        if (!is_pseudo_cycle(path) || !is_valid_path(u.as_template(), path)) {
            out.diagnostics = "internal: demand-loaded schedule is not a pseudo-cycle";
            return out;
        }
        out.path = std::move(path);
        return out;
    }

    // T2: integral counts, then try growing scale factors.
    struct SegInts {
        Counts v;
        std::vector<std::size_t> y;
        std::vector<std::pair<std::size_t, std::size_t>> z;
    };
    std::vector<SegInts> base;
    {
        std::size_t idx = 0;
        const std::size_t cap = options.max_processes + options.max_steps;
        for (const auto& seg : w.segments) {
            SegInts si{Counts(d, 0), {}, {}};
            for (const auto& [s, x] : seg.v) si.v[s] = to_size(ints[idx++], cap);
            for (std::size_t i = 0; i < seg.y.size(); ++i) si.y.push_back(to_size(ints[idx++], cap));
            for (const auto& [e, x] : seg.z) si.z.emplace_back(e, to_size(ints[idx++], cap));
            base.push_back(std::move(si));
        }
    }
    std::string last;
    for (std::size_t scale = 1; scale <= options.max_scale; scale *= 2) {
        std::size_t procs = 0, nsteps = 0;
        for (auto x : base[0].v) procs += x * scale;
        for (const auto& si : base)
            for (auto y : si.y) nsteps += y * scale;
        nsteps += base.size();
        if (procs > options.max_processes || nsteps > options.max_steps) {
            last = "scale " + std::to_string(scale) + " needs " + std::to_string(procs) + " processes and " +
                   std::to_string(nsteps) + " steps, above the caps";
            break;
        }
        for (bool balanced : {false, true}) {
            Counts counts(d, 0);
            for (StateId s = 0; s < d; ++s) counts[s] = base[0].v[s] * scale;
            std::vector<AbstractStep> steps;
            bool ok = true;
            for (std::size_t j = 0; j < base.size() && ok; ++j) {
                std::vector<std::size_t> rem;
                for (auto y : base[j].y) rem.push_back(y * scale);
                if (!schedule_segment(sas[j], rem, counts, balanced, j, steps)) {
                    ok = false;
                    last = std::string(balanced ? "balanced" : "greedy") + " schedule stalls in segment " +
                           std::to_string(j) + " at scale " + std::to_string(scale);
                    break;
                }
                AbstractStep b{true, j, 0, {}};
                Counts next(d, 0);
                for (const auto& [e, n] : base[j].z) {
                    b.routes.emplace_back(e, n * scale);
                    const auto& be = t.edge(u.edge(e).base);
                    if (counts[be.src] < n * scale) ok = false;
                    counts[be.src] -= std::min(counts[be.src], n * scale);
                    next[be.dst] += n * scale;
                }
                if (!ok || std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c != 0; })) {
                    ok = false;
                    last = "broadcast flows do not match the segment's end counts";
                    break;
                }
                counts = std::move(next);
                steps.push_back(std::move(b));
            }
            if (!ok) continue;
            Counts start(d, 0);
            for (StateId s = 0; s < d; ++s) start[s] = base[0].v[s] * scale;
            auto path = concretize(u, seg_comp[0], start, sas, seg_comp, steps);
            if (!is_pseudo_cycle(path) || !is_valid_path(u.as_template(), path)) {
                last = "internal: scheduled path is not a pseudo-cycle";
                continue;
            }
            out.path = std::move(path);
            out.scale = scale;
            return out;
        }
    }
    out.diagnostics = last.empty() ? "no schedule found" : last;
    return out;
}

}  // namespace rbcheck
