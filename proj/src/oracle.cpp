#include "rbcheck/oracle.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "rbcheck/error.hpp"

namespace rbcheck {

std::size_t QConfig::size() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0}) + (tracked ? 1 : 0);
}

QConfig quotient(const Configuration& f, bool track_first) {
    QConfig q;
    q.counts.assign(f.counts().begin(), f.counts().end());
    if (track_first) {
        auto s = f.state_of(1);
        if (!s) throw Error("tracked quotient needs process 1");
        q.tracked = *s;
        --q.counts[*s];
    }
    return q;
}

Configuration representative(const QConfig& q) {
    std::vector<std::pair<ProcessId, StateId>> a;
    ProcessId next = 1;
    if (q.tracked) a.emplace_back(next++, *q.tracked);
    for (StateId s = 0; s < q.counts.size(); ++s)
        for (std::uint32_t i = 0; i < q.counts[s]; ++i) a.emplace_back(next++, s);
    return Configuration(std::move(a), q.counts.size());
}

namespace {

// All ways to split `total` processes over `parts` edges.
void compositions(std::uint32_t total, std::size_t parts, std::vector<std::uint32_t>& cur,
                  std::vector<std::vector<std::uint32_t>>& out) {
    if (cur.size() + 1 == parts) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (std::uint32_t x = total + 1; x-- > 0;) {
        cur.push_back(x);
        compositions(total - x, parts, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<QStep> quotient_successors(const ProcessTemplate& t, const QConfig& q) {
    std::vector<QStep> out;
    const std::size_t d = t.num_states();

    // rendezvous
    for (ActionId a = 0; a < t.num_actions(); ++a) {
        std::vector<std::vector<EdgeId>> options;
        for (std::uint32_t j = 1; j <= t.k(); ++j) options.push_back(t.letter_edges(Letter{a, j}));
        if (std::any_of(options.begin(), options.end(), [](const auto& o) { return o.empty(); })) continue;
        std::vector<std::size_t> pick(t.k(), 0);
        for (;;) {
            std::vector<EdgeId> letters;
            for (std::size_t j = 0; j < t.k(); ++j) letters.push_back(options[j][pick[j]]);
            // process 1 takes no letter, or the letter with index `who`
            for (std::size_t who = 0; who <= t.k(); ++who) {
                const bool tracked_moves = who < t.k();
                if (tracked_moves && (!q.tracked || t.edge(letters[who]).src != *q.tracked)) continue;
                std::vector<std::int64_t> need(d, 0);
                for (std::size_t j = 0; j < t.k(); ++j)
                    if (j != who) ++need[t.edge(letters[j]).src];
                bool ok = true;
                for (StateId s = 0; s < d && ok; ++s) ok = need[s] <= q.counts[s];
                if (!ok) continue;
                QStep step;
                step.letters = letters;
                step.dst = q;
                for (std::size_t j = 0; j < t.k(); ++j) {
                    if (j == who) continue;
                    --step.dst.counts[t.edge(letters[j]).src];
                    ++step.dst.counts[t.edge(letters[j]).dst];
                }
                if (tracked_moves) {
                    step.tracked_letter = who;
                    step.tracked_edge = letters[who];
                    step.dst.tracked = t.edge(letters[who]).dst;
                }
                out.push_back(std::move(step));
            }
            std::size_t j = t.k();
            while (j > 0 && ++pick[j - 1] == options[j - 1].size()) pick[--j] = 0;
            if (j == 0) break;
        }
    }

    // broadcast: every process moves
    std::vector<StateId> occupied;
    for (StateId s = 0; s < d; ++s)
        if (q.counts[s] > 0) occupied.push_back(s);
    std::vector<std::vector<std::vector<std::uint32_t>>> splits;
    for (StateId s : occupied) {
        const auto edges = t.broadcast_edges_from(s);
        if (edges.empty()) return out;
        std::vector<std::vector<std::uint32_t>> c;
        std::vector<std::uint32_t> cur;
        compositions(q.counts[s], edges.size(), cur, c);
        splits.push_back(std::move(c));
    }
    std::vector<std::optional<EdgeId>> tracked_choices{std::nullopt};
    if (q.tracked) {
        tracked_choices.clear();
        for (EdgeId e : t.broadcast_edges_from(*q.tracked)) tracked_choices.emplace_back(e);
        if (tracked_choices.empty()) return out;
    }
    std::vector<std::size_t> pick(occupied.size(), 0);
    for (;;) {
        for (const auto& te : tracked_choices) {
            QStep step;
            step.broadcast = true;
            step.dst.counts.assign(d, 0);
            for (std::size_t i = 0; i < occupied.size(); ++i) {
                const auto edges = t.broadcast_edges_from(occupied[i]);
                const auto& split = splits[i][pick[i]];
                for (std::size_t x = 0; x < edges.size(); ++x) {
                    if (split[x] == 0) continue;
                    step.spread.emplace_back(edges[x], split[x]);
                    step.dst.counts[t.edge(edges[x]).dst] += split[x];
                }
            }
            if (te) {
                step.tracked_edge = *te;
                step.dst.tracked = t.edge(*te).dst;
            }
            out.push_back(std::move(step));
        }
        std::size_t i = occupied.size();
        while (i > 0 && ++pick[i - 1] == splits[i - 1].size()) pick[--i] = 0;
        if (i == 0) break;
    }
    return out;
}

GlobalTransition concretize_step(const ProcessTemplate& t, const Configuration& f, const QStep& s, bool track_first) {
    std::map<StateId, std::deque<ProcessId>> pool;
    for (const auto& [p, st] : f.assignment())
        if (!(track_first && p == 1)) pool[st].push_back(p);
    auto take = [&](StateId st) {
        auto& q = pool[st];
        if (q.empty()) throw Error("internal: quotient step not enabled in the concrete configuration");
        const ProcessId p = q.front();
        q.pop_front();
        return p;
    };
    std::vector<Move> moves;
    if (!s.broadcast) {
        for (std::size_t j = 0; j < s.letters.size(); ++j) {
            const EdgeId e = s.letters[j];
            moves.push_back(Move{s.tracked_letter == j ? ProcessId{1} : take(t.edge(e).src), e});
        }
        return make_rendezvous(t, f, std::move(moves));
    }
    if (track_first) moves.push_back(Move{1, s.tracked_edge.value()});
    for (const auto& [e, n] : s.spread)
        for (std::uint32_t i = 0; i < n; ++i) moves.push_back(Move{take(t.edge(e).src), e});
    std::sort(moves.begin(), moves.end());
    return make_broadcast(t, f, std::move(moves));
}

std::vector<QConfig> initial_vertices(const ProcessTemplate& t, std::size_t n, bool track_first) {
    const auto init = t.initial_states();
    std::vector<QConfig> out;
    if (n == 0 || init.empty()) return out;
    const std::size_t anonymous = track_first ? n - 1 : n;
    std::vector<std::vector<std::uint32_t>> splits;
    std::vector<std::uint32_t> cur;
    compositions(static_cast<std::uint32_t>(anonymous), init.size(), cur, splits);
    std::vector<std::optional<StateId>> firsts{std::nullopt};
    if (track_first) {
        firsts.clear();
        for (StateId s : init) firsts.emplace_back(s);
    }
    for (const auto& first : firsts)
        for (const auto& split : splits) {
            QConfig q{first, std::vector<std::uint32_t>(t.num_states(), 0)};
            for (std::size_t i = 0; i < init.size(); ++i) q.counts[init[i]] = split[i];
            out.push_back(std::move(q));
        }
    return out;
}

std::optional<std::size_t> StateGraph::find(const QConfig& q, std::size_t tg) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
        if (vertices[i] == q && tag[i] == tg) return i;
    return std::nullopt;
}

Path StateGraph::path_to(const ProcessTemplate& t, std::size_t v) const {
    std::vector<std::size_t> arcs_back;
    std::size_t x = v;
    while (parent[x]) {
        arcs_back.push_back(*parent[x]);
        x = arcs[*parent[x]].src;
    }
    Path p{representative(vertices[x]), {}};
    for (auto it = arcs_back.rbegin(); it != arcs_back.rend(); ++it)
        p.steps.push_back(concretize_step(t, p.end(), arcs[*it].step, track_first));
    return p;
}

namespace {

using Clock = std::chrono::steady_clock;

// Breadth-first product of the quotient instance with a tag automaton.
// `advance` maps (tag, step) to the successor tag, or rejects the step.
struct Explorer {
    const ProcessTemplate& t;
    const SearchBudget& budget;
    bool track_first;
    std::function<std::optional<std::size_t>(std::size_t, const QStep&)> advance;
    std::function<bool(const QConfig&, std::size_t)> goal;

    StateGraph g;
    std::map<std::pair<QConfig, std::size_t>, std::size_t> index;
    std::optional<std::size_t> reached;

    std::size_t add(const QConfig& q, std::size_t tg, std::optional<std::size_t> parent, std::size_t depth,
                    std::deque<std::size_t>& queue) {
        auto [it, fresh] = index.try_emplace({q, tg}, g.vertices.size());
        if (fresh) {
            g.vertices.push_back(q);
            g.tag.push_back(tg);
            g.out.emplace_back();
            g.parent.push_back(parent);
            g.depth.push_back(depth);
            queue.push_back(it->second);
            if (!reached && goal && goal(q, tg)) reached = it->second;
        }
        return it->second;
    }

    void run(const std::vector<std::pair<QConfig, std::size_t>>& init) {
        g.track_first = track_first;
        const auto deadline = Clock::now() + std::chrono::milliseconds(budget.max_ms);
        std::deque<std::size_t> queue;
        for (const auto& [q, tg] : init) add(q, tg, std::nullopt, 0, queue);
        while (!queue.empty() && !reached) {
            const std::size_t v = queue.front();
            queue.pop_front();
            if (g.depth[v] >= budget.max_depth) {
                g.truncated = true;
                continue;
            }
            if (Clock::now() > deadline) {
                g.truncated = true;
                break;
            }
            const QConfig q = g.vertices[v];
            const std::size_t tg = g.tag[v];
            for (auto& step : quotient_successors(t, q)) {
                auto next = advance ? advance(tg, step) : std::optional<std::size_t>(0);
                if (!next) continue;
                if (!index.count({step.dst, *next}) && g.vertices.size() >= budget.max_states) {
                    g.truncated = true;
                    continue;
                }
                const std::size_t arc = g.arcs.size();
                const std::size_t w = add(step.dst, *next, arc, g.depth[v] + 1, queue);
                g.arcs.push_back({v, w, std::move(step)});
                g.out[v].push_back(arc);
                if (reached) break;
            }
        }
    }
};

// Strongly connected components over arcs accepted by `allowed`.
std::vector<std::size_t> components(const StateGraph& g, const std::vector<bool>& allowed) {
    const std::size_t n = g.vertices.size();
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, none), low(n, 0), comp(n, none);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next = 0, count = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != none) continue;
        std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
        index[root] = low[root] = next++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            const std::size_t v = call.back().first;
            const std::size_t i = call.back().second++;
            if (i < g.out[v].size()) {
                const std::size_t arc = g.out[v][i];
                if (!allowed[arc]) continue;
                const std::size_t w = g.arcs[arc].dst;
                if (index[w] == none) {
                    index[w] = low[w] = next++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[v]);
            if (low[v] == index[v]) {
                for (;;) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                    if (w == v) break;
                }
                ++count;
            }
        }
    }
    return comp;
}

// Shortest arc path from `from` to a vertex satisfying `goal` inside one component.
std::vector<std::size_t> route(const StateGraph& g, const std::vector<bool>& allowed, const std::vector<std::size_t>& comp,
                               std::size_t from, const std::function<bool(std::size_t)>& goal) {
    if (goal(from)) return {};
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent(g.vertices.size(), none);
    std::vector<bool> seen(g.vertices.size(), false);
    std::deque<std::size_t> q{from};
    seen[from] = true;
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        for (std::size_t arc : g.out[v]) {
            const std::size_t w = g.arcs[arc].dst;
            if (!allowed[arc] || seen[w] || comp[w] != comp[from]) continue;
            seen[w] = true;
            parent[w] = arc;
            if (goal(w)) {
                std::vector<std::size_t> path;
                for (std::size_t x = w; x != from; x = g.arcs[parent[x]].src) path.push_back(parent[x]);
                std::reverse(path.begin(), path.end());
                return path;
            }
            q.push_back(w);
        }
    }
    throw Error("internal: no route inside a strongly connected component");
}

// Closed walk from arc a's source: a, then through `via` (if any), then home.
std::vector<std::size_t> closed_walk(const StateGraph& g, const std::vector<bool>& allowed,
                                     const std::vector<std::size_t>& comp, std::size_t a, std::optional<std::size_t> via) {
    const std::size_t home = g.arcs[a].src;
    std::vector<std::size_t> walk{a};
    std::size_t cur = g.arcs[a].dst;
    if (via && *via != a) {
        const std::size_t target = g.arcs[*via].src;
        for (auto x : route(g, allowed, comp, cur, [&](std::size_t v) { return v == target; })) walk.push_back(x);
        walk.push_back(*via);
        cur = g.arcs[*via].dst;
    }
    for (auto x : route(g, allowed, comp, cur, [&](std::size_t v) { return v == home; })) walk.push_back(x);
    return walk;
}

Path follow(const ProcessTemplate& t, const StateGraph& g, const Configuration& start, const std::vector<std::size_t>& arcs) {
    Path p{start, {}};
    for (auto a : arcs) p.steps.push_back(concretize_step(t, p.end(), g.arcs[a].step, g.track_first));
    return p;
}

bool uses_edge(const QStep& s, EdgeId e) {
    if (s.broadcast) {
        if (s.tracked_edge == e) return true;
        return std::any_of(s.spread.begin(), s.spread.end(), [&](const auto& x) { return x.first == e; });
    }
    return std::find(s.letters.begin(), s.letters.end(), e) != s.letters.end();
}

}  // namespace

StateGraph enumerate(const ProcessTemplate& t, std::size_t n, const SearchBudget& budget, bool track_first) {
    Explorer ex{t, budget, track_first, nullptr, nullptr, {}, {}, {}};
    std::vector<std::pair<QConfig, std::size_t>> init;
    for (auto& q : initial_vertices(t, n, track_first)) init.emplace_back(std::move(q), 0);
    ex.run(init);
    return std::move(ex.g);
}

std::string state_graph_dot(const ProcessTemplate& t, const StateGraph& g, std::size_t max_vertices) {
    auto label = [&](std::size_t v) {
        std::string s;
        const auto& q = g.vertices[v];
        if (q.tracked) s += "1:" + t.state_name(*q.tracked) + " ";
        for (StateId x = 0; x < q.counts.size(); ++x)
            if (q.counts[x]) s += t.state_name(x) + "=" + std::to_string(q.counts[x]) + " ";
        if (!s.empty()) s.pop_back();
        return s;
    };
    std::ostringstream out;
    out << "digraph instance {\n";
    const std::size_t shown = std::min(max_vertices, g.vertices.size());
    for (std::size_t v = 0; v < shown; ++v)
        out << "  v" << v << " [label=\"" << label(v) << "\"" << (g.parent[v] ? "" : ", shape=box") << "];\n";
    for (const auto& a : g.arcs) {
        if (a.src >= shown || a.dst >= shown) continue;
        const std::string l = a.step.broadcast ? "b" : t.action_name(t.edge(a.step.letters[0]).label.letter().action);
        out << "  v" << a.src << " -> v" << a.dst << " [label=\"" << l << "\"" << (a.step.broadcast ? ", style=dashed" : "")
            << "];\n";
    }
    if (shown < g.vertices.size()) out << "  // " << g.vertices.size() - shown << " vertices omitted\n";
    out << "}\n";
    return out.str();
}

WordSet exec_fin(const ProcessTemplate& t, std::size_t n, std::size_t max_len, const SearchBudget& budget) {
    WordSet out;
    out.words.insert(std::vector<EdgeId>{});
    if (n == 0) return out;
    const auto deadline = Clock::now() + std::chrono::milliseconds(budget.max_ms);
    std::set<std::pair<QConfig, std::vector<EdgeId>>> seen;
    std::vector<std::pair<QConfig, std::vector<EdgeId>>> layer;
    for (auto& q : initial_vertices(t, n, true))
        if (seen.insert({q, {}}).second) layer.emplace_back(q, std::vector<EdgeId>{});
    // (config, word) pairs seen at an earlier depth need no second expansion
    for (std::size_t depth = 0; depth < max_len && !layer.empty(); ++depth) {
        std::vector<std::pair<QConfig, std::vector<EdgeId>>> next;
        for (const auto& [q, w] : layer) {
            if (Clock::now() > deadline || seen.size() >= budget.max_states) {
                out.truncated = true;
                return out;
            }
            for (auto& s : quotient_successors(t, q)) {
                auto w2 = w;
                if (s.tracked_edge) w2.push_back(*s.tracked_edge);
                if (seen.insert({s.dst, w2}).second) {
                    out.words.insert(w2);
                    next.emplace_back(std::move(s.dst), std::move(w2));
                }
            }
        }
        layer = std::move(next);
    }
    return out;
}

std::optional<WordRun> find_word_run(const ProcessTemplate& t, std::span<const EdgeId> word, const SearchBudget& budget) {
    for (std::size_t n = 1; n <= budget.max_n; ++n) {
        Explorer ex{t, budget, true,
                    [&](std::size_t pos, const QStep& s) -> std::optional<std::size_t> {
                        if (!s.tracked_edge) return pos;
                        if (pos < word.size() && *s.tracked_edge == word[pos]) return pos + 1;
                        return std::nullopt;
                    },
                    [&](const QConfig&, std::size_t pos) { return pos == word.size(); },
                    {}, {}, {}};
        std::vector<std::pair<QConfig, std::size_t>> init;
        for (auto& q : initial_vertices(t, n, true)) init.emplace_back(std::move(q), 0);
        ex.run(init);
        if (ex.reached) return WordRun{n, ex.g.path_to(t, *ex.reached)};
    }
    return std::nullopt;
}

CycleSearch find_pseudo_cycle(const Unwinding& u, std::size_t e, std::size_t n, const SearchBudget& budget, CycleKind kind) {
    const auto& lt = u.as_template();
    if (e >= lt.num_edges()) throw Error("unknown unwinding edge " + std::to_string(e));
    const auto g = enumerate(lt, n, budget, false);
    CycleSearch out;
    out.truncated = g.truncated;
    std::vector<bool> allowed(g.arcs.size(), true);
    if (kind == CycleKind::BroadcastFree)
        for (std::size_t a = 0; a < g.arcs.size(); ++a) allowed[a] = !g.arcs[a].step.broadcast;
    const auto comp = components(g, allowed);
    auto internal = [&](std::size_t a) { return allowed[a] && comp[g.arcs[a].src] == comp[g.arcs[a].dst]; };

    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        if (!internal(a) || !uses_edge(g.arcs[a].step, static_cast<EdgeId>(e))) continue;
        std::optional<std::size_t> via;
        auto direct = closed_walk(g, allowed, comp, a, std::nullopt);
        const bool has_broadcast =
            std::any_of(direct.begin(), direct.end(), [&](std::size_t x) { return g.arcs[x].step.broadcast; });
        if (kind == CycleKind::WithBroadcast && !has_broadcast) {
            for (std::size_t b = 0; b < g.arcs.size() && !via; ++b)
                if (internal(b) && g.arcs[b].step.broadcast && comp[g.arcs[b].src] == comp[g.arcs[a].src]) via = b;
            if (!via) continue;
        }
        FoundCycle f;
        f.n = n;
        f.prefix = g.path_to(lt, g.arcs[a].src);
        f.cycle = follow(lt, g, f.prefix.end(), via ? closed_walk(g, allowed, comp, a, via) : direct);
        f.broadcasts = f.cycle.broadcasts();
        out.found = std::move(f);
        return out;
    }
    return out;
}

std::optional<LoadingRun> find_loading_run(const Unwinding& u, std::size_t b, std::size_t n_target, const SearchBudget& budget) {
    const auto& lt = u.as_template();
    const std::size_t c = u.comp(b);
    std::vector<StateId> targets;
    for (StateId s : u.component(c).states) targets.push_back(*u.lifted_state(s, c));
    for (std::size_t n = 1; n <= budget.max_n; ++n) {
        Explorer ex{lt, budget, false,
                    [&](std::size_t bs, const QStep& s) -> std::optional<std::size_t> {
                        if (!s.broadcast) return bs;
                        if (bs < b) return bs + 1;
                        return std::nullopt;
                    },
                    [&](const QConfig& q, std::size_t bs) {
                        return bs == b && std::all_of(targets.begin(), targets.end(),
                                                      [&](StateId s) { return q.counts[s] >= n_target; });
                    },
                    {}, {}, {}};
        std::vector<std::pair<QConfig, std::size_t>> init;
        for (auto& q : initial_vertices(lt, n, false)) init.emplace_back(std::move(q), 0);
        ex.run(init);
        if (ex.reached) return LoadingRun{n, ex.g.path_to(lt, *ex.reached)};
    }
    return std::nullopt;
}

std::optional<RealizedLasso> realize_lasso(const ProcessTemplate& t, std::span<const EdgeId> prefix,
                                           std::span<const EdgeId> cycle, const SearchBudget& budget) {
    if (cycle.empty()) throw Error("realize_lasso needs a nonempty cycle");
    std::vector<EdgeId> word(prefix.begin(), prefix.end());
    word.insert(word.end(), cycle.begin(), cycle.end());
    const std::size_t loop_pos = prefix.size();
    for (std::size_t n = 1; n <= budget.max_n; ++n) {
        Explorer ex{t, budget, true,
                    [&](std::size_t pos, const QStep& s) -> std::optional<std::size_t> {
                        if (!s.tracked_edge) return pos;
                        if (*s.tracked_edge != word[pos]) return std::nullopt;
                        return pos + 1 < word.size() ? pos + 1 : loop_pos;
                    },
                    nullptr, {}, {}, {}};
        std::vector<std::pair<QConfig, std::size_t>> init;
        for (auto& q : initial_vertices(t, n, true)) init.emplace_back(std::move(q), 0);
        ex.run(init);
        const auto& g = ex.g;
        std::vector<bool> allowed(g.arcs.size(), true);
        const auto comp = components(g, allowed);
        // a letter-consuming arc inside a component holding a loop-start vertex
        for (std::size_t a = 0; a < g.arcs.size(); ++a) {
            const auto& arc = g.arcs[a];
            if (!arc.step.tracked_edge || comp[arc.src] != comp[arc.dst]) continue;
            std::optional<std::size_t> home;
            for (std::size_t v = 0; v < g.vertices.size() && !home; ++v)
                if (comp[v] == comp[arc.src] && g.tag[v] == loop_pos) home = v;
            if (!home) continue;
            auto loop = route(g, allowed, comp, *home, [&](std::size_t v) { return v == arc.src; });
            loop.push_back(a);
            for (auto x : route(g, allowed, comp, arc.dst, [&](std::size_t v) { return v == *home; })) loop.push_back(x);
            RealizedLasso r;
            r.n = n;
            r.run = g.path_to(t, *home);
            r.loop_start = r.run.steps.size();
            const Path tail = follow(t, g, r.run.end(), loop);
            r.run.steps.insert(r.run.steps.end(), tail.steps.begin(), tail.steps.end());
            return r;
        }
    }
    return std::nullopt;
}

std::optional<std::string> compare_lifted_runs(const Unwinding& u, std::size_t n, std::size_t depth) {
    const auto& t = u.base();
    const auto& lt = u.as_template();
    auto lift = [&](const Configuration& f, std::size_t b) -> std::optional<Configuration> {
        std::vector<std::pair<ProcessId, StateId>> a;
        for (const auto& [p, s] : f.assignment()) {
            auto ls = u.lifted_state(s, u.comp(b));
            if (!ls) return std::nullopt;
            a.emplace_back(p, *ls);
        }
        return Configuration(std::move(a), lt.num_states());
    };
    std::set<std::pair<Configuration, std::size_t>> seen;
    std::vector<std::pair<Configuration, std::size_t>> layer;
    for (const auto& q : initial_vertices(t, n, false)) {
        // every naming of the initial counts
        std::vector<StateId> states;
        for (StateId s = 0; s < q.counts.size(); ++s) states.insert(states.end(), q.counts[s], s);
        do {
            auto f = Configuration::from_states(states, t.num_states());
            if (seen.insert({f, 0}).second) layer.emplace_back(f, 0);
        } while (std::next_permutation(states.begin(), states.end()));
    }
    for (std::size_t d = 0; d <= depth && !layer.empty(); ++d) {
        std::vector<std::pair<Configuration, std::size_t>> next;
        for (const auto& [f, b] : layer) {
            auto lf = lift(f, b);
            if (!lf) return "reachable configuration has no counterpart after " + std::to_string(b) + " broadcasts";
            std::set<std::pair<std::vector<Move>, bool>> base_steps, lifted_steps;
            const auto succ = successors(t, f);
            for (const auto& s : succ) base_steps.insert({s.moves, s.broadcast});
            for (const auto& s : successors(lt, *lf)) {
                const auto p = project_circ(u, Path{*lf, {s}});
                lifted_steps.insert({p.steps.at(0).moves, s.broadcast});
            }
            if (base_steps != lifted_steps)
                return "step sets differ at depth " + std::to_string(d) + " (" + std::to_string(base_steps.size()) + " vs " +
                       std::to_string(lifted_steps.size()) + ")";
            if (d == depth) continue;
            for (const auto& s : succ) {
                const std::size_t b2 = b + (s.broadcast ? 1 : 0);
                if (seen.insert({s.dst, b2}).second) next.emplace_back(s.dst, b2);
            }
        }
        layer = std::move(next);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Concrete timed semantics

namespace {

bool holds_concrete(const Guard& g, const std::vector<std::uint64_t>& v) {
    switch (g.kind) {
        case Guard::Kind::True: return true;
        case Guard::Kind::False: return false;
        case Guard::Kind::Lt: return g.constant < v.at(g.clock);
        case Guard::Kind::Eq: return g.constant == v.at(g.clock);
        case Guard::Kind::And:
            return std::all_of(g.children.begin(), g.children.end(), [&](const Guard& c) { return holds_concrete(c, v); });
        case Guard::Kind::Or:
            return std::any_of(g.children.begin(), g.children.end(), [&](const Guard& c) { return holds_concrete(c, v); });
        case Guard::Kind::Not: return !holds_concrete(g.children.at(0), v);
    }
    return false;
}

std::string render_valuation(const TimedTemplate& t, const std::vector<std::uint64_t>& v, const std::vector<std::uint32_t>& caps) {
    std::string out;
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (c) out += ",";
        out += t.clocks[c] + "=" + (v[c] > caps[c] ? std::string("T") : std::to_string(v[c]));
    }
    return out;
}

std::string render_abstract(const TimedTemplate& t, const ClockValuation& v) {
    std::string out;
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (c) out += ",";
        out += t.clocks[c] + "=" + (v[c] == kTop ? std::string("T") : std::to_string(v[c]));
    }
    return out;
}

struct TimedProc {
    StateId q;
    std::vector<std::uint64_t> clocks;
    auto operator<=>(const TimedProc&) const = default;
};

}  // namespace

std::set<std::vector<std::string>> timed_exec_fin(const TimedTemplate& t, std::size_t n, std::size_t max_len,
                                                  std::optional<std::uint32_t> global_cap) {
    const auto caps = t.caps(global_cap);
    using Conf = std::vector<TimedProc>;
    std::set<std::vector<std::string>> words{std::vector<std::string>{}};
    if (n == 0) return words;
    std::vector<StateId> init;
    for (StateId q = 0; q < t.states.size(); ++q)
        if (t.initial[q]) init.push_back(q);
    if (init.empty()) return words;

    std::set<std::pair<Conf, std::vector<std::string>>> seen;
    std::vector<std::pair<Conf, std::vector<std::string>>> layer;
    std::vector<std::size_t> pick(n, 0);
    for (;;) {
        Conf c;
        for (std::size_t i = 0; i < n; ++i) c.push_back({init[pick[i]], std::vector<std::uint64_t>(t.clocks.size(), 0)});
        if (seen.insert({c, {}}).second) layer.emplace_back(c, std::vector<std::string>{});
        std::size_t i = n;
        while (i > 0 && ++pick[i - 1] == init.size()) pick[--i] = 0;
        if (i == 0) break;
    }
    auto step_text = [&](StateId q, const std::string& letter, StateId q2, const std::vector<std::uint64_t>& v,
                         const std::vector<std::uint64_t>& v2) {
        return t.states[q] + "|" + letter + "|" + t.states[q2] + "|" + render_valuation(t, v, caps) + "|" +
               render_valuation(t, v2, caps);
    };

    for (std::size_t depth = 0; depth < max_len && !layer.empty(); ++depth) {
        std::vector<std::pair<Conf, std::vector<std::string>>> next;
        auto push = [&](Conf c, std::vector<std::string> w) {
            if (seen.insert({c, w}).second) {
                words.insert(w);
                next.emplace_back(std::move(c), std::move(w));
            }
        };
        for (const auto& [c, w] : layer) {
            // time passes for everyone
            Conf ticked = c;
            for (auto& p : ticked)
                for (auto& x : p.clocks) ++x;
            auto wt = w;
            wt.push_back(step_text(c[0].q, "b", c[0].q, c[0].clocks, ticked[0].clocks));
            push(ticked, wt);
            // rendezvous: distinct processes p_1..p_k on edges of letters a_1..a_k
            for (ActionId a = 0; a < t.actions.size(); ++a) {
                std::vector<std::vector<std::size_t>> letter_edges(t.k);
                for (std::size_t e = 0; e < t.edges.size(); ++e)
                    if (t.edges[e].letter.action == a) letter_edges[t.edges[e].letter.index - 1].push_back(e);
                std::vector<std::pair<std::size_t, std::size_t>> chosen;  // (process, edge) per letter
                std::vector<bool> busy(n, false);
                std::function<void(std::size_t)> rec = [&](std::size_t j) {
                    if (j == t.k) {
                        Conf d = c;
                        std::vector<std::string> w2 = w;
                        for (std::size_t l = 0; l < t.k; ++l) {
                            const auto [p, e] = chosen[l];
                            const auto& te = t.edges[e];
                            d[p].q = te.dst;
                            for (ClockId x : te.resets) d[p].clocks[x] = 0;
                            if (p == 0)
                                w2.push_back(step_text(c[0].q, t.actions[a] + "." + std::to_string(l + 1), te.dst, c[0].clocks,
                                                       d[0].clocks));
                        }
                        push(std::move(d), std::move(w2));
                        return;
                    }
                    for (std::size_t p = 0; p < n; ++p) {
                        if (busy[p]) continue;
                        for (std::size_t e : letter_edges[j]) {
                            const auto& te = t.edges[e];
                            if (te.src != c[p].q || !holds_concrete(te.guard, c[p].clocks)) continue;
                            busy[p] = true;
                            chosen.emplace_back(p, e);
                            rec(j + 1);
                            chosen.pop_back();
                            busy[p] = false;
                        }
                    }
                };
                rec(0);
            }
        }
        layer = std::move(next);
    }
    return words;
}

std::set<std::vector<std::string>> reduced_exec_fin(const TimedTemplate& t, const Reduction& r, std::size_t n,
                                                    std::size_t max_len) {
    SearchBudget budget;
    budget.max_states = 5000000;
    budget.max_ms = 600000;
    const auto ws = exec_fin(r.rb, n, max_len, budget);
    if (ws.truncated) throw BudgetExceeded("reduced exec_fin truncated");
    std::set<std::vector<std::string>> out;
    for (const auto& w : ws.words) {
        std::vector<std::string> text;
        for (EdgeId e : w) {
            const auto& edge = r.rb.edge(e);
            const auto& [q, v] = r.state_origin[edge.src];
            const auto& [q2, v2] = r.state_origin[edge.dst];
            std::string letter = "b";
            if (!edge.is_broadcast())
                letter = r.orig_action_name(t, edge.label.letter().action) + "." + std::to_string(edge.label.letter().index);
            text.push_back(t.states[q] + "|" + letter + "|" + t.states[q2] + "|" + render_abstract(t, v) + "|" +
                           render_abstract(t, v2));
        }
        out.insert(std::move(text));
    }
    return out;
}

}  // namespace rbcheck
