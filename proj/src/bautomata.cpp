#include "rbcheck/bautomata.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <set>

#include "rbcheck/error.hpp"
#include "rbcheck/template_io.hpp"

namespace rbcheck {

std::string_view counter_op_name(CounterOp op) {
    switch (op) {
        case CounterOp::Noop: return "noop";
        case CounterOp::Increment: return "inc";
        case CounterOp::Reset: return "reset";
    }
    return "?";
}

std::size_t ainf_state(const Unwinding& u, int copy, StateId s) {
    return static_cast<std::size_t>(copy - 1) * u.as_template().num_states() + s;
}

BoundedCounterAutomaton build_ainf(const Unwinding& u, const Classification& c) {
    const auto& lt = u.as_template();
    const std::size_t m = lt.num_states();
    BoundedCounterAutomaton a;
    for (int copy = 1; copy <= 3; ++copy)
        for (StateId s = 0; s < m; ++s) a.state_names.push_back(std::to_string(copy) + ":" + lt.state_name(s));
    a.initial.assign(3 * m, false);
    for (StateId s = 0; s < m; ++s) a.initial[s] = lt.is_initial(s);
    a.buchi.push_back(std::vector<bool>(3 * m, false));
    for (std::size_t i = m; i < 3 * m; ++i) a.buchi[0][i] = true;

    for (std::size_t e = 0; e < u.edges().size(); ++e) {
        const auto& edge = u.edge(e);
        auto it = c.find(e);
        if (it == c.end()) throw Error("classification misses edge " + u.edge_id(e));
        const EdgeColor color = it->second.color;
        for (int copy = 1; copy <= 3; ++copy)
            a.transitions.push_back({ainf_state(u, 1, edge.src), edge.base, CounterOp::Noop, ainf_state(u, copy, edge.dst)});
        if (color == EdgeColor::Green || color == EdgeColor::Orange) {
            CounterOp op = CounterOp::Noop;
            if (color == EdgeColor::Orange) op = edge.broadcast ? CounterOp::Reset : CounterOp::Increment;
            a.transitions.push_back({ainf_state(u, 2, edge.src), edge.base, op, ainf_state(u, 2, edge.dst)});
        }
        if (color == EdgeColor::Blue || color == EdgeColor::Green) {
            if (edge.broadcast) throw Error("internal: broadcast edge " + u.edge_id(e) + " coloured " + std::string(color_name(color)));
            a.transitions.push_back({ainf_state(u, 3, edge.src), edge.base, CounterOp::Noop, ainf_state(u, 3, edge.dst)});
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Specs

namespace {

struct SpecToken {
    std::string text;
    std::size_t column;
};

// Like tokenize_line, but parentheses stand alone.
std::vector<SpecToken> spec_tokens(std::string_view line) {
    std::vector<SpecToken> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char ch = line[i];
        if (ch == '#') break;
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            ++i;
            continue;
        }
        if (ch == '(' || ch == ')') {
            out.push_back({std::string(1, ch), i + 1});
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '(' &&
               line[i] != ')' && line[i] != '#')
            ++i;
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

}  // namespace

SpecAutomaton parse_spec(std::string_view text) {
    SpecAutomaton s;
    std::map<std::string, std::size_t> index;
    bool header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        auto tok = spec_tokens(line);
        if (tok.empty()) continue;
        const std::string& kw = tok[0].text;
        if (!header) {
            if (kw != "spec") throw ParseError("expected `spec nbw` or `spec nfw`", line_no, tok[0].column);
            if (tok.size() != 2 || (tok[1].text != "nbw" && tok[1].text != "nfw"))
                throw ParseError("spec kind must be nbw or nfw", line_no, tok.size() > 1 ? tok[1].column : tok[0].column);
            s.kind = tok[1].text == "nbw" ? SpecAutomaton::Kind::Nbw : SpecAutomaton::Kind::Nfw;
            header = true;
        } else if (kw == "state") {
            if (tok.size() < 2 || !is_identifier(tok[1].text))
                throw ParseError("state needs an identifier", line_no, tok.size() > 1 ? tok[1].column : tok[0].column);
            if (index.count(tok[1].text)) throw ParseError("duplicate state " + tok[1].text, line_no, tok[1].column);
            bool init = false, acc = false;
            for (std::size_t i = 2; i < tok.size(); ++i) {
                if (tok[i].text == "init") init = true;
                else if (tok[i].text == "accepting") acc = true;
                else throw ParseError("unknown state flag " + tok[i].text, line_no, tok[i].column);
            }
            index[tok[1].text] = s.states.size();
            s.states.push_back(tok[1].text);
            s.initial.push_back(init);
            s.accepting.push_back(acc);
        } else if (kw == "trans") {
            auto state_at = [&](std::size_t i) {
                if (i >= tok.size()) throw ParseError("incomplete transition", line_no, line.size() + 1);
                auto it = index.find(tok[i].text);
                if (it == index.end()) throw ParseError("undeclared state " + tok[i].text, line_no, tok[i].column);
                return it->second;
            };
            SpecAutomaton::Transition tr;
            tr.line = line_no;
            tr.src = state_at(1);
            std::size_t i = 2;
            if (i < tok.size() && tok[i].text == "*") {
                tr.pattern.any = true;
                ++i;
            } else {
                if (i >= tok.size() || tok[i].text != "(")
                    throw ParseError("expected `*` or `(src letter dst)`", line_no, i < tok.size() ? tok[i].column : line.size() + 1);
                std::string* fields[] = {&tr.pattern.src, &tr.pattern.letter, &tr.pattern.dst};
                for (auto* f : fields) {
                    ++i;
                    if (i >= tok.size() || tok[i].text == "(" || tok[i].text == ")")
                        throw ParseError("pattern needs three fields", line_no, i < tok.size() ? tok[i].column : line.size() + 1);
                    if (tok[i].text != "_") *f = tok[i].text;
                }
                ++i;
                if (i >= tok.size() || tok[i].text != ")")
                    throw ParseError("expected `)`", line_no, i < tok.size() ? tok[i].column : line.size() + 1);
                ++i;
            }
            tr.dst = state_at(i);
            if (i + 1 < tok.size()) throw ParseError("trailing input", line_no, tok[i + 1].column);
            s.transitions.push_back(std::move(tr));
        } else {
            throw ParseError("unknown keyword " + kw, line_no, tok[0].column);
        }
    }
    if (!header) throw ParseError("empty spec", 1);
    if (std::none_of(s.initial.begin(), s.initial.end(), [](bool b) { return b; }))
        throw ParseError("spec has no initial state", line_no);
    return s;
}

SpecAutomaton load_spec(const std::filesystem::path& path) { return parse_spec(read_file(path)); }

EdgeAlphabet template_alphabet(const ProcessTemplate& t) {
    EdgeAlphabet a;
    for (EdgeId e = 0; e < t.num_edges(); ++e) {
        const auto& edge = t.edge(e);
        a.edges.push_back({{t.state_name(edge.src)}, {t.label_name(edge.label)}, {t.state_name(edge.dst)}});
    }
    for (StateId s = 0; s < t.num_states(); ++s) a.states.push_back(t.state_name(s));
    a.letters.push_back("b");
    for (ActionId x = 0; x < t.num_actions(); ++x)
        for (std::uint32_t j = 1; j <= t.k(); ++j) a.letters.push_back(t.label_name(Label::of(x, j)));
    return a;
}

EdgeAlphabet timed_alphabet(const TimedTemplate& t, const Reduction& r) {
    EdgeAlphabet a = template_alphabet(r.rb);
    for (EdgeId e = 0; e < r.rb.num_edges(); ++e) {
        const auto& edge = r.rb.edge(e);
        auto& names = a.edges[e];
        names.src.push_back(t.states[r.state_origin[edge.src].first]);
        names.dst.push_back(t.states[r.state_origin[edge.dst].first]);
        if (!edge.label.is_broadcast()) {
            const auto& l = edge.label.letter();
            names.letter.push_back(r.orig_action_name(t, l.action) + "." + std::to_string(l.index));
        }
    }
    for (const auto& s : t.states) a.states.push_back(s);
    for (const auto& x : t.actions)
        for (std::uint32_t j = 1; j <= t.k; ++j) a.letters.push_back(x + "." + std::to_string(j));
    return a;
}

bool pattern_matches(const EdgePattern& p, const EdgeAlphabet::Names& edge) {
    if (p.any) return true;
    auto field = [](const std::string& want, const std::vector<std::string>& have) {
        return want.empty() || std::find(have.begin(), have.end(), want) != have.end();
    };
    return field(p.src, edge.src) && field(p.letter, edge.letter) && field(p.dst, edge.dst);
}

void check_spec_alphabet(const SpecAutomaton& s, const EdgeAlphabet& alphabet) {
    auto known = [](const std::string& x, const std::vector<std::string>& names) {
        return x.empty() || std::find(names.begin(), names.end(), x) != names.end();
    };
    for (const auto& tr : s.transitions) {
        const auto& p = tr.pattern;
        const std::string where = "spec line " + std::to_string(tr.line) + ": ";
        if (!known(p.src, alphabet.states)) throw Error(where + "unknown template state " + p.src);
        if (!known(p.dst, alphabet.states)) throw Error(where + "unknown template state " + p.dst);
        if (!known(p.letter, alphabet.letters)) throw Error(where + "unknown letter " + p.letter);
    }
}

BoundedCounterAutomaton intersect(const BoundedCounterAutomaton& a, const SpecAutomaton& s, const EdgeAlphabet& alphabet) {
    check_spec_alphabet(s, alphabet);
    std::vector<std::vector<std::size_t>> a_out(a.num_states()), s_out(s.states.size());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) a_out[a.transitions[i].src].push_back(i);
    for (std::size_t i = 0; i < s.transitions.size(); ++i) s_out[s.transitions[i].src].push_back(i);
    // matches[spec transition][letter]
    std::vector<std::vector<bool>> matches(s.transitions.size(), std::vector<bool>(alphabet.edges.size(), false));
    for (std::size_t i = 0; i < s.transitions.size(); ++i)
        for (std::size_t e = 0; e < alphabet.edges.size(); ++e)
            matches[i][e] = pattern_matches(s.transitions[i].pattern, alphabet.edges[e]);

    BoundedCounterAutomaton p;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    std::deque<std::size_t> queue;
    auto state = [&](std::size_t qa, std::size_t qs, bool init) {
        auto [it, fresh] = index.try_emplace({qa, qs}, p.num_states());
        if (fresh) {
            p.state_names.push_back("(" + a.state_names[qa] + "," + s.states[qs] + ")");
            p.initial.push_back(init);
            p.origin.emplace_back(qa, qs);
            queue.push_back(it->second);
        }
        return it->second;
    };
    for (std::size_t qa = 0; qa < a.num_states(); ++qa)
        if (a.initial[qa])
            for (std::size_t qs = 0; qs < s.states.size(); ++qs)
                if (s.initial[qs]) state(qa, qs, true);
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const auto [qa, qs] = p.origin[cur];
        for (std::size_t ta : a_out[qa]) {
            const auto& tr = a.transitions[ta];
            if (tr.letter >= alphabet.edges.size()) throw Error("spec alphabet does not cover the automaton's letters");
            for (std::size_t ts : s_out[qs])
                if (matches[ts][tr.letter]) {
                    const std::size_t dst = state(tr.dst, s.transitions[ts].dst, false);
                    p.transitions.push_back({cur, tr.letter, tr.op, dst});
                }
        }
    }
    for (const auto& set : a.buchi) {
        std::vector<bool> lifted(p.num_states());
        for (std::size_t i = 0; i < p.num_states(); ++i) lifted[i] = set[p.origin[i].first];
        p.buchi.push_back(std::move(lifted));
    }
    std::vector<bool> acc(p.num_states());
    for (std::size_t i = 0; i < p.num_states(); ++i) acc[i] = s.accepting[p.origin[i].second];
    p.buchi.push_back(std::move(acc));
    return p;
}

// ---------------------------------------------------------------------------
// Emptiness

namespace {

using Adj = std::vector<std::vector<std::size_t>>;  // per state: transition indices

// Iterative Tarjan restricted to `alive` states; returns component ids (SIZE_MAX for dead states).
std::vector<std::size_t> tarjan(const BoundedCounterAutomaton& a, const Adj& out, const std::vector<bool>& alive,
                                std::size_t& count) {
    const std::size_t n = a.num_states();
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, none), low(n, 0), comp(n, none);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next = 0;
    count = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (!alive[root] || index[root] != none) continue;
        std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
        index[root] = low[root] = next++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, i] = call.back();
            if (i < out[v].size()) {
                const std::size_t w = a.transitions[out[v][i++]].dst;
                if (!alive[w]) continue;
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
            const std::size_t done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                for (std::size_t w;;) {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                    if (w == done) break;
                }
                ++count;
            }
        }
    }
    return comp;
}

// Shortest path of allowed transitions from `from` to any state in `goal`, inside `inside`.
std::optional<std::vector<std::size_t>> bfs(const BoundedCounterAutomaton& a, const Adj& out, std::size_t from,
                                            const std::vector<bool>& goal, const std::vector<bool>& inside,
                                            const std::vector<bool>& allowed) {
    if (goal[from]) return std::vector<std::size_t>{};
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent(a.num_states(), none);
    std::vector<bool> seen(a.num_states(), false);
    std::deque<std::size_t> q{from};
    seen[from] = true;
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        for (std::size_t ti : out[v]) {
            if (!allowed[ti]) continue;
            const std::size_t w = a.transitions[ti].dst;
            if (seen[w] || !inside[w]) continue;
            seen[w] = true;
            parent[w] = ti;
            if (goal[w]) {
                std::vector<std::size_t> path;
                for (std::size_t x = w; x != from; x = a.transitions[parent[x]].src) path.push_back(parent[x]);
                std::reverse(path.begin(), path.end());
                return path;
            }
            q.push_back(w);
        }
    }
    return std::nullopt;
}

std::vector<bool> singleton(std::size_t n, std::size_t i) {
    std::vector<bool> v(n, false);
    v[i] = true;
    return v;
}

// Cycle from `start` through one member of every Büchi set, within `inside`
// using `allowed` transitions, starting with transition `first` when given.
std::vector<std::size_t> stitch_cycle(const BoundedCounterAutomaton& a, const Adj& out, std::size_t start,
                                      std::optional<std::size_t> first, const std::vector<bool>& inside,
                                      const std::vector<bool>& allowed) {
    std::vector<std::size_t> cycle;
    std::size_t cur = start;
    auto take = [&](std::size_t ti) {
        cycle.push_back(ti);
        cur = a.transitions[ti].dst;
    };
    if (first) take(*first);
    for (const auto& set : a.buchi) {
        bool hit = a.buchi.empty() || set[start];
        for (std::size_t ti : cycle) hit = hit || set[a.transitions[ti].dst];
        if (hit) continue;
        std::vector<bool> goal(a.num_states(), false);
        for (std::size_t i = 0; i < goal.size(); ++i) goal[i] = set[i] && inside[i];
        const auto path = bfs(a, out, cur, goal, inside, allowed).value();
        for (std::size_t ti : path) take(ti);
    }
    if (cycle.empty()) {
        // any internal transition keeps the cycle nonempty
        for (std::size_t ti : out[start])
            if (allowed[ti] && inside[a.transitions[ti].dst]) {
                take(ti);
                break;
            }
    }
    const auto back = bfs(a, out, cur, singleton(a.num_states(), start), inside, allowed).value();
    for (std::size_t ti : back) take(ti);
    return cycle;
}

}  // namespace

EmptinessResult emptiness(const BoundedCounterAutomaton& a) {
    const std::size_t n = a.num_states();
    Adj out(n);
    for (std::size_t i = 0; i < a.transitions.size(); ++i) out[a.transitions[i].src].push_back(i);

    // forward reachability with BFS parents for the prefix
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<bool> reach(n, false);
    std::vector<std::size_t> parent(n, none);
    std::deque<std::size_t> q;
    for (std::size_t s = 0; s < n; ++s)
        if (a.initial[s]) {
            reach[s] = true;
            q.push_back(s);
        }
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        for (std::size_t ti : out[v]) {
            const std::size_t w = a.transitions[ti].dst;
            if (!reach[w]) {
                reach[w] = true;
                parent[w] = ti;
                q.push_back(w);
            }
        }
    }
    EmptinessResult result;
    result.reachable = static_cast<std::size_t>(std::count(reach.begin(), reach.end(), true));
    auto prefix_to = [&](std::size_t s) {
        std::vector<std::size_t> path;
        for (std::size_t x = s; parent[x] != none; x = a.transitions[parent[x]].src) path.push_back(parent[x]);
        std::reverse(path.begin(), path.end());
        return path;
    };

    // Case A: all transitions, cycle through a reset. Case B: no increments at all.
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<bool> allowed(a.transitions.size(), true);
        if (pass == 1)
            for (std::size_t i = 0; i < a.transitions.size(); ++i)
                allowed[i] = a.transitions[i].op != CounterOp::Increment;
        Adj sub(n);
        for (std::size_t i = 0; i < a.transitions.size(); ++i)
            if (allowed[i]) sub[a.transitions[i].src].push_back(i);
        std::size_t count = 0;
        const auto comp = tarjan(a, sub, reach, count);
        if (pass == 0) result.sccs = count;
        for (std::size_t c = 0; c < count; ++c) {
            std::vector<bool> inside(n, false);
            std::optional<std::size_t> anchor;
            std::size_t first_state = none;
            for (std::size_t s = 0; s < n; ++s)
                if (comp[s] == c) {
                    inside[s] = true;
                    if (first_state == none) first_state = s;
                }
            bool internal = false;
            for (std::size_t i = 0; i < a.transitions.size(); ++i) {
                const auto& tr = a.transitions[i];
                if (!allowed[i] || comp[tr.src] != c || comp[tr.dst] != c) continue;
                internal = true;
                if (pass == 0 && tr.op == CounterOp::Reset && !anchor) anchor = i;
            }
            if (!internal || (pass == 0 && !anchor)) continue;
            bool all_sets = true;
            for (const auto& set : a.buchi) {
                bool hit = false;
                for (std::size_t s = 0; s < n && !hit; ++s) hit = inside[s] && set[s];
                all_sets = all_sets && hit;
            }
            if (!all_sets) continue;
            const std::size_t start = anchor ? a.transitions[*anchor].src : first_state;
            Lasso l{prefix_to(start), stitch_cycle(a, out, start, anchor, inside, allowed)};
            std::string why;
            if (!lasso_accepting(a, l, &why)) throw Error("internal: emptiness certificate rejected: " + why);
            result.lasso = std::move(l);
            return result;
        }
    }
    return result;
}

bool lasso_accepting(const BoundedCounterAutomaton& a, const Lasso& l, std::string* why) {
    auto fail = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    if (l.cycle.empty()) return fail("empty cycle");
    std::optional<std::size_t> cur;
    auto walk = [&](const std::vector<std::size_t>& part) {
        for (std::size_t ti : part) {
            if (ti >= a.transitions.size()) return false;
            const auto& tr = a.transitions[ti];
            if (!cur) {
                if (!a.initial[tr.src]) return false;
            } else if (*cur != tr.src) {
                return false;
            }
            cur = tr.dst;
        }
        return true;
    };
    if (!walk(l.prefix)) return fail("prefix is not a path from an initial state");
    const std::size_t start = cur ? *cur : a.transitions[l.cycle[0]].src;
    if (!cur && !a.initial[start]) return fail("cycle start is not initial");
    cur = start;
    if (!walk(l.cycle) || *cur != start) return fail("cycle does not return to its start");
    for (std::size_t i = 0; i < a.buchi.size(); ++i) {
        bool hit = false;
        for (std::size_t ti : l.cycle) hit = hit || a.buchi[i][a.transitions[ti].dst];
        if (!hit) return fail("cycle misses Büchi set " + std::to_string(i));
    }
    bool reset = false, inc = false;
    for (std::size_t ti : l.cycle) {
        reset = reset || a.transitions[ti].op == CounterOp::Reset;
        inc = inc || a.transitions[ti].op == CounterOp::Increment;
    }
    if (inc && !reset) return fail("cycle increments without resetting");
    return true;
}

bool accepts_lasso(const BoundedCounterAutomaton& a, std::span<const EdgeId> prefix, std::span<const EdgeId> cycle) {
    if (cycle.empty()) throw Error("accepts_lasso needs a nonempty cycle");
    std::vector<EdgeId> word(prefix.begin(), prefix.end());
    word.insert(word.end(), cycle.begin(), cycle.end());
    const std::size_t len = word.size();
    auto next = [&](std::size_t i) { return i + 1 < len ? i + 1 : prefix.size(); };
    std::vector<std::vector<std::size_t>> out(a.num_states());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) out[a.transitions[i].src].push_back(i);

    // product with the word positions
    BoundedCounterAutomaton p;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    std::deque<std::size_t> queue;
    auto state = [&](std::size_t q, std::size_t i, bool init) {
        auto [it, fresh] = index.try_emplace({q, i}, p.num_states());
        if (fresh) {
            p.state_names.push_back(a.state_names[q] + "@" + std::to_string(i));
            p.initial.push_back(init);
            p.origin.emplace_back(q, i);
            queue.push_back(it->second);
        }
        return it->second;
    };
    for (std::size_t q = 0; q < a.num_states(); ++q)
        if (a.initial[q]) state(q, 0, true);
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const auto [q, i] = p.origin[cur];
        for (std::size_t ti : out[q]) {
            const auto& tr = a.transitions[ti];
            if (tr.letter != word[i]) continue;
            p.transitions.push_back({cur, tr.letter, tr.op, state(tr.dst, next(i), false)});
        }
    }
    for (const auto& set : a.buchi) {
        std::vector<bool> lifted(p.num_states());
        for (std::size_t i = 0; i < p.num_states(); ++i) lifted[i] = set[p.origin[i].first];
        p.buchi.push_back(std::move(lifted));
    }
    return emptiness(p).lasso.has_value();
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

Verdict check_liveness(const ProcessTemplate& t, const SpecAutomaton& bad, const EdgeAlphabet& alphabet,
                       const CheckOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (bad.kind != SpecAutomaton::Kind::Nbw) throw Error("liveness needs an nbw spec");
    check_spec_alphabet(bad, alphabet);
    const auto u = build_unwinding(t);
    ClassifyOptions co;
    co.jobs = options.jobs;
    const auto colors = classify(u, co);
    const auto ainf = build_ainf(u, colors);
    const auto product = intersect(ainf, bad, alphabet);
    const auto res = emptiness(product);
    Verdict v;
    v.states = product.num_states();
    v.transitions = product.transitions.size();
    v.sccs = res.sccs;
    if (res.lasso) {
        v.holds = false;
        for (std::size_t ti : res.lasso->prefix) v.prefix.push_back(product.transitions[ti].letter);
        for (std::size_t ti : res.lasso->cycle) v.cycle.push_back(product.transitions[ti].letter);
    }
    v.ms = elapsed_ms(t0);
    return v;
}

Verdict check_liveness(const ProcessTemplate& t, const SpecAutomaton& bad, const CheckOptions& options) {
    return check_liveness(t, bad, template_alphabet(t), options);
}

Verdict check_safety(const ProcessTemplate& t, const SpecAutomaton& bad, const EdgeAlphabet& alphabet) {
    const auto t0 = std::chrono::steady_clock::now();
    if (bad.kind != SpecAutomaton::Kind::Nfw) throw Error("safety needs an nfw spec");
    check_spec_alphabet(bad, alphabet);
    const auto u = build_unwinding(t);
    const Nfa afin = build_afin(u);
    std::vector<std::vector<std::size_t>> a_out(afin.num_states), s_out(bad.states.size());
    for (std::size_t i = 0; i < afin.transitions.size(); ++i) a_out[afin.transitions[i].src].push_back(i);
    for (std::size_t i = 0; i < bad.transitions.size(); ++i) s_out[bad.transitions[i].src].push_back(i);

    // breadth-first search over pairs yields a shortest bad prefix
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::pair<std::size_t, EdgeId>> parent;  // (pair, letter)
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::deque<std::size_t> queue;
    auto visit = [&](std::size_t qa, std::size_t qs, std::size_t from, EdgeId letter) {
        auto [it, fresh] = index.try_emplace({qa, qs}, pairs.size());
        if (fresh) {
            pairs.emplace_back(qa, qs);
            parent.emplace_back(from, letter);
            queue.push_back(it->second);
        }
    };
    for (std::size_t qa = 0; qa < afin.num_states; ++qa)
        if (afin.initial[qa])
            for (std::size_t qs = 0; qs < bad.states.size(); ++qs)
                if (bad.initial[qs]) visit(qa, qs, none, 0);
    Verdict v;
    std::size_t transitions = 0;
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const auto [qa, qs] = pairs[cur];
        if (afin.accepting[qa] && bad.accepting[qs]) {
            v.holds = false;
            for (std::size_t x = cur; parent[x].first != none; x = parent[x].first) v.prefix.push_back(parent[x].second);
            std::reverse(v.prefix.begin(), v.prefix.end());
            break;
        }
        for (std::size_t ta : a_out[qa]) {
            const auto& tr = afin.transitions[ta];
            for (std::size_t ts : s_out[qs])
                if (pattern_matches(bad.transitions[ts].pattern, alphabet.edges.at(tr.letter))) {
                    ++transitions;
                    visit(tr.dst, bad.transitions[ts].dst, cur, tr.letter);
                }
        }
    }
    v.states = pairs.size();
    v.transitions = transitions;
    v.ms = elapsed_ms(t0);
    return v;
}

Verdict check_safety(const ProcessTemplate& t, const SpecAutomaton& bad) {
    return check_safety(t, bad, template_alphabet(t));
}

nlohmann::json verdict_json(const ProcessTemplate& t, const Verdict& v) {
    nlohmann::json cex = nullptr;
    if (!v.holds) {
        nlohmann::json prefix = nlohmann::json::array(), cycle = nlohmann::json::array();
        for (EdgeId e : v.prefix) prefix.push_back(t.edge_name(e));
        for (EdgeId e : v.cycle) cycle.push_back(t.edge_name(e));
        cex = {{"prefix", prefix}, {"cycle", cycle}};
    }
    return {{"status", v.holds ? "holds" : "violated"},
            {"counterexample", cex},
            {"realized_at_n", v.realized_at_n ? nlohmann::json(*v.realized_at_n) : nlohmann::json(nullptr)},
            {"stats", {{"states", v.states}, {"transitions", v.transitions}, {"sccs", v.sccs}, {"ms", v.ms}}}};
}

}  // namespace rbcheck
