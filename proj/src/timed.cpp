#include "rbcheck/timed.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rbcheck/error.hpp"
#include "rbcheck/template_io.hpp"

namespace rbcheck {

bool eval_guard(const Guard& g, const ClockValuation& v) {
    switch (g.kind) {
        case Guard::Kind::True: return true;
        case Guard::Kind::False: return false;
        case Guard::Kind::Lt:
        case Guard::Kind::Eq: {
            if (g.clock >= v.size()) throw Error("guard mentions undeclared clock " + std::to_string(g.clock));
            const auto x = v[g.clock];
            // kTop stands for every value above the cap, hence above any constant
            if (g.kind == Guard::Kind::Lt) return x == kTop || g.constant < x;
            return x != kTop && g.constant == x;
        }
        case Guard::Kind::And:
            return std::all_of(g.children.begin(), g.children.end(), [&](const Guard& c) { return eval_guard(c, v); });
        case Guard::Kind::Or:
            return std::any_of(g.children.begin(), g.children.end(), [&](const Guard& c) { return eval_guard(c, v); });
        case Guard::Kind::Not: return !eval_guard(g.children.at(0), v);
    }
    return false;
}

ClockValuation tick(const ClockValuation& v, const std::vector<std::uint32_t>& caps) {
    ClockValuation out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] == kTop || v[i] >= caps.at(i)) ? kTop : v[i] + 1;
    return out;
}

ClockValuation abstract_valuation(const std::vector<std::uint64_t>& concrete, const std::vector<std::uint32_t>& caps) {
    ClockValuation out(concrete.size());
    for (std::size_t i = 0; i < concrete.size(); ++i)
        out[i] = concrete[i] > caps.at(i) ? kTop : static_cast<std::uint32_t>(concrete[i]);
    return out;
}

std::optional<StateId> TimedTemplate::find_state(std::string_view name) const {
    for (StateId s = 0; s < states.size(); ++s)
        if (states[s] == name) return s;
    return std::nullopt;
}

std::optional<ClockId> TimedTemplate::find_clock(std::string_view name) const {
    for (ClockId c = 0; c < clocks.size(); ++c)
        if (clocks[c] == name) return c;
    return std::nullopt;
}

std::string TimedTemplate::edge_name(std::size_t e) const {
    const auto& edge = edges.at(e);
    return states[edge.src] + ":" + actions[edge.letter.action] + "." + std::to_string(edge.letter.index) + ":" +
           states[edge.dst];
}

namespace {

void max_constants(const Guard& g, std::vector<std::uint32_t>& out) {
    if (g.kind == Guard::Kind::Lt || g.kind == Guard::Kind::Eq) out.at(g.clock) = std::max(out.at(g.clock), g.constant);
    for (const auto& c : g.children) max_constants(c, out);
}

}  // namespace

std::vector<std::uint32_t> TimedTemplate::caps(std::optional<std::uint32_t> global_cap) const {
    std::vector<std::uint32_t> used(clocks.size(), 0);
    for (const auto& e : edges) max_constants(e.guard, used);
    std::vector<std::uint32_t> out(clocks.size());
    for (ClockId c = 0; c < clocks.size(); ++c) {
        out[c] = declared_max[c].value_or(used[c]);
        if (global_cap) {
            if (*global_cap < used[c])
                throw Error("cap " + std::to_string(*global_cap) + " is below constant " + std::to_string(used[c]) +
                            " compared against clock " + clocks[c]);
            out[c] = *global_cap;
        }
    }
    return out;
}

namespace {

struct SToken {
    std::string text;
    std::size_t column;
};

std::vector<SToken> tokenize_sexpr(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<SToken> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
        } else if (c == '(' || c == ')') {
            out.push_back({std::string(1, c), i + 1});
            ++i;
        } else {
            const std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '(' &&
                   line[i] != ')')
                ++i;
            out.push_back({std::string(line.substr(start, i - start)), start + 1});
        }
    }
    return out;
}

std::optional<std::uint32_t> parse_uint(std::string_view s) {
    std::uint32_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

class GuardParser {
public:
    GuardParser(const TimedTemplate& t, const std::vector<SToken>& tok, std::size_t& pos, std::size_t line)
        : t_(t), tok_(tok), pos_(pos), line_(line) {}

    Guard parse() {
        const auto& first = take("guard expression");
        if (first.text == "true") return Guard::truth(true);
        if (first.text == "false") return Guard::truth(false);
        if (first.text != "(") throw ParseError("expected 'true', 'false' or '('", line_, first.column);
        const auto& op = take("guard operator");
        Guard g;
        if (op.text == "lt" || op.text == "eq") {
            const auto& c = take("constant");
            auto value = parse_uint(c.text);
            if (!value) throw ParseError("expected a natural constant", line_, c.column);
            const auto& x = take("clock");
            auto clock = t_.find_clock(x.text);
            if (!clock) throw ParseError("undeclared clock '" + x.text + "'", line_, x.column);
            if (auto bound = t_.declared_max[*clock]; bound && *value > *bound)
                throw ParseError("constant exceeds the declared max of clock " + x.text, line_, c.column);
            g = op.text == "lt" ? Guard::lt(*value, *clock) : Guard::eq(*value, *clock);
        } else if (op.text == "and" || op.text == "or" || op.text == "not") {
            g.kind = op.text == "and" ? Guard::Kind::And : op.text == "or" ? Guard::Kind::Or : Guard::Kind::Not;
            while (peek() != ")") {
                if (peek().empty()) throw ParseError("unbalanced parenthesis", line_, end_column());
                g.children.push_back(parse());
            }
            if (g.children.empty() || (g.kind == Guard::Kind::Not && g.children.size() != 1))
                throw ParseError("wrong number of operands for '" + op.text + "'", line_, op.column);
        } else {
            throw ParseError("unknown guard operator '" + op.text + "'", line_, op.column);
        }
        const auto& close = take("')'");
        if (close.text != ")") throw ParseError("expected ')'", line_, close.column);
        return g;
    }

private:
    const SToken& take(const char* what) {
        if (pos_ >= tok_.size()) throw ParseError(std::string("expected ") + what, line_, end_column());
        return tok_[pos_++];
    }
    std::string peek() const { return pos_ < tok_.size() ? tok_[pos_].text : std::string{}; }
    std::size_t end_column() const {
        return tok_.empty() ? 1 : tok_.back().column + tok_.back().text.size();
    }

    const TimedTemplate& t_;
    const std::vector<SToken>& tok_;
    std::size_t& pos_;
    std::size_t line_;
};

}  // namespace

TimedTemplate parse_timed_template(std::string_view text) {
    TimedTemplate t;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool seen_system = false, seen_k = false;
    std::vector<std::string> edge_keys;

    while (std::getline(in, line)) {
        ++lineno;
        auto tok = tokenize_sexpr(line);
        if (tok.empty()) continue;
        const auto& kw = tok[0].text;
        auto expect_size = [&](std::size_t n, const char* usage) {
            if (tok.size() != n) throw ParseError(std::string("expected '") + usage + "'", lineno, tok[0].column);
        };
        if (!seen_system) {
            if (kw != "system" || tok.size() != 2 || tok[1].text != "timed")
                throw ParseError("expected 'system timed'", lineno, tok[0].column);
            seen_system = true;
            continue;
        }
        if (kw == "k") {
            if (seen_k) throw ParseError("duplicate 'k' line", lineno, tok[0].column);
            expect_size(2, "k <n>");
            auto v = parse_uint(tok[1].text);
            if (!v || *v < 2) throw ParseError("k must be an integer >= 2", lineno, tok[1].column);
            t.k = *v;
            seen_k = true;
            continue;
        }
        if (!seen_k) throw ParseError("'k' must be declared first", lineno, tok[0].column);
        if (kw == "clock") {
            if (tok.size() != 2 && tok.size() != 4) throw ParseError("expected 'clock <name> [max <c>]'", lineno, tok[0].column);
            if (!is_identifier(tok[1].text)) throw ParseError("invalid clock name", lineno, tok[1].column);
            if (t.find_clock(tok[1].text)) throw ParseError("duplicate clock '" + tok[1].text + "'", lineno, tok[1].column);
            std::optional<std::uint32_t> bound;
            if (tok.size() == 4) {
                if (tok[2].text != "max") throw ParseError("expected 'max'", lineno, tok[2].column);
                bound = parse_uint(tok[3].text);
                if (!bound) throw ParseError("expected a natural constant", lineno, tok[3].column);
            }
            t.clocks.push_back(tok[1].text);
            t.declared_max.push_back(bound);
        } else if (kw == "state") {
            if (tok.size() < 2 || tok.size() > 3) throw ParseError("expected 'state <name> [init]'", lineno, tok[0].column);
            const auto& name = tok[1].text;
            if (!is_identifier(name) || name == "b") throw ParseError("invalid state name '" + name + "'", lineno, tok[1].column);
            if (t.find_state(name)) throw ParseError("duplicate state '" + name + "'", lineno, tok[1].column);
            if (tok.size() == 3 && tok[2].text != "init")
                throw ParseError("unknown state flag '" + tok[2].text + "'", lineno, tok[2].column);
            t.states.push_back(name);
            t.initial.push_back(tok.size() == 3);
        } else if (kw == "edge") {
            if (tok.size() < 4) throw ParseError("expected 'edge <src> <label> <dst> [guard G] [reset R]'", lineno, tok[0].column);
            TimedEdge e;
            auto src = t.find_state(tok[1].text);
            if (!src) throw ParseError("unknown state '" + tok[1].text + "'", lineno, tok[1].column);
            auto dst = t.find_state(tok[3].text);
            if (!dst) throw ParseError("unknown state '" + tok[3].text + "'", lineno, tok[3].column);
            e.src = *src;
            e.dst = *dst;
            const auto& lab = tok[2].text;
            const auto dot = lab.rfind('.');
            if (dot == std::string::npos) throw ParseError("expected '<action>.<index>'", lineno, tok[2].column);
            const auto action = lab.substr(0, dot);
            if (!is_identifier(action) || action == "b") throw ParseError("invalid action name '" + action + "'", lineno, tok[2].column);
            auto idx = parse_uint(std::string_view(lab).substr(dot + 1));
            if (!idx || *idx < 1 || *idx > t.k)
                throw ParseError("letter index must be in 1.." + std::to_string(t.k), lineno, tok[2].column + dot + 1);
            auto it = std::find(t.actions.begin(), t.actions.end(), action);
            if (it == t.actions.end()) it = t.actions.insert(t.actions.end(), action);
            e.letter = Letter{static_cast<ActionId>(it - t.actions.begin()), *idx};

            std::size_t pos = 4;
            if (pos < tok.size() && tok[pos].text == "guard") {
                ++pos;
                e.guard = GuardParser(t, tok, pos, lineno).parse();
            }
            if (pos < tok.size() && tok[pos].text == "reset") {
                ++pos;
                if (pos < tok.size() && tok[pos].text == "-") {
                    ++pos;
                } else {
                    if (pos >= tok.size()) throw ParseError("expected '-' or clock names after 'reset'", lineno, tok.back().column);
                    for (; pos < tok.size(); ++pos) {
                        auto c = t.find_clock(tok[pos].text);
                        if (!c) throw ParseError("undeclared clock '" + tok[pos].text + "'", lineno, tok[pos].column);
                        if (std::find(e.resets.begin(), e.resets.end(), *c) == e.resets.end()) e.resets.push_back(*c);
                    }
                    std::sort(e.resets.begin(), e.resets.end());
                }
            }
            if (pos < tok.size()) throw ParseError("unexpected '" + tok[pos].text + "'", lineno, tok[pos].column);
            t.edges.push_back(std::move(e));
            std::ostringstream key;
            key << t.edge_name(t.edges.size() - 1) << "|" << guard_text(t, t.edges.back().guard);
            for (auto c : t.edges.back().resets) key << "|" << c;
            if (std::find(edge_keys.begin(), edge_keys.end(), key.str()) != edge_keys.end())
                throw ParseError("duplicate edge", lineno, tok[0].column);
            edge_keys.push_back(key.str());
        } else {
            throw ParseError("unknown directive '" + kw + "'", lineno, tok[0].column);
        }
    }
    if (!seen_system) throw ParseError("empty template", std::max<std::size_t>(lineno, 1));
    if (!seen_k) throw ParseError("missing 'k' line", std::max<std::size_t>(lineno, 1));
    if (t.states.empty()) throw ParseError("no states declared", std::max<std::size_t>(lineno, 1));
    if (std::none_of(t.initial.begin(), t.initial.end(), [](bool b) { return b; }))
        throw ParseError("no initial state", std::max<std::size_t>(lineno, 1));
    return t;
}

TimedTemplate load_timed_template(const std::filesystem::path& path) { return parse_timed_template(read_file(path)); }

std::string guard_text(const TimedTemplate& t, const Guard& g) {
    switch (g.kind) {
        case Guard::Kind::True: return "true";
        case Guard::Kind::False: return "false";
        case Guard::Kind::Lt: return "(lt " + std::to_string(g.constant) + " " + t.clocks.at(g.clock) + ")";
        case Guard::Kind::Eq: return "(eq " + std::to_string(g.constant) + " " + t.clocks.at(g.clock) + ")";
        default: break;
    }
    std::string out = g.kind == Guard::Kind::And ? "(and" : g.kind == Guard::Kind::Or ? "(or" : "(not";
    for (const auto& c : g.children) out += " " + guard_text(t, c);
    return out + ")";
}

std::string valuation_text(const TimedTemplate& t, const ClockValuation& v) {
    std::string out;
    for (ClockId c = 0; c < v.size(); ++c)
        out += "__" + t.clocks.at(c) + "_" + (v[c] == kTop ? std::string("T") : std::to_string(v[c]));
    return out;
}

const std::string& Reduction::orig_action_name(const TimedTemplate& t, ActionId reduced) const {
    return t.actions.at(actions.at(reduced).orig_action);
}

Reduction reduce_to_rb(const TimedTemplate& t, const ReduceOptions& options) {
    Reduction r;
    r.caps = t.caps(options.global_cap);

    // all valuations, first clock most significant, kTop after the cap
    std::size_t count = 1;
    for (auto c : r.caps) {
        if (count > options.max_states) break;
        count *= static_cast<std::size_t>(c) + 2;
    }
    const std::size_t total = count > options.max_states ? count : count * t.states.size();
    if (count > options.max_states || total > options.max_states)
        throw BudgetExceeded("reduced template would have at least " + std::to_string(total) +
                             " states, above the cap of " + std::to_string(options.max_states));
    std::vector<ClockValuation> vals;
    ClockValuation v(r.caps.size(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        vals.push_back(v);
        for (std::size_t c = r.caps.size(); c-- > 0;) {
            if (v[c] == kTop) {
                v[c] = 0;
                continue;
            }
            v[c] = v[c] == r.caps[c] ? kTop : v[c] + 1;
            break;
        }
    }
    auto val_index = [&](const ClockValuation& x) {
        std::size_t idx = 0;
        for (std::size_t c = 0; c < x.size(); ++c)
            idx = idx * (r.caps[c] + 2) + (x[c] == kTop ? r.caps[c] + 1 : x[c]);
        return idx;
    };

    r.rb = ProcessTemplate(t.k, false);
    auto state_id = [&](StateId q, std::size_t vi) { return static_cast<StateId>(q * count + vi); };
    for (StateId q = 0; q < t.states.size(); ++q)
        for (std::size_t vi = 0; vi < count; ++vi) {
            const bool zero = std::all_of(vals[vi].begin(), vals[vi].end(), [](auto x) { return x == 0; });
            r.rb.add_state(t.states[q] + valuation_text(t, vals[vi]), t.initial[q] && zero);
            r.state_origin.emplace_back(q, vals[vi]);
        }
    for (StateId q = 0; q < t.states.size(); ++q)
        for (std::size_t vi = 0; vi < count; ++vi)
            r.rb.add_edge(state_id(q, vi), Label::broadcast(), state_id(q, val_index(tick(vals[vi], r.caps))));

    struct Inst {
        std::size_t edge;
        std::size_t val;
    };
    for (ActionId a = 0; a < t.actions.size(); ++a) {
        std::vector<std::vector<Inst>> per_letter(t.k);
        for (std::size_t e = 0; e < t.edges.size(); ++e) {
            const auto& edge = t.edges[e];
            if (edge.letter.action != a) continue;
            for (std::size_t vi = 0; vi < count; ++vi)
                if (eval_guard(edge.guard, vals[vi])) per_letter[edge.letter.index - 1].push_back({e, vi});
        }
        std::size_t combos = 1;
        for (const auto& l : per_letter) {
            combos *= l.size();
            if (combos > options.max_actions) break;
        }
        if (combos == 0) continue;
        if (r.actions.size() + combos > options.max_actions)
            throw BudgetExceeded("reduction needs more than " + std::to_string(options.max_actions) +
                                 " relabelled actions");
        std::vector<std::size_t> pick(t.k, 0);
        for (std::size_t n = 1; n <= combos; ++n) {
            RelabeledAction ra;
            ra.name = t.actions[a] + "__" + std::to_string(n);
            ra.orig_action = a;
            const ActionId id = r.rb.add_action(ra.name);
            if (id != r.actions.size()) throw Error("relabelled action name " + ra.name + " collides with an input action");
            for (std::uint32_t j = 0; j < t.k; ++j) {
                const auto& inst = per_letter[j][pick[j]];
                const auto& edge = t.edges[inst.edge];
                ClockValuation after = vals[inst.val];
                for (ClockId c : edge.resets) after[c] = 0;
                ra.timed_edges.push_back(inst.edge);
                ra.letter_edges.push_back(r.rb.add_edge(state_id(edge.src, inst.val), Label::of(id, j + 1),
                                                        state_id(edge.dst, val_index(after))));
            }
            r.actions.push_back(std::move(ra));
            for (std::size_t j = t.k; j-- > 0;) {
                if (++pick[j] < per_letter[j].size()) break;
                pick[j] = 0;
            }
        }
    }
    return r;
}

nlohmann::json relabel_json(const TimedTemplate& t, const Reduction& r) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& a : r.actions) {
        nlohmann::json edges = nlohmann::json::array();
        for (EdgeId e : a.letter_edges) edges.push_back(r.rb.edge_name(e));
        out[a.name] = {{"orig_action", t.actions.at(a.orig_action)}, {"letter_edges", edges}};
    }
    return out;
}

}  // namespace rbcheck
