#include "rbcheck/ratvas.hpp"

#include <atomic>
#include <map>
#include <sstream>

#include "rbcheck/error.hpp"

namespace rbcheck {

CounterVector counter_rep(const Configuration& f) {
    CounterVector out;
    out.reserve(f.num_states());
    for (auto c : f.counts()) out.emplace_back(c);
    return out;
}

ActionEffect action_effect(const ProcessTemplate& t, ActionId action, std::span<const EdgeId> allowed) {
    if (action >= t.num_actions()) throw Error("unknown action id " + std::to_string(action));
    std::vector<bool> ok(t.num_edges(), allowed.empty());
    for (EdgeId e : allowed) ok.at(e) = true;

    ActionEffect eff{action, std::vector<std::int64_t>(t.num_states(), 0), {}};
    for (std::uint32_t j = 1; j <= t.k(); ++j) {
        std::optional<EdgeId> found;
        for (EdgeId e : t.letter_edges(Letter{action, j})) {
            if (!ok[e]) continue;
            if (found)
                throw Error("letter " + t.action_name(action) + "." + std::to_string(j) + " labels more than one edge");
            found = e;
        }
        if (!found) throw Error("action " + t.action_name(action) + " has no edge for letter " + std::to_string(j));
        const auto& edge = t.edge(*found);
        eff.delta[edge.src] -= 1;
        eff.delta[edge.dst] += 1;
        eff.letter_edges.push_back(*found);
    }
    return eff;
}

bool is_legal(const RationalPath& path) {
    CounterVector cur = path.origin;
    for (const auto& x : cur)
        if (sgn(x) < 0) return false;
    for (const auto& d : path.displacements) {
        if (d.size() != cur.size()) throw Error("displacement dimension mismatch");
        for (std::size_t i = 0; i < cur.size(); ++i) {
            cur[i] += d[i];
            if (sgn(cur[i]) < 0) return false;
        }
    }
    return true;
}

VarId LinearSystem::add_variable(std::string name) {
    names_.push_back(std::move(name));
    lower_.push_back(false);
    pinned_.push_back(false);
    return static_cast<VarId>(names_.size() - 1);
}

void LinearSystem::add_equality(std::vector<Term> terms, Rational rhs, std::string label) {
    for (auto& term : terms) {
        if (term.var >= names_.size()) throw Error("equality references unknown variable");
        term.coeff.canonicalize();
    }
    rhs.canonicalize();
    rows_.push_back(Equality{std::move(terms), std::move(rhs), std::move(label)});
}

void LinearSystem::require_at_least_one(VarId v) { lower_.at(v) = true; }
void LinearSystem::pin_zero(VarId v) { pinned_.at(v) = true; }

std::optional<VarId> LinearSystem::find_variable(std::string_view name) const {
    for (VarId v = 0; v < names_.size(); ++v)
        if (names_[v] == name) return v;
    return std::nullopt;
}

bool LinearSystem::satisfied_by(std::span<const Rational> x) const {
    if (x.size() != names_.size()) return false;
    for (VarId v = 0; v < x.size(); ++v) {
        if (sgn(x[v]) < 0) return false;
        if (pinned_[v] && sgn(x[v]) != 0) return false;
        if (lower_[v] && x[v] < 1) return false;
    }
    for (const auto& row : rows_) {
        Rational lhs = 0;
        for (const auto& term : row.terms) lhs += term.coeff * x[term.var];
        if (lhs != row.rhs) return false;
    }
    return true;
}

namespace {

std::atomic<std::uint64_t> g_solves{0};
std::atomic<std::uint64_t> g_feasible{0};
std::atomic<std::uint64_t> g_checked{0};
std::atomic<std::uint64_t> g_failures{0};

void check_solution(const LinearSystem& sys, const Solution& x) {
    ++g_checked;
    if (!sys.satisfied_by(x)) {
        ++g_failures;
        throw Error("internal: solver returned a point violating the system");
    }
}

// Phase-1 simplex on A x = b, x >= 0, with one implicit artificial per row.
// Artificial columns are never stored: once an artificial leaves the basis it
// cannot re-enter, which is the usual way to drop them.
std::optional<std::vector<Rational>> phase_one(std::vector<std::vector<Rational>> a, std::vector<Rational> b,
                                               std::size_t n) {
    const std::size_t m = a.size();
    constexpr std::size_t artificial = static_cast<std::size_t>(-1);
    std::vector<std::size_t> basis(m, artificial);
    std::vector<Rational> cost(n, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (sgn(a[i][j]) != 0) cost[j] -= a[i][j];
    auto basis_key = [&](std::size_t i) { return basis[i] == artificial ? n + i : basis[i]; };

    for (;;) {
        std::size_t enter = n;
        for (std::size_t j = 0; j < n; ++j)
            if (sgn(cost[j]) < 0) {
                enter = j;
                break;
            }
        if (enter == n) break;

        std::size_t leave = m;
        Rational best;
        for (std::size_t i = 0; i < m; ++i) {
            if (sgn(a[i][enter]) <= 0) continue;
            Rational ratio = b[i] / a[i][enter];
            if (leave == m || ratio < best || (ratio == best && basis_key(i) < basis_key(leave))) {
                leave = i;
                best = std::move(ratio);
            }
        }
        // A negative reduced cost with no positive entry would mean an
        // unbounded phase-1 objective, which cannot happen (it is bounded by 0).
        if (leave == m) throw Error("internal: unbounded phase-one objective");

        const Rational piv = a[leave][enter];
        for (auto& x : a[leave])
            if (sgn(x) != 0) x /= piv;
        b[leave] /= piv;
        const auto& prow = a[leave];
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave || sgn(a[i][enter]) == 0) continue;
            const Rational f = a[i][enter];
            for (std::size_t j = 0; j < n; ++j)
                if (sgn(prow[j]) != 0) a[i][j] -= f * prow[j];
            b[i] -= f * b[leave];
        }
        const Rational f = cost[enter];
        for (std::size_t j = 0; j < n; ++j)
            if (sgn(prow[j]) != 0) cost[j] -= f * prow[j];
        basis[leave] = enter;
    }

    std::vector<Rational> x(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] == artificial) {
            if (sgn(b[i]) != 0) return std::nullopt;
        } else {
            x[basis[i]] = b[i];
        }
    }
    return x;
}

}  // namespace

std::optional<Solution> lp_feasible(const LinearSystem& sys) {
    ++g_solves;
    const std::size_t nv = sys.num_variables();
    std::vector<std::size_t> column(nv, static_cast<std::size_t>(-1));
    std::vector<VarId> var_of;
    for (VarId v = 0; v < nv; ++v) {
        if (sys.pinned(v) && sys.at_least_one(v)) return std::nullopt;
    }
    for (VarId v = 0; v < nv; ++v)
        if (!sys.pinned(v)) {
            column[v] = var_of.size();
            var_of.push_back(v);
        }
    const std::size_t n = var_of.size();

    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;
    for (const auto& row : sys.equalities()) {
        std::vector<Rational> coeffs(n, 0);
        Rational rhs = row.rhs;
        bool any = false;
        for (const auto& term : row.terms) {
            if (sys.pinned(term.var)) continue;
            // x = x' + 1 for variables bounded below by one
            if (sys.at_least_one(term.var)) rhs -= term.coeff;
            coeffs[column[term.var]] += term.coeff;
        }
        for (const auto& c : coeffs)
            if (sgn(c) != 0) any = true;
        if (!any) {
            if (sgn(rhs) != 0) return std::nullopt;
            continue;
        }
        if (sgn(rhs) < 0) {
            for (auto& c : coeffs) c = -c;
            rhs = -rhs;
        }
        a.push_back(std::move(coeffs));
        b.push_back(std::move(rhs));
    }

    auto shifted = phase_one(std::move(a), std::move(b), n);
    if (!shifted) return std::nullopt;
    Solution x(nv, 0);
    for (std::size_t c = 0; c < n; ++c) {
        const VarId v = var_of[c];
        x[v] = (*shifted)[c];
        if (sys.at_least_one(v)) x[v] += 1;
    }
    ++g_feasible;
    check_solution(sys, x);
    return x;
}

std::optional<SupportSolution> max_support_solution(const LinearSystem& sys) {
    auto base = lp_feasible(sys);
    if (!base) return std::nullopt;
    const std::size_t nv = sys.num_variables();
    SupportSolution out{*base, std::vector<bool>(nv, false)};
    for (VarId v = 0; v < nv; ++v) out.support[v] = sgn(out.solution[v]) > 0;
    for (VarId v = 0; v < nv; ++v) {
        if (out.support[v] || sys.pinned(v)) continue;
        LinearSystem probe = sys;
        probe.require_at_least_one(v);
        auto sol = lp_feasible(probe);
        if (!sol) continue;
        for (VarId u = 0; u < nv; ++u) {
            out.solution[u] += (*sol)[u];
            if (sgn(out.solution[u]) > 0) out.support[u] = true;
        }
    }
    check_solution(sys, out.solution);
    return out;
}

std::vector<Integer> integer_scale(std::span<const Rational> x) {
    Integer l = 1;
    for (const auto& q : x) {
        Integer d = q.get_den();
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
    }
    std::vector<Integer> out;
    out.reserve(x.size());
    for (const auto& q : x) {
        Rational s = q * Rational(l);
        out.push_back(s.get_num());
    }
    return out;
}

SolverStats solver_stats() { return SolverStats{g_solves.load(), g_feasible.load(), g_checked.load(), g_failures.load()}; }

std::string dump_lp(const LinearSystem& sys) {
    std::ostringstream out;
    out << "feasibility\nsubject to\n";
    std::size_t idx = 0;
    for (const auto& row : sys.equalities()) {
        out << "  " << (row.label.empty() ? "c" + std::to_string(idx) : row.label) << ":";
        if (row.terms.empty()) out << " 0";
        for (const auto& term : row.terms) {
            out << (sgn(term.coeff) < 0 ? " - " : " + ");
            Rational mag = abs(term.coeff);
            if (mag != 1) out << mag.get_str() << " ";
            out << sys.name(term.var);
        }
        out << " = " << row.rhs.get_str() << "\n";
        ++idx;
    }
    out << "bounds\n";
    for (VarId v = 0; v < sys.num_variables(); ++v) {
        if (sys.pinned(v))
            out << "  " << sys.name(v) << " = 0\n";
        else
            out << "  " << sys.name(v) << (sys.at_least_one(v) ? " >= 1\n" : " >= 0\n");
    }
    out << "end\n";
    return out.str();
}

}  // namespace rbcheck
