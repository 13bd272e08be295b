// rbcheck: command-line front end. Exit codes: 0 holds / success,
// 1 property violated, 2 usage, parse or internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbcheck/bautomata.hpp"
#include "rbcheck/classifier.hpp"
#include "rbcheck/error.hpp"
#include "rbcheck/oracle.hpp"
#include "rbcheck/template_io.hpp"
#include "rbcheck/timed.hpp"
#include "rbcheck/unwinding.hpp"

using namespace rbcheck;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kViolated = 1, kFailure = 2 };

/// Usage errors detected after CLI11 parsing (unknown edge ids and the like).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Manifest {
    json doc = json::object();
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void stage(const std::string& name) {
        auto now = std::chrono::steady_clock::now();
        doc["stages"].push_back({{"name", name}, {"ms", std::chrono::duration<double, std::milli>(now - t0).count()}});
        t0 = now;
    }
};

Manifest g_manifest;
/// File being read, for error messages.
std::string g_reading;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

void emit(const json& j, const std::string& json_path) {
    const std::string text = j.dump(2) + "\n";
    if (!json_path.empty()) write_file(json_path, text);
    std::cout << text;
}

std::vector<std::string> split_ids(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty() || s == "-") return out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<EdgeId> parse_word(const ProcessTemplate& t, const std::string& text) {
    std::vector<EdgeId> out;
    for (const auto& id : split_ids(text)) {
        auto e = t.find_edge(id);
        if (!e) throw UsageError("unknown edge id '" + id + "'");
        out.push_back(*e);
    }
    return out;
}

struct BudgetFlags {
    SearchBudget b;

    void add(CLI::App* cmd) {
        cmd->add_option("--max-n", b.max_n, "largest instance size searched")->capture_default_str();
        cmd->add_option("--max-depth", b.max_depth, "longest run searched")->capture_default_str();
        cmd->add_option("--max-states", b.max_states, "vertex cap per instance size")->capture_default_str();
        cmd->add_option("--max-ms", b.max_ms, "wall-clock budget in milliseconds")->capture_default_str();
    }

    SearchBudget resolved() const {
        SearchBudget out = b;
        if (const char* env = std::getenv("RBCHECK_BUDGET_MS")) {
            try {
                out.max_ms = std::stoul(env);
            } catch (const std::exception&) {
                throw UsageError(std::string("RBCHECK_BUDGET_MS is not a number: ") + env);
            }
        }
        return out;
    }
};

json budget_json(const SearchBudget& b) {
    return {{"max_n", b.max_n}, {"max_depth", b.max_depth}, {"max_states", b.max_states}, {"max_ms", b.max_ms}};
}

json config_json(const ProcessTemplate& t, const Configuration& f) {
    json out = json::object();
    for (const auto& [p, s] : f.assignment()) out[std::to_string(p)] = t.state_name(s);
    return out;
}

json path_json(const ProcessTemplate& t, const Path& p) {
    json steps = json::array();
    for (const auto& s : p.steps) {
        json moves = json::array();
        for (const auto& m : s.moves) moves.push_back({{"process", m.process}, {"edge", t.edge_name(m.edge)}});
        steps.push_back({{"kind", s.broadcast ? "broadcast" : "rendezvous"}, {"moves", moves}});
    }
    return {{"start", config_json(t, p.start)}, {"steps", steps}, {"end", config_json(t, p.end())}};
}

json word_json(const ProcessTemplate& t, std::span<const EdgeId> w) {
    json out = json::array();
    for (EdgeId e : w) out.push_back(t.edge_name(e));
    return out;
}

/// A template file of either kind; timed inputs are reduced on load.
struct Input {
    std::optional<TimedTemplate> timed;
    std::optional<Reduction> reduction;
    ProcessTemplate rb;

    const ProcessTemplate& plain() const { return reduction ? reduction->rb : rb; }
};

Input load_input(const std::string& path, const ReduceOptions& ro = {}) {
    g_manifest.doc["inputs"].push_back(path);
    g_reading = path;
    const std::string text = read_file(path);
    Input in;
    if (system_kind(text) == "timed") {
        in.timed = parse_timed_template(text);
        in.reduction = reduce_to_rb(*in.timed, ro);
        g_manifest.stage("reduce");
    } else {
        in.rb = parse_template(text);
        g_manifest.stage("parse");
    }
    return in;
}

std::vector<std::size_t> resolve_edges(const Unwinding& u, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    for (const auto& id : ids) {
        auto e = u.find_edge(id);
        if (!e) throw UsageError("unknown unwinding edge id '" + id + "'");
        out.push_back(*e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_reduce(const std::string& file, const std::string& out_path, const std::string& map_path, const ReduceOptions& ro) {
    g_manifest.doc["inputs"].push_back(file);
    g_reading = file;
    auto t = load_timed_template(file);
    auto r = reduce_to_rb(t, ro);
    g_manifest.stage("reduce");
    const std::string text = write_template(r.rb);
    if (out_path.empty()) std::cout << text;
    else write_file(out_path, text);
    if (!map_path.empty()) write_file(map_path, relabel_json(t, r).dump(2) + "\n");
    g_manifest.doc["result"] = {{"states", r.rb.num_states()}, {"actions", r.rb.num_actions()}, {"edges", r.rb.num_edges()}};
    return kOk;
}

int cmd_unwind(const std::string& file, const std::string& dot_path, const std::string& json_path) {
    auto in = load_input(file);
    auto u = build_unwinding(in.plain());
    g_manifest.stage("unwind");
    if (!dot_path.empty()) write_file(dot_path, unwinding_dot(u));
    emit(unwinding_json(u), json_path);
    return kOk;
}

int cmd_classify(const std::string& file, const std::vector<std::string>& edges, bool per_edge, unsigned jobs,
                 const std::string& dot_path, const std::string& json_path) {
    auto in = load_input(file);
    auto u = build_unwinding(in.plain());
    g_manifest.stage("unwind");
    ClassifyOptions opts;
    opts.jobs = jobs;
    opts.per_edge = per_edge;
    opts.only = resolve_edges(u, edges);
    auto c = classify(u, opts);
    g_manifest.stage("classify");
    if (!dot_path.empty()) write_file(dot_path, classification_dot(u, c));
    emit({{"n", u.n()}, {"r", u.r()}, {"m", u.m()}, {"edges", classification_json(u, c)}}, json_path);
    return kOk;
}

int cmd_check(bool liveness, const std::string& file, const std::string& spec_path, unsigned jobs,
              const BudgetFlags& flags, bool realize, const std::string& json_path) {
    auto in = load_input(file);
    g_manifest.doc["inputs"].push_back(spec_path);
    g_reading = spec_path;
    auto spec = load_spec(spec_path);
    const auto& t = in.plain();
    const auto alphabet = in.timed ? timed_alphabet(*in.timed, *in.reduction) : template_alphabet(t);
    CheckOptions co;
    co.jobs = jobs;
    Verdict v = liveness ? check_liveness(t, spec, alphabet, co) : check_safety(t, spec, alphabet);
    g_manifest.stage(liveness ? "liveness" : "safety");
    if (!v.holds && realize) {
        const auto budget = flags.resolved();
        if (liveness) {
            if (auto r = realize_lasso(t, v.prefix, v.cycle, budget)) v.realized_at_n = r->n;
        } else if (auto r = find_word_run(t, v.prefix, budget)) {
            v.realized_at_n = r->n;
        }
        g_manifest.stage("realize");
    }
    json j = verdict_json(t, v);
    // Timings live in the manifest so that the verdict is byte-stable.
    j["stats"].erase("ms");
    g_manifest.doc["result"] = j["status"];
    emit(j, json_path);
    return v.holds ? kOk : kViolated;
}

int cmd_pseudo_cycle(const std::string& file, const std::string& edge, std::optional<std::size_t> n,
                     const std::string& kind_name, const BudgetFlags& flags, const std::string& json_path) {
    auto in = load_input(file);
    auto u = build_unwinding(in.plain());
    auto e = resolve_edges(u, {edge}).front();
    CycleKind kind = CycleKind::Any;
    if (kind_name == "broadcast-free") kind = CycleKind::BroadcastFree;
    else if (kind_name == "with-broadcast") kind = CycleKind::WithBroadcast;
    const auto budget = flags.resolved();
    const std::size_t lo = n ? *n : 1, hi = n ? *n : budget.max_n;
    bool truncated = false;
    std::optional<FoundCycle> found;
    for (std::size_t size = lo; size <= hi && !found; ++size) {
        auto r = find_pseudo_cycle(u, e, size, budget, kind);
        truncated = truncated || r.truncated;
        found = r.found;
    }
    g_manifest.stage("search");
    const auto& lt = u.as_template();
    json j = {{"query", "pseudo-cycle"}, {"edge", edge}, {"kind", kind_name}, {"budget", budget_json(budget)},
              {"found", found.has_value()}, {"truncated", truncated}};
    if (found) {
        j["n"] = found->n;
        j["broadcasts"] = found->broadcasts;
        j["prefix"] = path_json(lt, found->prefix);
        j["cycle"] = path_json(lt, found->cycle);
    }
    emit(j, json_path);
    return kOk;
}

int cmd_exec_fin(const std::string& file, std::size_t n, std::size_t max_len, const BudgetFlags& flags,
                 const std::string& json_path) {
    auto in = load_input(file);
    const auto& t = in.plain();
    const auto budget = flags.resolved();
    auto ws = exec_fin(t, n, max_len, budget);
    g_manifest.stage("search");
    json words = json::array();
    for (const auto& w : ws.words) words.push_back(word_json(t, w));
    emit({{"query", "exec-fin"}, {"n", n}, {"max_len", max_len}, {"budget", budget_json(budget)},
          {"truncated", ws.truncated}, {"words", words}},
         json_path);
    return kOk;
}

int cmd_realize(const std::string& file, const std::string& prefix_text, const std::string& cycle_text,
                const BudgetFlags& flags, const std::string& json_path) {
    auto in = load_input(file);
    const auto& t = in.plain();
    const auto prefix = parse_word(t, prefix_text);
    const auto cycle = parse_word(t, cycle_text);
    const auto budget = flags.resolved();
    json j = {{"query", "realize"}, {"prefix", word_json(t, prefix)}, {"cycle", word_json(t, cycle)},
              {"budget", budget_json(budget)}};
    if (cycle.empty()) {
        auto r = find_word_run(t, prefix, budget);
        j["found"] = r.has_value();
        j["realized_at_n"] = r ? json(r->n) : json(nullptr);
        if (r) j["run"] = path_json(t, r->run);
    } else {
        auto r = realize_lasso(t, prefix, cycle, budget);
        j["found"] = r.has_value();
        j["realized_at_n"] = r ? json(r->n) : json(nullptr);
        if (r) {
            j["run"] = path_json(t, r->run);
            j["loop_start"] = r->loop_start;
        }
    }
    g_manifest.stage("search");
    emit(j, json_path);
    return kOk;
}

int cmd_loading(const std::string& file, std::size_t b, std::size_t target, const BudgetFlags& flags,
                const std::string& json_path) {
    auto in = load_input(file);
    auto u = build_unwinding(in.plain());
    const auto budget = flags.resolved();
    auto r = find_loading_run(u, b, target, budget);
    g_manifest.stage("search");
    json j = {{"query", "loading"}, {"broadcasts", b}, {"n_target", target}, {"budget", budget_json(budget)},
              {"found", r.has_value()}};
    if (r) {
        j["n"] = r->n;
        j["run"] = path_json(u.as_template(), r->run);
    }
    emit(j, json_path);
    return kOk;
}

int cmd_enumerate(const std::string& file, std::size_t n, const BudgetFlags& flags, const std::string& dot_path,
                  const std::string& json_path) {
    auto in = load_input(file);
    const auto& t = in.plain();
    const auto budget = flags.resolved();
    auto g = enumerate(t, n, budget);
    g_manifest.stage("search");
    if (!dot_path.empty()) write_file(dot_path, state_graph_dot(t, g));
    json vertices = json::array();
    for (const auto& q : g.vertices) {
        json counts = json::object();
        for (StateId s = 0; s < q.counts.size(); ++s)
            if (q.counts[s]) counts[t.state_name(s)] = q.counts[s];
        vertices.push_back(counts);
    }
    emit({{"query", "enumerate"}, {"n", n}, {"budget", budget_json(budget)}, {"truncated", g.truncated},
          {"vertices", vertices}, {"arcs", g.arcs.size()}},
         json_path);
    return kOk;
}

int report(const std::string& where, const std::exception& e) {
    std::cerr << "rbcheck: " << where << e.what() << "\n";
    return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameterized verification of rendezvous-broadcast systems"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);
    unsigned jobs = 1;
    std::string manifest_path;
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--manifest", manifest_path, "write a run manifest (inputs, options, timings) as JSON");

    std::string file, out_path, map_path, dot_path, json_path, spec_path, edge, prefix, cycle, kind = "any";
    std::vector<std::string> edges;
    bool per_edge = false, no_realize = false;
    std::optional<std::size_t> n_opt;
    std::size_t n = 1, max_len = 4, b = 0, target = 1;
    ReduceOptions ro;
    std::optional<std::uint32_t> cap;
    BudgetFlags flags;

    auto* reduce = app.add_subcommand("reduce", "reduce a timed template to a plain one");
    reduce->add_option("file", file)->required()->check(CLI::ExistingFile);
    reduce->add_option("-o,--output", out_path, "reduced template (stdout if absent)");
    reduce->add_option("--map", map_path, "relabel map as JSON");
    reduce->add_option("--cap", cap, "override every clock cap");
    reduce->add_option("--max-states", ro.max_states)->capture_default_str();
    reduce->add_option("--max-actions", ro.max_actions)->capture_default_str();

    auto* unwind = app.add_subcommand("unwind", "print the reachability-unwinding");
    unwind->add_option("file", file)->required()->check(CLI::ExistingFile);
    unwind->add_option("--dot", dot_path);
    unwind->add_option("--json", json_path);

    auto* classify_cmd = app.add_subcommand("classify", "color the edges of the unwinding");
    classify_cmd->add_option("file", file)->required()->check(CLI::ExistingFile);
    classify_cmd->add_option("--edge", edges, "restrict to these unwinding edge ids");
    classify_cmd->add_flag("--per-edge", per_edge, "one linear system per edge");
    classify_cmd->add_option("--dot", dot_path);
    classify_cmd->add_option("--json", json_path);

    CLI::App* checks[2];
    for (int i = 0; i < 2; ++i) {
        auto* c = app.add_subcommand(i == 0 ? "liveness" : "safety",
                                     i == 0 ? "check a Buchi bad-behavior spec" : "check a bad-prefix spec");
        c->add_option("file", file)->required()->check(CLI::ExistingFile);
        c->add_option("--spec", spec_path)->required()->check(CLI::ExistingFile);
        c->add_flag("--no-realize", no_realize, "skip the oracle search for a realizing instance size");
        c->add_option("--json", json_path);
        flags.add(c);
        checks[i] = c;
    }

    auto* oracle = app.add_subcommand("oracle", "explicit-state searches at fixed sizes");
    oracle->require_subcommand(1);
    oracle->fallthrough();
    auto* pc = oracle->add_subcommand("pseudo-cycle", "reachable pseudo-cycle through an unwinding edge");
    pc->add_option("file", file)->required()->check(CLI::ExistingFile);
    pc->add_option("--edge", edge)->required();
    pc->add_option("--n", n_opt, "only this size (default 1..max-n)");
    pc->add_option("--kind", kind)->check(CLI::IsMember({"any", "broadcast-free", "with-broadcast"}));
    auto* ef = oracle->add_subcommand("exec-fin", "process-1 projections of bounded runs");
    ef->add_option("file", file)->required()->check(CLI::ExistingFile);
    ef->add_option("--n", n)->required();
    ef->add_option("--max-len", max_len)->capture_default_str();
    auto* rl = oracle->add_subcommand("realize", "instance size realizing prefix.cycle^w (or a finite prefix)");
    rl->add_option("file", file)->required()->check(CLI::ExistingFile);
    rl->add_option("--prefix", prefix, "comma-separated edge ids, '-' for empty")->required();
    rl->add_option("--cycle", cycle, "comma-separated edge ids, '-' for a finite word")->required();
    auto* ld = oracle->add_subcommand("loading", "run loading the component after b broadcasts");
    ld->add_option("file", file)->required()->check(CLI::ExistingFile);
    ld->add_option("--broadcasts", b)->capture_default_str();
    ld->add_option("--n-target", target)->capture_default_str();
    auto* en = oracle->add_subcommand("enumerate", "reachable configurations up to twins");
    en->add_option("file", file)->required()->check(CLI::ExistingFile);
    en->add_option("--n", n)->required();
    en->add_option("--dot", dot_path);
    for (auto* c : {pc, ef, rl, ld, en}) {
        flags.add(c);
        c->add_option("--json", json_path);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailure;
    }

    g_manifest.doc = {{"tool", "rbcheck"}, {"version", kVersion}, {"argv", std::vector<std::string>(argv, argv + argc)},
                      {"inputs", json::array()}, {"stages", json::array()}};
    int code = kFailure;
    try {
        if (cap) ro.global_cap = *cap;
        if (*reduce) code = cmd_reduce(file, out_path, map_path, ro);
        else if (*unwind) code = cmd_unwind(file, dot_path, json_path);
        else if (*classify_cmd) code = cmd_classify(file, edges, per_edge, jobs, dot_path, json_path);
        else if (*checks[0] || *checks[1])
            code = cmd_check(checks[0]->parsed(), file, spec_path, jobs, flags, !no_realize,
                             json_path);
        else if (*pc) code = cmd_pseudo_cycle(file, edge, n_opt, kind, flags, json_path);
        else if (*ef) code = cmd_exec_fin(file, n, max_len, flags, json_path);
        else if (*rl) code = cmd_realize(file, prefix, cycle, flags, json_path);
        else if (*ld) code = cmd_loading(file, b, target, flags, json_path);
        else if (*en) code = cmd_enumerate(file, n, flags, dot_path, json_path);
    } catch (const ParseError& e) {
        code = report(g_reading + ": ", e);
    } catch (const BudgetExceeded& e) {
        code = report("budget exceeded: ", e);
    } catch (const UsageError& e) {
        code = report("", e);
    } catch (const std::exception& e) {
        code = report("error: ", e);
    }

    g_manifest.doc["options"] = {{"jobs", jobs}, {"budget", budget_json(flags.b)}};
    if (const char* env = std::getenv("RBCHECK_BUDGET_MS")) g_manifest.doc["options"]["RBCHECK_BUDGET_MS"] = env;
    g_manifest.doc["exit_code"] = code;
    if (!manifest_path.empty()) {
        try {
            write_file(manifest_path, g_manifest.doc.dump(2) + "\n");
        } catch (const std::exception& e) {
            return report("", e);
        }
    }
    return code;
}
