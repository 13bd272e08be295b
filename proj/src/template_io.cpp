#include "rbcheck/template_io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "rbcheck/error.hpp"

namespace rbcheck {

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
    if (!alpha(s[0])) return false;
    for (char c : s)
        if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
    return true;
}

std::vector<Token> tokenize_line(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back(Token{std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string system_kind(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = tokenize_line(line);
        if (tokens.empty()) continue;
        if (tokens[0].text == "system" && tokens.size() >= 2) return tokens[1].text;
        return {};
    }
    return {};
}

namespace {

std::optional<std::uint32_t> parse_uint(std::string_view s) {
    std::uint32_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

ProcessTemplate parse_template(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool seen_system = false;
    bool r_only = false;
    std::optional<std::uint32_t> k;
    std::optional<ProcessTemplate> t;

    auto require_template = [&](std::size_t col) -> ProcessTemplate& {
        if (!k) throw ParseError("'k' must be declared before states and edges", lineno, col);
        if (!t) t.emplace(*k, r_only);
        return *t;
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto tok = tokenize_line(line);
        if (tok.empty()) continue;
        const auto& kw = tok[0].text;
        if (!seen_system) {
            if (kw != "system") throw ParseError("expected 'system rb'", lineno, tok[0].column);
            if (tok.size() < 2 || tok[1].text != "rb")
                throw ParseError("expected 'system rb'", lineno, tok.size() < 2 ? tok[0].column : tok[1].column);
            if (tok.size() == 3) {
                if (tok[2].text != "r_only") throw ParseError("unknown system flag '" + tok[2].text + "'", lineno, tok[2].column);
                r_only = true;
            } else if (tok.size() > 3) {
                throw ParseError("trailing tokens", lineno, tok[3].column);
            }
            seen_system = true;
            continue;
        }
        if (kw == "system") throw ParseError("duplicate 'system' line", lineno, tok[0].column);
        if (kw == "k") {
            if (k) throw ParseError("duplicate 'k' line", lineno, tok[0].column);
            if (tok.size() != 2) throw ParseError("expected 'k <n>'", lineno, tok[0].column);
            auto v = parse_uint(tok[1].text);
            if (!v || *v < 2) throw ParseError("k must be an integer >= 2", lineno, tok[1].column);
            k = *v;
        } else if (kw == "state") {
            if (tok.size() < 2 || tok.size() > 3) throw ParseError("expected 'state <name> [init]'", lineno, tok[0].column);
            auto& tpl = require_template(tok[0].column);
            const auto& name = tok[1].text;
            if (!is_identifier(name)) throw ParseError("invalid state name '" + name + "'", lineno, tok[1].column);
            if (name == "b") throw ParseError("'b' is reserved", lineno, tok[1].column);
            if (tpl.find_state(name)) throw ParseError("duplicate state '" + name + "'", lineno, tok[1].column);
            bool init = false;
            if (tok.size() == 3) {
                if (tok[2].text != "init") throw ParseError("unknown state flag '" + tok[2].text + "'", lineno, tok[2].column);
                init = true;
            }
            tpl.add_state(name, init);
        } else if (kw == "edge") {
            if (tok.size() != 4) throw ParseError("expected 'edge <src> <label> <dst>'", lineno, tok[0].column);
            auto& tpl = require_template(tok[0].column);
            auto src = tpl.find_state(tok[1].text);
            if (!src) throw ParseError("unknown state '" + tok[1].text + "'", lineno, tok[1].column);
            auto dst = tpl.find_state(tok[3].text);
            if (!dst) throw ParseError("unknown state '" + tok[3].text + "'", lineno, tok[3].column);
            const auto& lab = tok[2].text;
            Label label = Label::broadcast();
            if (lab != "b") {
                const auto dot = lab.rfind('.');
                if (dot == std::string::npos) throw ParseError("expected '<action>.<index>' or 'b'", lineno, tok[2].column);
                const auto action = lab.substr(0, dot);
                if (!is_identifier(action)) throw ParseError("invalid action name '" + action + "'", lineno, tok[2].column);
                if (action == "b") throw ParseError("'b' is reserved", lineno, tok[2].column);
                auto idx = parse_uint(std::string_view(lab).substr(dot + 1));
                if (!idx || *idx < 1 || *idx > *k)
                    throw ParseError("letter index must be in 1.." + std::to_string(*k), lineno, tok[2].column + dot + 1);
                label = Label::of(tpl.add_action(action), *idx);
            }
            if (tpl.find_edge(Edge{*src, label, *dst})) throw ParseError("duplicate edge", lineno, tok[0].column);
            tpl.add_edge(*src, label, *dst);
        } else {
            throw ParseError("unknown directive '" + kw + "'", lineno, tok[0].column);
        }
    }
    if (!seen_system) throw ParseError("empty template", lineno == 0 ? 1 : lineno);
    if (!k) throw ParseError("missing 'k' line", lineno == 0 ? 1 : lineno);
    if (!t) t.emplace(*k, r_only);
    return std::move(*t);
}

ProcessTemplate load_template(const std::filesystem::path& path) { return parse_template(read_file(path)); }

std::string write_template(const ProcessTemplate& t) {
    std::ostringstream out;
    out << "system rb" << (t.r_only() ? " r_only" : "") << "\n";
    out << "k " << t.k() << "\n";
    for (StateId s = 0; s < t.num_states(); ++s)
        out << "state " << t.state_name(s) << (t.is_initial(s) ? " init" : "") << "\n";
    for (EdgeId e = 0; e < t.num_edges(); ++e) {
        const auto& edge = t.edge(e);
        out << "edge " << t.state_name(edge.src) << " " << t.label_name(edge.label) << " " << t.state_name(edge.dst) << "\n";
    }
    return out.str();
}

}  // namespace rbcheck
