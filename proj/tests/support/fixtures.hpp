#pragma once

#include <string>

#include "rbcheck/template_io.hpp"

namespace rbcheck::testing {

inline std::string fixture_path(const std::string& name) { return std::string(RBCHECK_FIXTURES) + "/" + name; }

inline ProcessTemplate fixture(const std::string& name) { return load_template(fixture_path(name)); }

inline StateId st(const ProcessTemplate& t, const std::string& name) { return t.find_state(name).value(); }

inline EdgeId ed(const ProcessTemplate& t, const std::string& id) { return t.find_edge(std::string_view(id)).value(); }

/// Configuration over processes 1..n from state names.
inline Configuration conf(const ProcessTemplate& t, std::initializer_list<const char*> names) {
    std::vector<StateId> states;
    for (auto n : names) states.push_back(st(t, n));
    return Configuration::from_states(states, t.num_states());
}

}  // namespace rbcheck::testing
