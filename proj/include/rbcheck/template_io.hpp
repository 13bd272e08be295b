#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rbcheck/model.hpp"

namespace rbcheck {

/// `[A-Za-z_][A-Za-z0-9_]*`
bool is_identifier(std::string_view s);

/// Whitespace-separated word of a line with its 1-based column.
struct Token {
    std::string text;
    std::size_t column = 1;
};

/// Splits a line at whitespace after stripping a `#` comment.
std::vector<Token> tokenize_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);

/// Second word of the first `system` line (`rb` or `timed`); empty if absent.
std::string system_kind(std::string_view text);

ProcessTemplate parse_template(std::string_view text);
ProcessTemplate load_template(const std::filesystem::path& path);
/// Canonical text form; parse_template(write_template(t)) rebuilds t exactly.
std::string write_template(const ProcessTemplate& t);

}  // namespace rbcheck
