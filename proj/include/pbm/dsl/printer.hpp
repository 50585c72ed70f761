#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "pbm/dsl/ast.hpp"

namespace pbm::dsl {

/// Shortest decimal text that reads back to exactly `v`.
std::string format_number(double v);

/// Infix rendering with minimal parentheses: `*` and `/` unspaced, `+` and
/// `-` spaced. Reparsing the text yields a structurally equal tree.
std::string to_infix(const Expr& e);

/// Canonical library text; parse_library(print_library(lib)) reproduces lib.
std::string print_library(const Library& lib);
std::string print_scenario(const Scenario& scenario);

nlohmann::ordered_json library_to_json(const Library& lib);
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);
nlohmann::ordered_json expr_to_json(const Expr& e);

}  // namespace pbm::dsl
