#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>

#include "pbm/dsl/ast.hpp"
#include "pbm/dsl/error.hpp"

namespace pbm::dsl {

/// Parses and validates a library (`.pbl`). Hierarchies are linked, and
/// entity parameters and inherited constants are materialized on every
/// descendant. Throws dsl::Error on the first problem found.
Library parse_library(std::string_view text);

/// Parses a scenario (`.pbs`) and resolves it against `lib`. Constants left
/// out of an entity instance are free. Placeholders (`@name`) are kept as is;
/// see substitute().
Scenario parse_scenario(std::string_view text, const Library& lib);

/// Value promoted into a placeholder: a constant or a process template name.
using PlaceholderValue = std::variant<double, std::string>;

/// Replaces every placeholder in `scenario` and re-checks the bindings that
/// depended on them. Missing or surplus values are errors.
Scenario substitute(const Scenario& scenario, const std::map<std::string, PlaceholderValue>& values,
                    const Library& lib);

}  // namespace pbm::dsl
