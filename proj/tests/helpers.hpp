#pragma once

#include <string>

#include "pbm/bench/assets.hpp"
#include "pbm/dsl/parser.hpp"
#include "pbm/model/modelspace.hpp"

namespace pbm::test {

inline dsl::Library water_library() { return dsl::parse_library(bench::asset("watertanks.pbl")); }
inline dsl::Library power_library() { return dsl::parse_library(bench::asset("watertanks_power.pbl")); }

inline model::CompiledModel compile_id(const dsl::Library& lib, const dsl::Scenario& sc, const std::string& id) {
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        if (cs.id == id) return model::compile(lib, cs, sc);
    }
    throw std::invalid_argument("no structure " + id);
}

inline model::CompiledModel water_model(const std::string& id) {
    static const dsl::Library lib = water_library();
    static const dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    return compile_id(lib, sc, id);
}

}  // namespace pbm::test
