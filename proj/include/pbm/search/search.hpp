#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/de/estimate.hpp"
#include "pbm/dsl/ast.hpp"
#include "pbm/model/modelspace.hpp"
#include "pbm/sim/dataset.hpp"

namespace pbm::search {

struct SearchConfig {
    de::FitSettings fit;
    /// Scored on the test segment; the first fitted output is used when the
    /// model does not simulate it.
    std::string test_output = "h2";
    /// Structures fitted concurrently; 0 means all available threads.
    int jobs = 0;
};

nlohmann::ordered_json to_json(const SearchConfig& cfg);
SearchConfig search_from_json(const nlohmann::json& j);

struct RankedResult {
    std::string id;
    int rank = 0;
    double train_error = 0.0;
    /// Summed over the fitted outputs.
    double validation_error = 0.0;
    double test_error = 0.0;
    std::string test_output;
    std::vector<std::string> outputs;
    de::FitOutcome fit;
    model::CompiledModel model;
    /// Set when the structure could not be compiled or fitted.
    std::string failure;
};

/// Seed used for one structure's fit.
std::uint64_t structure_seed(std::uint64_t base, const std::string& id);

/// Sorted by validation error, then id; +inf last. Assigns ranks 1..n.
void rank_results(std::vector<RankedResult>& results);

/// Fits every enumerated structure on the train segment, scores the summed
/// validation error over `outputs` and the test error on the test output,
/// and ranks by validation error.
std::vector<RankedResult> run_single_stage(const dsl::Library& lib, const dsl::Scenario& scenario,
                                           const sim::Dataset& data, const std::vector<std::string>& outputs,
                                           const SearchConfig& cfg);

}  // namespace pbm::search
