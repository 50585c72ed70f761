#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/dsl/ast.hpp"
#include "pbm/dsl/parser.hpp"
#include "pbm/search/search.hpp"

namespace pbm::search {

/// Invalid stage plan; raised before any fitting.
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Stage {
    std::string name;
    std::string scenario_path;
    std::string scenario_text;
    std::vector<std::string> outputs;
    /// Placeholder name to source in the previous stage's winner: a free
    /// constant "entity.const" or a skeleton name (its chosen template).
    std::map<std::string, std::string> promote;
};

struct StagePlan {
    std::vector<Stage> stages;

    /// Parses every scenario and checks that each stage's placeholders are
    /// exactly the promoted names and that every source exists upstream.
    void validate(const dsl::Library& lib) const;
};

/// `load` maps a scenario path from the plan to its text.
StagePlan parse_plan(const nlohmann::json& j, const std::function<std::string(const std::string&)>& load);
/// Scenario paths are relative to the plan file.
StagePlan load_plan(const std::string& path);
/// The bundled two-stage water-tank plan.
StagePlan bundled_two_stage();

nlohmann::ordered_json to_json(const StagePlan& plan);

struct StageResult {
    std::string name;
    std::vector<std::string> outputs;
    std::vector<RankedResult> ranked;
    std::map<std::string, dsl::PlaceholderValue> promoted;  // values fed into this stage
    /// The winner shared its validation error with the runner-up.
    bool tie = false;
};

struct MultiStageResult {
    std::vector<StageResult> stages;

    const std::vector<RankedResult>& final_ranking() const { return stages.back().ranked; }
};

/// Values the next stage needs from `winner`, in the scenario it was fitted on.
std::map<std::string, dsl::PlaceholderValue> promote(const Stage& next, const RankedResult& winner,
                                                      const dsl::Scenario& scenario);

MultiStageResult run_multi_stage(const dsl::Library& lib, const StagePlan& plan, const sim::Dataset& data,
                                 const SearchConfig& cfg);

}  // namespace pbm::search
