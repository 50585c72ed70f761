#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/search/plan.hpp"
#include "pbm/search/search.hpp"
#include "pbm/sim/simulate.hpp"

namespace pbm::search {

enum class ReportFormat { Text, Json, Csv };

ReportFormat format_from_string(std::string_view s);

/// Ranked table: Model, validation error, test error.
std::string report(const std::vector<RankedResult>& results, ReportFormat format);
nlohmann::ordered_json results_json(const std::vector<RankedResult>& results);
nlohmann::ordered_json multi_stage_json(const MultiStageResult& result);

/// model,param,value rows for every structure.
std::string params_csv(const std::vector<RankedResult>& results);

/// t, then <out>_measured,<out>_simulated per fitted output, over the whole grid.
std::string series_csv(const RankedResult& result, const sim::Dataset& data, const sim::SignalMap& map,
                       const sim::SolverConfig& solver);

}  // namespace pbm::search
