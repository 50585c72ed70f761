#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/de/de.hpp"
#include "pbm/model/modelspace.hpp"
#include "pbm/sim/dataset.hpp"
#include "pbm/sim/rrmse.hpp"
#include "pbm/sim/simulate.hpp"

namespace pbm::de {

/// Everything a fit needs besides the model and the data.
struct FitSettings {
    DEConfig de;
    sim::SolverConfig solver;
    sim::SignalMap map = sim::SignalMap::water_tanks();
    sim::Denominator denominator = sim::Denominator::Measured;
};

struct FitOutcome {
    std::vector<std::string> names;
    std::vector<dsl::Range> bounds;
    std::vector<double> params;
    double train_error = 0.0;
    long evals = 0;
    std::vector<GenerationStat> trace;
    std::uint64_t seed = 0;

    /// Value of the named parameter; throws when absent.
    double param(std::string_view name) const;
};

/// Summed train-range error over `outputs`; +inf when the simulation fails.
double objective(const sim::Simulator& simulator, std::span<const double> params, const sim::Dataset& data,
                 const std::vector<std::string>& outputs, const FitSettings& settings);

FitOutcome estimate(const model::CompiledModel& model, const sim::Dataset& data,
                    const std::vector<std::string>& outputs, const FitSettings& settings);

/// Runs with seeds seed, seed+1, ..., seed+reps-1, in that order.
std::vector<FitOutcome> repeat_estimate(const model::CompiledModel& model, const sim::Dataset& data,
                                        const std::vector<std::string>& outputs, const FitSettings& settings,
                                        int reps);

/// generation,best_error,mean_error
std::string trace_csv(const FitOutcome& fit);
nlohmann::ordered_json to_json(const FitOutcome& fit);

/// JSON cannot hold infinities; they are written as strings.
nlohmann::ordered_json number_json(double v);

}  // namespace pbm::de
