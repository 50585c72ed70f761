#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/model/modelspace.hpp"
#include "pbm/sim/dataset.hpp"

namespace pbm::sim {

/// Reconstruction of sampled inputs between grid points. `Auto` holds
/// actuator signals and interpolates exogenous variables that have dynamics
/// in the library (measured levels).
enum class InputHold { Auto, ZeroOrder, Linear };

const char* to_string(InputHold h);
InputHold hold_from_string(std::string_view s);

struct SolverConfig {
    double abs_tol = 1e-8;
    double rel_tol = 1e-4;
    long max_steps_per_interval = 100000;
    /// Running allowance of attempted steps per output interval: a run fails
    /// once its step count exceeds this times (intervals done + 10). 0 disables.
    long mean_steps_per_interval = 20;
    InputHold hold = InputHold::Auto;
    /// Clamp exogenous samples into the variable's declared range.
    bool clamp_inputs = true;

    void validate() const;
};

nlohmann::ordered_json to_json(const SolverConfig& cfg);
SolverConfig solver_from_json(const nlohmann::json& j);

struct Trajectory {
    std::vector<double> t;
    std::vector<std::string> states;
    /// One column per state; NaN past the failure index.
    std::vector<std::vector<double>> columns;
    bool failed = false;
    /// First grid index without a value; equals t.size() on success.
    size_t reached = 0;
    std::string failure;

    const std::vector<double>& column(std::string_view state) const;
    int state_index(std::string_view state) const;
};

/// A compiled model bound to the input columns of one dataset. Runs are
/// independent and may execute concurrently.
class Simulator {
public:
    Simulator(const model::CompiledModel& model, const Dataset& data, const SignalMap& map,
              const SolverConfig& cfg = {});

    /// Integrates over grid indices [0, stop); stop = 0 means the whole grid.
    Trajectory run(std::span<const double> params, size_t stop = 0) const;

    const model::CompiledModel& model() const { return model_; }

private:
    const model::CompiledModel& model_;
    const Dataset& data_;
    SolverConfig cfg_;
    std::vector<std::vector<double>> inputs_;  // per model input, per grid index
    std::vector<char> linear_;                  // per model input
    std::vector<size_t> breaks_;               // grid indices where a ZOH input changes
};

Trajectory simulate(const model::CompiledModel& model, std::span<const double> params, const Dataset& data,
                    const SignalMap& map, const SolverConfig& cfg = {});

/// Same shape as the dataset CSV: `t` then one column per state.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace pbm::sim
