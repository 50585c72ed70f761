#pragma once

#include <span>
#include <string>
#include <vector>

#include "pbm/sim/dataset.hpp"
#include "pbm/sim/simulate.hpp"

namespace pbm::sim {

/// Denominator of the relative error. `Simulated` sums (mean(y) - yhat)^2,
/// `Measured` sums (mean(y) - y)^2.
enum class Denominator { Simulated, Measured };

const char* to_string(Denominator d);
Denominator denominator_from_string(std::string_view s);

struct ErrorValue {
    enum class Status { Ok, ZeroDenominator, SimulationFailed };

    /// +inf unless status is Ok.
    double value = 0.0;
    Status status = Status::Ok;

    bool ok() const { return status == Status::Ok; }
};

ErrorValue rrmse(std::span<const double> measured, std::span<const double> simulated, IndexRange range,
                 Denominator denom = Denominator::Measured);

/// Sum of rrmse over `outputs` (column names). Any failing term makes the
/// sum +inf.
double multi_output_error(const Trajectory& traj, const Dataset& data, const std::vector<std::string>& outputs,
                          const SignalMap& map, IndexRange range, Denominator denom = Denominator::Measured);

}  // namespace pbm::sim
