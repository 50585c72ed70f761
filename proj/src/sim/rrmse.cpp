#include "pbm/sim/rrmse.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbm::sim {

const char* to_string(Denominator d) { return d == Denominator::Simulated ? "simulated" : "measured"; }

Denominator denominator_from_string(std::string_view s) {
    if (s == "simulated") return Denominator::Simulated;
    if (s == "measured") return Denominator::Measured;
    throw std::invalid_argument("denominator must be 'simulated' or 'measured'");
}

ErrorValue rrmse(std::span<const double> measured, std::span<const double> simulated, IndexRange range,
                 Denominator denom) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (range.empty() || range.end > measured.size()) throw std::invalid_argument("rrmse: invalid index range");
    if (range.end > simulated.size()) return {inf, ErrorValue::Status::SimulationFailed};

    double mean = 0.0;
    for (size_t i = range.begin; i < range.end; ++i) mean += measured[i];
    mean /= double(range.size());

    double num = 0.0;
    double den = 0.0;
    for (size_t i = range.begin; i < range.end; ++i) {
        double yhat = simulated[i];
        if (!std::isfinite(yhat)) return {inf, ErrorValue::Status::SimulationFailed};
        double r = measured[i] - yhat;
        double d = denom == Denominator::Simulated ? mean - yhat : mean - measured[i];
        num += r * r;
        den += d * d;
    }
    if (den == 0.0) return {inf, ErrorValue::Status::ZeroDenominator};
    return {std::sqrt(num / den), ErrorValue::Status::Ok};
}

double multi_output_error(const Trajectory& traj, const Dataset& data, const std::vector<std::string>& outputs,
                          const SignalMap& map, IndexRange range, Denominator denom) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (const auto& out : outputs) {
        std::string var = map.var_for(out);
        int s = traj.state_index(var);
        if (var.empty() || s < 0) {
            throw std::invalid_argument("output '" + out + "' does not correspond to a model state");
        }
        if (traj.failed && traj.reached < range.end) return inf;
        ErrorValue e = rrmse(data.column(out), traj.columns[s], range, denom);
        if (!e.ok()) return inf;
        total += e.value;
    }
    return total;
}

}  // namespace pbm::sim
