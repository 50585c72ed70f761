#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/model/modelspace.hpp"
#include "pbm/sim/dataset.hpp"
#include "pbm/sim/simulate.hpp"

namespace pbm::bench {

struct GroundTruth {
    std::string id = "S-S";
    double a1 = 0.65;
    double A1 = 20.0;
    double a2 = 0.7;
    double A2 = 12.0;
    double k = 5.0;
    double G = 4.429;
    double h1_0 = 0.38086;
    double h2_0 = 0.20508;

    /// Values keyed by model parameter name (tank1.A, pump.k, ...).
    std::map<std::string, double> by_name() const;
    /// Parameter vector for `model`; throws if it needs an unknown parameter.
    std::vector<double> params_for(const model::CompiledModel& model) const;
};

struct InputSignal {
    enum class Kind { Steps, File };

    Kind kind = Kind::Steps;
    double level_lo = 0.5;
    double level_hi = 2.0;
    int dwell_lo = 10;
    int dwell_hi = 50;
    size_t n = 2500;
    double dt = 4.0;
    std::uint64_t seed = 1;
    /// For Kind::File: CSV with columns t and u.
    std::string path;

    void validate() const;
    /// Time grid and input samples.
    void generate(std::vector<double>& t, std::vector<double>& u) const;
};

/// Pump operating range the step levels must stay within.
inline constexpr double kPumpMin = 0.0;
inline constexpr double kPumpMax = 10.0;

struct NoiseSpec {
    double variance = 0.0;
    std::uint64_t seed = 1;
};

struct Split {
    size_t train = 1000;
    size_t validation = 500;
    size_t test = 1000;
};

/// Tolerances used when generating data; far tighter than the fitting defaults.
sim::SolverConfig reference_solver();

/// Simulates the ground-truth S-S model over the input and applies
/// y(1 + N(0, variance)) to each output sample. Columns: u, h1, h2.
sim::Dataset generate_synthetic(const GroundTruth& gt, const InputSignal& input, const NoiseSpec& noise,
                                const sim::SolverConfig& solver = reference_solver(), const Split& split = {});

/// Expects columns t, u, h1, h2 and exactly 2500 rows.
sim::Dataset ingest_measured(const std::string& path, const Split& split = {});
sim::Dataset ingest_measured_text(const std::string& text, const Split& split = {});

inline constexpr size_t kMeasuredRows = 2500;

nlohmann::ordered_json to_json(const InputSignal& in);
InputSignal input_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const NoiseSpec& noise);
NoiseSpec noise_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GroundTruth& gt);

}  // namespace pbm::bench
