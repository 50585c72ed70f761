#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/bench/synthetic.hpp"
#include "pbm/search/plan.hpp"
#include "pbm/search/search.hpp"

namespace pbm::bench {

inline const std::vector<double> kVariances = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};

enum class Mode { Single, Multi };

const char* to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct ExperimentConfig {
    /// DE, solver, denominator, designated output. The DE seed is the master seed.
    search::SearchConfig search;
    GroundTruth truth;
    InputSignal input;
    std::uint64_t noise_seed = 1;
    std::vector<double> variances = kVariances;
    int reps = 100;
    /// Concurrent fits; 0 means all available threads.
    int jobs = 0;
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// One dataset per variance, all sharing the input column.
std::vector<sim::Dataset> synthetic_suite(const ExperimentConfig& cfg);

struct StructureRecoveryRow {
    double variance = 0.0;
    std::vector<search::RankedResult> ranked;  // final ranking
    /// Multi-stage only: the first stage's ranking.
    std::vector<search::RankedResult> stage1;
    int truth_rank = 0;
    /// Validation error of the runner-up minus that of the truth when it
    /// ranks first; otherwise best minus truth (negative).
    double gap = 0.0;
};

std::vector<StructureRecoveryRow> structure_recovery_experiment(Mode mode, const ExperimentConfig& cfg);
std::string structure_recovery_csv(const std::vector<StructureRecoveryRow>& rows);

/// a1/A1, k/A1, a2/A2, a1/A2.
inline const std::vector<std::string> kRatioNames = {"a1/A1", "k/A1", "a2/A2", "a1/A2"};

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    double max = 0.0;
};

/// Population standard deviation; median averages the two middle values.
Summary summarize(std::vector<double> values);

struct RatioFit {
    std::uint64_t seed = 0;
    std::vector<double> ratios;          // kRatioNames order
    std::vector<double> relative_error;  // signed, (fit - truth) / truth
};

struct ParameterRecoveryRow {
    double variance = 0.0;
    std::vector<RatioFit> fits;
    /// Over |relative error|, per ratio.
    std::vector<Summary> abs_error;
};

std::vector<double> truth_ratios(const GroundTruth& gt);

/// Repetition r uses DE seed master + r. Multi mode fits the upper tank on
/// h1 and then the lower tank on h2 with the upper-tank constants fixed.
std::vector<ParameterRecoveryRow> parameter_recovery_experiment(Mode mode, const ExperimentConfig& cfg);
/// One row per variance and repetition.
std::string parameter_recovery_csv(const std::vector<ParameterRecoveryRow>& rows);
/// One row per variance: median/mean/max of |relative error| per ratio.
std::string parameter_recovery_summary_csv(const std::vector<ParameterRecoveryRow>& rows);

struct PowerRow {
    double variance = 0.0;
    std::vector<double> p_h1;
    std::vector<double> p_h2;
    Summary h1;
    Summary h2;
};

/// Fits the P-P structure of the extended library on h1 and h2.
std::vector<PowerRow> power_exponent_experiment(const ExperimentConfig& cfg);
std::string power_exponent_csv(const std::vector<PowerRow>& rows);

}  // namespace pbm::bench
