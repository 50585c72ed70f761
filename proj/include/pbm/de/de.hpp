#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/dsl/ast.hpp"

namespace pbm::de {

enum class BoundMode { Clip, Reflect };

struct DEConfig {
    int np = 60;
    double f = 0.9;
    double cr = 0.9;
    /// Objective evaluations per free parameter.
    double budget_per_param = 5e4;
    /// Multiplies the budget; below 1 for quick runs.
    double budget_scale = 1.0;
    std::uint64_t seed = 1;
    BoundMode bounds = BoundMode::Clip;
    /// Evaluate each generation with the OpenMP kernel.
    bool parallel = true;

    void validate() const;
    long total_budget(size_t dims) const;
};

nlohmann::ordered_json to_json(const DEConfig& cfg);
DEConfig de_from_json(const nlohmann::json& j);

struct GenerationStat {
    long generation = 0;
    double best = 0.0;
    /// Mean over the finite population members; +inf when none is finite.
    double mean = 0.0;
};

struct DEResult {
    std::vector<double> best;
    double best_value = 0.0;
    long evals = 0;
    std::vector<GenerationStat> trace;
    std::uint64_t seed = 0;
};

/// Must be safe to call concurrently. NaN results and exceptions count as +inf.
using Objective = std::function<double(std::span<const double>)>;

/// Population stored row-major, `dims` values per member; `out` holds one slot per member.
void evaluate_population_serial(const Objective& f, const std::vector<double>& pop, size_t dims,
                                std::vector<double>& out);
void evaluate_population_parallel(const Objective& f, const std::vector<double>& pop, size_t dims,
                                  std::vector<double>& out);

/// DE/rand/1/bin with synchronous generational selection. Random numbers for
/// a generation are drawn before any evaluation, so the result does not
/// depend on evaluation order or thread count.
DEResult differential_evolution(std::span<const dsl::Range> bounds, const Objective& f, const DEConfig& cfg);

}  // namespace pbm::de
