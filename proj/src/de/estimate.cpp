#include "pbm/de/estimate.hpp"

#include <cmath>
#include <stdexcept>

#include "pbm/dsl/printer.hpp"

namespace pbm::de {

double FitOutcome::param(std::string_view name) const {
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return params[i];
    }
    throw std::out_of_range("fit has no parameter '" + std::string(name) + "'");
}

double objective(const sim::Simulator& simulator, std::span<const double> params, const sim::Dataset& data,
                 const std::vector<std::string>& outputs, const FitSettings& settings) {
    auto range = data.train();
    sim::Trajectory traj = simulator.run(params, range.end);
    return sim::multi_output_error(traj, data, outputs, settings.map, range, settings.denominator);
}

FitOutcome estimate(const model::CompiledModel& model, const sim::Dataset& data,
                    const std::vector<std::string>& outputs, const FitSettings& settings) {
    if (data.train().empty()) throw std::invalid_argument("training segment is empty");
    for (const auto& out : outputs) {
        std::string var = settings.map.var_for(out);
        if (var.empty() || model.state_index(var) < 0) {
            throw std::invalid_argument("output '" + out + "' is not a state of model " + model.id);
        }
        if (!data.has(out)) throw std::invalid_argument("dataset has no column '" + out + "'");
    }
    sim::Simulator simulator(model, data, settings.map, settings.solver);
    auto f = [&](std::span<const double> p) { return objective(simulator, p, data, outputs, settings); };
    auto bounds = model.bounds();
    DEResult r = differential_evolution(bounds, f, settings.de);

    FitOutcome out;
    for (const auto& p : model.params) out.names.push_back(p.name);
    out.bounds = std::move(bounds);
    out.params = std::move(r.best);
    out.train_error = r.best_value;
    out.evals = r.evals;
    out.trace = std::move(r.trace);
    out.seed = r.seed;
    return out;
}

std::vector<FitOutcome> repeat_estimate(const model::CompiledModel& model, const sim::Dataset& data,
                                        const std::vector<std::string>& outputs, const FitSettings& settings,
                                        int reps) {
    if (reps < 1) throw std::invalid_argument("repetitions must be at least 1");
    std::vector<FitOutcome> out(static_cast<size_t>(reps));
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < reps; ++r) {
        FitSettings s = settings;
        s.de.seed = settings.de.seed + std::uint64_t(r);
        out[size_t(r)] = estimate(model, data, outputs, s);
    }
    return out;
}

nlohmann::ordered_json number_json(double v) {
    if (std::isfinite(v)) return v;
    return dsl::format_number(v);
}

std::string trace_csv(const FitOutcome& fit) {
    std::string out = "generation,best_error,mean_error\n";
    for (const auto& g : fit.trace) {
        out += std::to_string(g.generation) + "," + dsl::format_number(g.best) + "," + dsl::format_number(g.mean) +
               "\n";
    }
    return out;
}

nlohmann::ordered_json to_json(const FitOutcome& fit) {
    nlohmann::ordered_json j;
    auto params = nlohmann::ordered_json::array();
    for (size_t i = 0; i < fit.names.size(); ++i) {
        params.push_back({{"name", fit.names[i]},
                          {"value", fit.params.empty() ? nlohmann::ordered_json(nullptr) : number_json(fit.params[i])},
                          {"lo", fit.bounds[i].lo},
                          {"hi", fit.bounds[i].hi}});
    }
    j["params"] = params;
    j["train_error"] = number_json(fit.train_error);
    j["evals"] = fit.evals;
    j["seed"] = fit.seed;
    return j;
}

}  // namespace pbm::de
