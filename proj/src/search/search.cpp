#include "pbm/search/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pbm/sim/rrmse.hpp"
#include "pbm/sim/simulate.hpp"
#include "pbm/util/seed.hpp"

namespace pbm::search {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int thread_count(int jobs) {
#ifdef _OPENMP
    return jobs > 0 ? jobs : omp_get_max_threads();
#else
    (void)jobs;
    return 1;
#endif
}

bool is_state(const model::CompiledModel& m, const sim::SignalMap& map, const std::string& column) {
    std::string var = map.var_for(column);
    return !var.empty() && m.state_index(var) >= 0;
}

RankedResult fit_structure(const dsl::Library& lib, const model::CandidateStructure& cs,
                           const dsl::Scenario& scenario, const sim::Dataset& data,
                           const std::vector<std::string>& outputs, const SearchConfig& cfg) {
    RankedResult r;
    r.id = cs.id;
    r.outputs = outputs;
    r.train_error = r.validation_error = r.test_error = kInf;
    try {
        r.model = model::compile(lib, cs, scenario);
        r.test_output = is_state(r.model, cfg.fit.map, cfg.test_output) ? cfg.test_output : outputs.front();
        de::FitSettings settings = cfg.fit;
        settings.de.seed = structure_seed(cfg.fit.de.seed, cs.id);
        r.fit = de::estimate(r.model, data, outputs, settings);
        r.train_error = r.fit.train_error;

        sim::Trajectory traj = sim::simulate(r.model, r.fit.params, data, settings.map, settings.solver);
        r.validation_error =
            sim::multi_output_error(traj, data, outputs, settings.map, data.validation(), settings.denominator);
        r.test_error = sim::multi_output_error(traj, data, {r.test_output}, settings.map, data.test(),
                                               settings.denominator);
        if (traj.failed) r.failure = "simulation failed: " + traj.failure;
    } catch (const std::exception& e) {
        r.failure = e.what();
    }
    if (std::isnan(r.validation_error)) r.validation_error = kInf;
    return r;
}

}  // namespace

nlohmann::ordered_json to_json(const SearchConfig& cfg) {
    return {{"de", de::to_json(cfg.fit.de)},
            {"solver", sim::to_json(cfg.fit.solver)},
            {"signals", cfg.fit.map.to_string()},
            {"denominator", sim::to_string(cfg.fit.denominator)},
            {"test_output", cfg.test_output}};
}

SearchConfig search_from_json(const nlohmann::json& j) {
    SearchConfig cfg;
    if (j.contains("de")) cfg.fit.de = de::de_from_json(j["de"]);
    if (j.contains("solver")) cfg.fit.solver = sim::solver_from_json(j["solver"]);
    if (j.contains("signals")) cfg.fit.map = sim::SignalMap::parse(j["signals"].get<std::string>());
    if (j.contains("denominator")) {
        cfg.fit.denominator = sim::denominator_from_string(j["denominator"].get<std::string>());
    }
    cfg.test_output = j.value("test_output", cfg.test_output);
    return cfg;
}

std::uint64_t structure_seed(std::uint64_t base, const std::string& id) { return util::derive_seed(base, id); }

void rank_results(std::vector<RankedResult>& results) {
    std::sort(results.begin(), results.end(), [](const RankedResult& a, const RankedResult& b) {
        if (a.validation_error != b.validation_error) return a.validation_error < b.validation_error;
        return a.id < b.id;
    });
    for (size_t i = 0; i < results.size(); ++i) results[i].rank = int(i) + 1;
}

std::vector<RankedResult> run_single_stage(const dsl::Library& lib, const dsl::Scenario& scenario,
                                           const sim::Dataset& data, const std::vector<std::string>& outputs,
                                           const SearchConfig& cfg) {
    if (outputs.empty()) throw std::invalid_argument("no outputs to fit");
    for (const auto& out : outputs) {
        if (!data.has(out)) throw std::invalid_argument("dataset has no column '" + out + "'");
    }
    cfg.fit.de.validate();
    cfg.fit.solver.validate();
    std::vector<model::CandidateStructure> structures = model::enumerate(model::instantiate(lib, scenario));

    std::vector<RankedResult> results(structures.size());
    const int n = static_cast<int>(structures.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(cfg.jobs))
    for (int i = 0; i < n; ++i) {
        results[size_t(i)] = fit_structure(lib, structures[size_t(i)], scenario, data, outputs, cfg);
    }
    rank_results(results);
    return results;
}

}  // namespace pbm::search
