#include "pbm/bench/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pbm/bench/assets.hpp"
#include "pbm/de/estimate.hpp"
#include "pbm/dsl/parser.hpp"
#include "pbm/dsl/printer.hpp"

namespace pbm::bench {

namespace {

int thread_count(int jobs) {
#ifdef _OPENMP
    return jobs > 0 ? jobs : omp_get_max_threads();
#else
    (void)jobs;
    return 1;
#endif
}

/// Compiles the structure whose skeletons use the given templates.
model::CompiledModel compile_choice(const dsl::Library& lib, const dsl::Scenario& sc,
                                   const std::map<std::string, std::string>& choice) {
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        bool match = true;
        for (const auto& inst : cs.instances) {
            auto it = choice.find(inst.skeleton);
            if (it != choice.end() && it->second != inst.template_name) match = false;
        }
        if (match) return model::compile(lib, cs, sc);
    }
    throw std::invalid_argument("no structure matches the requested templates");
}

model::CompiledModel compile_id(const dsl::Library& lib, const dsl::Scenario& sc, const std::string& id) {
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        if (cs.id == id) return model::compile(lib, cs, sc);
    }
    throw std::invalid_argument("structure '" + id + "' is not in the model space");
}

de::FitSettings settings_for(const ExperimentConfig& cfg, int rep) {
    de::FitSettings s = cfg.search.fit;
    s.de.seed = cfg.search.fit.de.seed + std::uint64_t(rep);
    return s;
}

double gap_for(const std::vector<search::RankedResult>& ranked, const std::string& truth, int& rank) {
    rank = 0;
    double truth_err = 0.0;
    for (const auto& r : ranked) {
        if (r.id == truth) {
            rank = r.rank;
            truth_err = r.validation_error;
        }
    }
    if (rank == 0) return -std::numeric_limits<double>::infinity();
    if (rank == 1) return ranked.size() > 1 ? ranked[1].validation_error - truth_err : 0.0;
    return ranked.front().validation_error - truth_err;
}

std::string num(double v) { return dsl::format_number(v); }

}  // namespace

const char* to_string(Mode m) { return m == Mode::Single ? "single" : "multi"; }

Mode mode_from_string(std::string_view s) {
    if (s == "single") return Mode::Single;
    if (s == "multi") return Mode::Multi;
    throw std::invalid_argument("mode must be 'single' or 'multi'");
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    return {{"search", search::to_json(cfg.search)},
            {"input", to_json(cfg.input)},
            {"noise_seed", cfg.noise_seed},
            {"variances", cfg.variances},
            {"reps", cfg.reps}};
}

std::vector<sim::Dataset> synthetic_suite(const ExperimentConfig& cfg) {
    std::vector<sim::Dataset> out;
    for (double v : cfg.variances) out.push_back(generate_synthetic(cfg.truth, cfg.input, {v, cfg.noise_seed}));
    return out;
}

std::vector<StructureRecoveryRow> structure_recovery_experiment(Mode mode, const ExperimentConfig& cfg) {
    dsl::Library lib = dsl::parse_library(asset("watertanks.pbl"));
    dsl::Scenario sc = dsl::parse_scenario(asset("single_stage.pbs"), lib);
    search::StagePlan plan = search::bundled_two_stage();
    search::SearchConfig scfg = cfg.search;
    scfg.jobs = cfg.jobs;
    auto suite = synthetic_suite(cfg);

    std::vector<StructureRecoveryRow> rows;
    for (size_t i = 0; i < suite.size(); ++i) {
        StructureRecoveryRow row;
        row.variance = cfg.variances[i];
        if (mode == Mode::Single) {
            row.ranked = search::run_single_stage(lib, sc, suite[i], {"h1", "h2"}, scfg);
        } else {
            auto multi = search::run_multi_stage(lib, plan, suite[i], scfg);
            row.stage1 = multi.stages.front().ranked;
            row.ranked = multi.final_ranking();
        }
        row.gap = gap_for(row.ranked, cfg.truth.id, row.truth_rank);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string structure_recovery_csv(const std::vector<StructureRecoveryRow>& rows) {
    std::string out = "variance,rank,model,validation_error,test_error\n";
    for (const auto& row : rows) {
        for (const auto& r : row.ranked) {
            out += num(row.variance) + "," + std::to_string(r.rank) + "," + r.id + "," + num(r.validation_error) +
                   "," + num(r.test_error) + "\n";
        }
    }
    return out;
}

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / double(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / double(values.size()));
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    s.max = values.back();
    return s;
}

std::vector<double> truth_ratios(const GroundTruth& gt) {
    return {gt.a1 / gt.A1, gt.k / gt.A1, gt.a2 / gt.A2, gt.a1 / gt.A2};
}

std::vector<ParameterRecoveryRow> parameter_recovery_experiment(Mode mode, const ExperimentConfig& cfg) {
    if (cfg.reps < 1) throw std::invalid_argument("repetitions must be at least 1");
    dsl::Library lib = dsl::parse_library(asset("watertanks.pbl"));
    auto suite = synthetic_suite(cfg);
    const auto truth = truth_ratios(cfg.truth);

    model::CompiledModel full;
    model::CompiledModel upper;
    dsl::Scenario stage2;
    if (mode == Mode::Single) {
        full = compile_id(lib, dsl::parse_scenario(asset("single_stage.pbs"), lib), cfg.truth.id);
    } else {
        upper = compile_choice(lib, dsl::parse_scenario(asset("stage1.pbs"), lib),
                               {{"valveTransmission", "ValveTransmission.SquareRoot"}});
        stage2 = dsl::parse_scenario(asset("stage2.pbs"), lib);
    }

    const int reps = cfg.reps;
    const int tasks = int(suite.size()) * reps;
    std::vector<RatioFit> fits(static_cast<size_t>(tasks));
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(cfg.jobs))
    for (int t = 0; t < tasks; ++t) {
        const sim::Dataset& data = suite[size_t(t / reps)];
        de::FitSettings s = settings_for(cfg, t % reps);
        RatioFit& rf = fits[size_t(t)];
        rf.seed = s.de.seed;
        if (mode == Mode::Single) {
            auto fit = de::estimate(full, data, {"h1", "h2"}, s);
            double A1 = fit.param("tank1.A"), a1 = fit.param("tank1.a"), k = fit.param("pump.k");
            double A2 = fit.param("tank2.A"), a2 = fit.param("tank2.a");
            rf.ratios = {a1 / A1, k / A1, a2 / A2, a1 / A2};
        } else {
            auto f1 = de::estimate(upper, data, {"h1"}, s);
            double A1 = f1.param("tank1.A"), a1 = f1.param("tank1.a"), k = f1.param("pump.k");
            dsl::Scenario sc = dsl::substitute(
                stage2, {{"tank1_A", A1}, {"tank1_a", a1}, {"valve_form", std::string("ValveTransmission.SquareRoot")}},
                lib);
            auto lower = compile_choice(lib, sc, {{"outflow", "Outflow.SquareRoot"}});
            auto f2 = de::estimate(lower, data, {"h2"}, s);
            double A2 = f2.param("tank2.A"), a2 = f2.param("tank2.a");
            rf.ratios = {a1 / A1, k / A1, a2 / A2, a1 / A2};
        }
        for (size_t q = 0; q < truth.size(); ++q) rf.relative_error.push_back((rf.ratios[q] - truth[q]) / truth[q]);
    }

    std::vector<ParameterRecoveryRow> rows;
    for (size_t i = 0; i < suite.size(); ++i) {
        ParameterRecoveryRow row;
        row.variance = cfg.variances[i];
        row.fits.assign(fits.begin() + long(i) * reps, fits.begin() + long(i + 1) * reps);
        for (size_t q = 0; q < truth.size(); ++q) {
            std::vector<double> abs_err;
            for (const auto& f : row.fits) abs_err.push_back(std::abs(f.relative_error[q]));
            row.abs_error.push_back(summarize(abs_err));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string parameter_recovery_csv(const std::vector<ParameterRecoveryRow>& rows) {
    std::string out = "variance,seed";
    for (const auto& n : kRatioNames) out += "," + n;
    for (const auto& n : kRatioNames) out += "," + n + "_rel_error";
    out += "\n";
    for (const auto& row : rows) {
        for (const auto& f : row.fits) {
            out += num(row.variance) + "," + std::to_string(f.seed);
            for (double v : f.ratios) out += "," + num(v);
            for (double v : f.relative_error) out += "," + num(v);
            out += "\n";
        }
    }
    return out;
}

std::string parameter_recovery_summary_csv(const std::vector<ParameterRecoveryRow>& rows) {
    std::string out = "variance,reps";
    for (const auto& n : kRatioNames) out += "," + n + "_median," + n + "_mean," + n + "_max";
    out += "\n";
    for (const auto& row : rows) {
        out += num(row.variance) + "," + std::to_string(row.fits.size());
        for (const auto& s : row.abs_error) out += "," + num(s.median) + "," + num(s.mean) + "," + num(s.max);
        out += "\n";
    }
    return out;
}

std::vector<PowerRow> power_exponent_experiment(const ExperimentConfig& cfg) {
    if (cfg.reps < 1) throw std::invalid_argument("repetitions must be at least 1");
    dsl::Library lib = dsl::parse_library(asset("watertanks_power.pbl"));
    model::CompiledModel pp = compile_id(lib, dsl::parse_scenario(asset("single_stage.pbs"), lib), "P-P");
    auto suite = synthetic_suite(cfg);

    const int reps = cfg.reps;
    const int tasks = int(suite.size()) * reps;
    std::vector<std::pair<double, double>> exps(static_cast<size_t>(tasks));
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(cfg.jobs))
    for (int t = 0; t < tasks; ++t) {
        auto fit = de::estimate(pp, suite[size_t(t / reps)], {"h1", "h2"}, settings_for(cfg, t % reps));
        exps[size_t(t)] = {fit.param("valveTransmission.P"), fit.param("outflow.P")};
    }

    std::vector<PowerRow> rows;
    for (size_t i = 0; i < suite.size(); ++i) {
        PowerRow row;
        row.variance = cfg.variances[i];
        for (int r = 0; r < reps; ++r) {
            row.p_h1.push_back(exps[i * size_t(reps) + size_t(r)].first);
            row.p_h2.push_back(exps[i * size_t(reps) + size_t(r)].second);
        }
        row.h1 = summarize(row.p_h1);
        row.h2 = summarize(row.p_h2);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string power_exponent_csv(const std::vector<PowerRow>& rows) {
    std::string out = "variance,reps,p_h1_mean,p_h1_std,p_h2_mean,p_h2_std\n";
    for (const auto& row : rows) {
        out += num(row.variance) + "," + std::to_string(row.p_h1.size()) + "," + num(row.h1.mean) + "," +
               num(row.h1.stddev) + "," + num(row.h2.mean) + "," + num(row.h2.stddev) + "\n";
    }
    return out;
}

}  // namespace pbm::bench
