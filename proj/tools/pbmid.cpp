// pbmid: identification of process-based models from time series.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pbm/bench/assets.hpp"
#include "pbm/bench/experiments.hpp"
#include "pbm/bench/synthetic.hpp"
#include "pbm/de/estimate.hpp"
#include "pbm/dsl/error.hpp"
#include "pbm/dsl/parser.hpp"
#include "pbm/dsl/printer.hpp"
#include "pbm/model/modelspace.hpp"
#include "pbm/search/plan.hpp"
#include "pbm/search/report.hpp"
#include "pbm/search/search.hpp"
#include "pbm/sim/dataset.hpp"
#include "pbm/sim/rrmse.hpp"
#include "pbm/sim/simulate.hpp"
#include "pbm/util/io.hpp"
#include "pbm/util/seed.hpp"
#include "pbm/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using namespace pbm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

constexpr const char* kBundled = "bundled:";

/// Bad flags or an unusable configuration; exits with 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string load_text(const std::string& ref) {
    if (ref.rfind(kBundled, 0) == 0) {
        try {
            return bench::asset(ref.substr(std::string(kBundled).size()));
        } catch (const std::exception& e) {
            throw util::IoError(e.what());
        }
    }
    return util::read_file(ref);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<size_t> parse_split(const std::string& s) {
    auto parts = split_list(s);
    if (parts.size() != 3) throw ConfigError("--split expects three counts, e.g. 1000,500,1000");
    std::vector<size_t> out;
    for (const auto& p : parts) {
        try {
            out.push_back(std::stoul(p));
        } catch (const std::exception&) {
            throw ConfigError("--split: '" + p + "' is not a count");
        }
    }
    return out;
}

sim::Dataset load_data(const std::string& path, const std::vector<size_t>& split) {
    sim::Dataset d = sim::read_csv(path);
    if (split[0] + split[1] + split[2] > d.size()) {
        throw ConfigError("split needs " + std::to_string(split[0] + split[1] + split[2]) + " rows, data has " +
                          std::to_string(d.size()));
    }
    d.set_split(split[0], split[1], split[2]);
    d.validate();
    return d;
}

// --- shared fitting flags --------------------------------------------------

struct FitFlags {
    std::uint64_t seed = 1;
    double budget = 5e4;
    double budget_scale = 1.0;
    int np = 60;
    double f = 0.9;
    double cr = 0.9;
    std::string bounds = "clip";
    double rtol = 1e-4;
    double atol = 1e-8;
    long step_allowance = 20;
    std::string hold = "auto";
    std::string denominator = "measured";
    std::string signals = "pump.v=u,tank1.h=h1,tank2.h=h2";
};

void add_fit_flags(CLI::App* app, FitFlags& f) {
    app->add_option("--seed", f.seed, "Master RNG seed")->capture_default_str();
    app->add_option("--budget", f.budget, "Objective evaluations per free parameter")->capture_default_str();
    app->add_option("--budget-scale", f.budget_scale, "Multiplier on the evaluation budget")->capture_default_str();
    app->add_option("--np", f.np, "DE population size")->capture_default_str();
    app->add_option("--f", f.f, "DE differential weight")->capture_default_str();
    app->add_option("--cr", f.cr, "DE crossover probability")->capture_default_str();
    app->add_option("--bounds", f.bounds, "Bound handling: clip or reflect")->capture_default_str();
    app->add_option("--rtol", f.rtol, "Solver relative tolerance")->capture_default_str();
    app->add_option("--atol", f.atol, "Solver absolute tolerance")->capture_default_str();
    app->add_option("--step-allowance", f.step_allowance,
                    "Mean solver steps per sample before a run is abandoned (0: unlimited)")
        ->capture_default_str();
    app->add_option("--hold", f.hold, "Input reconstruction: auto (hold actuators, interpolate measured states), zero-order or linear")->capture_default_str();
    app->add_option("--denominator", f.denominator, "Relative error denominator: measured or simulated")
        ->capture_default_str();
    app->add_option("--signals", f.signals, "Variable to data column map")->capture_default_str();
}

ojson search_json(const FitFlags& f, const std::string& test_output) {
    return {{"de",
             {{"np", f.np},
              {"f", f.f},
              {"cr", f.cr},
              {"budget_per_param", f.budget},
              {"budget_scale", f.budget_scale},
              {"seed", f.seed},
              {"bounds", f.bounds}}},
            {"solver",
             {{"abs_tol", f.atol},
              {"rel_tol", f.rtol},
              {"mean_steps_per_interval", f.step_allowance},
              {"hold", f.hold}}},
            {"signals", f.signals},
            {"denominator", f.denominator},
            {"test_output", test_output}};
}

/// Parses and normalizes a search block, so the manifest holds every default.
ojson normalized_search(const ojson& j) {
    try {
        return search::to_json(search::search_from_json(json::parse(j.dump())));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// --- run directories -------------------------------------------------------

ojson manifest_header(const std::string& command) {
    return {{"tool", "pbmid"}, {"version", kVersion}, {"command", command}};
}

fs::path run_dir_for(const ojson& manifest, const std::string& out) {
    if (!out.empty()) return out;
    const char* root = std::getenv("PBM_RUN_ROOT");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(util::fnv1a(manifest.dump())));
    return fs::path(root && *root ? root : "runs") /
           (manifest["command"].get<std::string>() + "-" + std::string(hash, 12));
}

void write(const fs::path& dir, const std::string& name, const std::string& content) {
    util::write_file((dir / name).string(), content);
}

// --- identify --------------------------------------------------------------

void write_ranking(const fs::path& dir, const std::vector<search::RankedResult>& ranked, const sim::Dataset& data,
                   const search::SearchConfig& cfg) {
    write(dir, "results.txt", search::report(ranked, search::ReportFormat::Text));
    write(dir, "results.json", search::report(ranked, search::ReportFormat::Json));
    write(dir, "results.csv", search::report(ranked, search::ReportFormat::Csv));
    write(dir, "params.csv", search::params_csv(ranked));
    for (const auto& r : ranked) {
        if (!r.fit.trace.empty()) write(dir, "traces/" + r.id + ".csv", de::trace_csv(r.fit));
    }
    const auto& best = ranked.front();
    if (std::isfinite(best.validation_error)) {
        write(dir, "series_rank1.csv", search::series_csv(best, data, cfg.fit.map, cfg.fit.solver));
        write(dir, "model_rank1.txt", model::format_model(best.model, best.fit.params));
    }
}

int execute_identify(const ojson& m, const fs::path& dir, int jobs) {
    dsl::Library lib = dsl::parse_library(load_text(m["library"]));
    sim::Dataset data = load_data(m["data"], m["split"].get<std::vector<size_t>>());
    search::SearchConfig cfg = search::search_from_json(json::parse(m["search"].dump()));
    cfg.jobs = jobs;
    const std::string mode = m["mode"];
    if (mode == "single") {
        dsl::Scenario sc = dsl::parse_scenario(load_text(m["scenario"]), lib);
        auto outputs = m["outputs"].get<std::vector<std::string>>();
        for (const auto& o : outputs) {
            if (!data.has(o)) throw ConfigError("data has no column '" + o + "'");
        }
        fs::create_directories(dir);
        write(dir, "manifest.json", m.dump(2) + "\n");
        auto ranked = search::run_single_stage(lib, sc, data, outputs, cfg);
        write_ranking(dir, ranked, data, cfg);
        std::cout << search::report(ranked, search::ReportFormat::Text);
    } else {
        const std::string plan_ref = m["plan"];
        search::StagePlan plan;
        if (plan_ref.rfind(kBundled, 0) == 0) {
            plan = search::parse_plan(json::parse(load_text(plan_ref)),
                                      [](const std::string& p) { return load_text(kBundled + p); });
        } else {
            plan = search::load_plan(plan_ref);
        }
        try {
            plan.validate(lib);
        } catch (const search::PlanError& e) {
            throw ConfigError(e.what());
        }
        for (const auto& st : plan.stages) {
            for (const auto& o : st.outputs) {
                if (!data.has(o)) throw ConfigError("data has no column '" + o + "'");
            }
        }
        fs::create_directories(dir);
        write(dir, "manifest.json", m.dump(2) + "\n");
        auto result = search::run_multi_stage(lib, plan, data, cfg);
        for (const auto& st : result.stages) write_ranking(dir / st.name, st.ranked, data, cfg);
        write(dir, "stages.json", search::multi_stage_json(result).dump(2) + "\n");
        write_ranking(dir, result.final_ranking(), data, cfg);
        for (const auto& st : result.stages) {
            std::cout << "== " << st.name << (st.tie ? " (tie for first)" : "") << "\n"
                      << search::report(st.ranked, search::ReportFormat::Text);
        }
    }
    std::cout << "run directory: " << dir.string() << "\n";
    return kExitOk;
}

// --- gendata ---------------------------------------------------------------

int execute_gendata(const ojson& m, const fs::path& dir) {
    bench::InputSignal input = bench::input_from_json(json::parse(m["input"].dump()));
    bench::NoiseSpec noise = bench::noise_from_json(json::parse(m["noise"].dump()));
    auto split = m["split"].get<std::vector<size_t>>();
    sim::Dataset d = bench::generate_synthetic(bench::GroundTruth{}, input, noise, bench::reference_solver(),
                                               {split[0], split[1], split[2]});
    fs::create_directories(dir);
    write(dir, "manifest.json", m.dump(2) + "\n");
    write(dir, "data.csv", sim::to_csv(d));
    std::cout << (dir / "data.csv").string() << "\n";
    return kExitOk;
}

// --- simulate --------------------------------------------------------------

int execute_simulate(const ojson& m, const fs::path& dir) {
    dsl::Library lib = dsl::parse_library(load_text(m["library"]));
    dsl::Scenario sc = dsl::parse_scenario(load_text(m["scenario"]), lib);
    sim::Dataset data = load_data(m["data"], m["split"].get<std::vector<size_t>>());
    sim::SolverConfig solver = sim::solver_from_json(json::parse(m["solver"].dump()));
    sim::SignalMap map = sim::SignalMap::parse(m["signals"].get<std::string>());
    auto denom = sim::denominator_from_string(m["denominator"].get<std::string>());
    const std::string id = m["model"];

    model::CompiledModel cm;
    bool found = false;
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        if (cs.id == id) {
            cm = model::compile(lib, cs, sc);
            found = true;
        }
    }
    if (!found) throw ConfigError("structure '" + id + "' is not in the model space");

    std::vector<double> params;
    auto given = m["params"].get<std::map<std::string, double>>();
    for (const auto& p : cm.params) {
        auto it = given.find(p.name);
        if (it == given.end()) throw ConfigError("no value for parameter '" + p.name + "'");
        params.push_back(it->second);
    }
    for (const auto& [name, v] : given) {
        if (cm.param_index(name) < 0) throw ConfigError("model " + id + " has no parameter '" + name + "'");
    }

    fs::create_directories(dir);
    write(dir, "manifest.json", m.dump(2) + "\n");
    sim::Trajectory traj = sim::simulate(cm, params, data, map, solver);
    write(dir, "trajectory.csv", sim::trajectory_csv(traj));
    if (traj.failed) std::cout << "simulation failed at sample " << traj.reached << ": " << traj.failure << "\n";

    ojson errors = ojson::object();
    std::cout << "output  train       validation  test        all\n";
    for (const auto& o : m["outputs"].get<std::vector<std::string>>()) {
        const std::string var = map.var_for(o);
        if (var.empty() || traj.state_index(var) < 0 || !data.has(o)) continue;
        const auto& sim_col = traj.column(var);
        const auto& meas = data.column(o);
        ojson e = ojson::object();
        std::string line = o;
        line.resize(8, ' ');
        for (auto [name, range] : std::vector<std::pair<std::string, sim::IndexRange>>{
                 {"train", data.train()}, {"validation", data.validation()}, {"test", data.test()},
                 {"all", {0, data.size()}}}) {
            double v = sim::rrmse(meas, sim_col, range, denom).value;
            e[name] = de::number_json(v);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%-12.4g", v);
            line += buf;
        }
        errors[o] = e;
        std::cout << line << "\n";
    }
    write(dir, "errors.json", errors.dump(2) + "\n");
    return kExitOk;
}

// --- experiment ------------------------------------------------------------

int execute_experiment(const ojson& m, const fs::path& dir, int jobs) {
    bench::ExperimentConfig cfg;
    cfg.search = search::search_from_json(json::parse(m["search"].dump()));
    cfg.input = bench::input_from_json(json::parse(m["input"].dump()));
    cfg.noise_seed = m["noise_seed"];
    cfg.variances = m["variances"].get<std::vector<double>>();
    cfg.reps = m["reps"];
    cfg.jobs = jobs;
    const std::string name = m["experiment"];
    const bench::Mode mode = bench::mode_from_string(m["mode"].get<std::string>());

    fs::create_directories(dir);
    write(dir, "manifest.json", m.dump(2) + "\n");
    if (name == "structure-recovery") {
        auto rows = bench::structure_recovery_experiment(mode, cfg);
        write(dir, "rankings.csv", bench::structure_recovery_csv(rows));
        std::string summary = "variance,truth_rank,gap\n";
        for (const auto& r : rows) {
            summary += dsl::format_number(r.variance) + "," + std::to_string(r.truth_rank) + "," +
                       dsl::format_number(r.gap) + "\n";
        }
        write(dir, "summary.csv", summary);
        std::cout << summary;
    } else if (name == "parameter-recovery") {
        auto rows = bench::parameter_recovery_experiment(mode, cfg);
        write(dir, "fits.csv", bench::parameter_recovery_csv(rows));
        write(dir, "summary.csv", bench::parameter_recovery_summary_csv(rows));
        std::cout << bench::parameter_recovery_summary_csv(rows);
    } else {
        auto rows = bench::power_exponent_experiment(cfg);
        write(dir, "summary.csv", bench::power_exponent_csv(rows));
        std::cout << bench::power_exponent_csv(rows);
    }
    std::cout << "run directory: " << dir.string() << "\n";
    return kExitOk;
}

// --- dispatch --------------------------------------------------------------

int execute(const ojson& m, const fs::path& dir, int jobs) {
    if (!m.contains("command")) throw ConfigError("manifest has no command");
    const std::string cmd = m["command"];
    try {
        if (cmd == "identify") return execute_identify(m, dir, jobs);
        if (cmd == "gendata") return execute_gendata(m, dir);
        if (cmd == "simulate") return execute_simulate(m, dir);
        if (cmd == "experiment") return execute_experiment(m, dir, jobs);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    throw ConfigError("unknown command '" + cmd + "' in manifest");
}

int run_validate(const std::string& library, const std::string& scenario, bool dump_ast) {
    std::string lib_text = load_text(library);
    std::string sc_text = scenario.empty() ? std::string() : load_text(scenario);
    dsl::Library lib;
    try {
        lib = dsl::parse_library(lib_text);
    } catch (const dsl::Error& e) {
        std::cerr << library << ":" << e.what() << "\n";
        return kExitValidation;
    }
    ojson out = {{"library", dsl::library_to_json(lib)}};
    if (!scenario.empty()) {
        try {
            dsl::Scenario sc = dsl::parse_scenario(sc_text, lib);
            out["scenario"] = dsl::scenario_to_json(sc);
            if (sc.is_resolved()) {
                auto structures = model::enumerate(model::instantiate(lib, sc));
                std::vector<std::string> ids;
                for (const auto& cs : structures) ids.push_back(cs.id);
                out["structures"] = ids;
                if (!dump_ast) {
                    std::cerr << scenario << ": " << ids.size() << " candidate structures:";
                    for (const auto& id : ids) std::cerr << " " << id;
                    std::cerr << "\n";
                }
            } else if (!dump_ast) {
                std::cerr << scenario << ": " << sc.placeholders().size() << " placeholders to be promoted\n";
            }
        } catch (const dsl::Error& e) {
            std::cerr << scenario << ":" << e.what() << "\n";
            return kExitValidation;
        }
    }
    if (dump_ast) std::cout << out.dump(2) << "\n";
    else std::cerr << library << ": ok\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Process-based model identification from time series"};
    app.set_version_flag("--version", std::string("pbmid ") + kVersion);
    app.require_subcommand(1);

    std::string out;
    int jobs = 0;
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Run directory (default: $PBM_RUN_ROOT or ./runs, named by manifest hash)");
        sub->add_option("--jobs", jobs, "Concurrent fits (0: all cores)")->capture_default_str();
    };

    // validate
    auto* v = app.add_subcommand("validate", "Check a library and optionally a scenario");
    std::string v_lib, v_sc;
    bool dump_ast = false;
    v->add_option("library", v_lib, "Library file (or bundled:watertanks.pbl)")->required();
    v->add_option("--scenario", v_sc, "Scenario file checked against the library");
    v->add_flag("--dump-ast", dump_ast, "Print the parsed library (and scenario) as JSON");

    // identify
    auto* id = app.add_subcommand("identify", "Enumerate, fit, validate and rank candidate models");
    std::string id_lib = "bundled:watertanks.pbl", id_sc = "bundled:single_stage.pbs",
                id_plan = "bundled:two_stage.json", id_data, id_mode = "single", id_outputs = "h1,h2",
                id_split = "1000,500,1000", id_test = "h2";
    FitFlags id_fit;
    id->add_option("--library", id_lib, "Process library")->capture_default_str();
    id->add_option("--scenario", id_sc, "Scenario (single mode)")->capture_default_str();
    id->add_option("--plan", id_plan, "Stage plan JSON (multi mode)")->capture_default_str();
    id->add_option("--data", id_data, "CSV with t and one column per signal")->required();
    id->add_option("--mode", id_mode, "single or multi")->capture_default_str();
    id->add_option("--outputs", id_outputs, "Columns fitted in single mode")->capture_default_str();
    id->add_option("--split", id_split, "Train, validation and test sample counts")->capture_default_str();
    id->add_option("--test-output", id_test, "Column scored on the test segment")->capture_default_str();
    add_fit_flags(id, id_fit);
    add_run_flags(id);

    // gendata
    auto* gd = app.add_subcommand("gendata", "Generate synthetic water-tank data");
    double gd_var = 0.0;
    std::uint64_t gd_seed = 1, gd_input_seed = 1;
    std::string gd_input_file, gd_split = "1000,500,1000";
    bench::InputSignal gd_in;
    gd->add_option("--variance", gd_var, "Multiplicative noise variance")->capture_default_str();
    gd->add_option("--seed", gd_seed, "Noise seed")->capture_default_str();
    gd->add_option("--input-seed", gd_input_seed, "Input signal seed")->capture_default_str();
    gd->add_option("--input-file", gd_input_file, "CSV with t and u instead of generated steps");
    gd->add_option("--samples", gd_in.n, "Number of samples")->capture_default_str();
    gd->add_option("--dt", gd_in.dt, "Sample time [s]")->capture_default_str();
    gd->add_option("--level-lo", gd_in.level_lo, "Lowest pump step level")->capture_default_str();
    gd->add_option("--level-hi", gd_in.level_hi, "Highest pump step level")->capture_default_str();
    gd->add_option("--dwell-lo", gd_in.dwell_lo, "Shortest step, in samples")->capture_default_str();
    gd->add_option("--dwell-hi", gd_in.dwell_hi, "Longest step, in samples")->capture_default_str();
    gd->add_option("--split", gd_split, "Train, validation and test sample counts")->capture_default_str();
    add_run_flags(gd);

    // simulate
    auto* sm = app.add_subcommand("simulate", "Simulate one structure with given parameters");
    std::string sm_lib = "bundled:watertanks.pbl", sm_sc = "bundled:single_stage.pbs", sm_data, sm_model = "S-S",
                sm_params, sm_outputs = "h1,h2", sm_split = "1000,500,1000";
    bool sm_truth = false;
    FitFlags sm_fit;
    sm->add_option("--library", sm_lib, "Process library")->capture_default_str();
    sm->add_option("--scenario", sm_sc, "Scenario")->capture_default_str();
    sm->add_option("--data", sm_data, "CSV providing the time grid, inputs and measurements")->required();
    sm->add_option("--model", sm_model, "Structure id")->capture_default_str();
    sm->add_option("--params", sm_params, "name=value,... for every free parameter");
    sm->add_flag("--ground-truth", sm_truth, "Use the synthetic ground-truth parameters");
    sm->add_option("--outputs", sm_outputs, "Columns to score")->capture_default_str();
    sm->add_option("--split", sm_split, "Train, validation and test sample counts")->capture_default_str();
    sm->add_option("--rtol", sm_fit.rtol, "Solver relative tolerance")->capture_default_str();
    sm->add_option("--atol", sm_fit.atol, "Solver absolute tolerance")->capture_default_str();
    sm->add_option("--hold", sm_fit.hold, "Input reconstruction: auto (hold actuators, interpolate measured states), zero-order or linear")->capture_default_str();
    sm->add_option("--denominator", sm_fit.denominator, "Relative error denominator")->capture_default_str();
    sm->add_option("--signals", sm_fit.signals, "Variable to data column map")->capture_default_str();
    add_run_flags(sm);

    // experiment
    auto* ex = app.add_subcommand("experiment", "Run a synthetic recovery study");
    std::string ex_name, ex_mode = "single", ex_var;
    int ex_reps = 100;
    std::uint64_t ex_noise_seed = 1, ex_input_seed = 1;
    FitFlags ex_fit;
    ex->add_option("name", ex_name, "structure-recovery, parameter-recovery or power-exponent")
        ->required()
        ->check(CLI::IsMember({"structure-recovery", "parameter-recovery", "power-exponent"}));
    ex->add_option("--mode", ex_mode, "single or multi")->capture_default_str();
    ex->add_option("--variance", ex_var, "Comma-separated noise variances (default: 0,0.01,0.02,0.05,0.1,0.2)");
    ex->add_option("--reps", ex_reps, "Repetitions per variance")->capture_default_str();
    ex->add_option("--noise-seed", ex_noise_seed, "Noise seed")->capture_default_str();
    ex->add_option("--input-seed", ex_input_seed, "Input signal seed")->capture_default_str();
    add_fit_flags(ex, ex_fit);
    add_run_flags(ex);

    // replay
    auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    std::string rp_manifest;
    rp->add_option("manifest", rp_manifest, "manifest.json of an earlier run")->required();
    add_run_flags(rp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (v->parsed()) return run_validate(v_lib, v_sc, dump_ast);

        ojson m;
        if (id->parsed()) {
            if (id_mode != "single" && id_mode != "multi") throw ConfigError("--mode must be single or multi");
            m = manifest_header("identify");
            m["library"] = id_lib;
            m["mode"] = id_mode;
            if (id_mode == "single") {
                m["scenario"] = id_sc;
                m["outputs"] = split_list(id_outputs);
            } else {
                m["plan"] = id_plan;
            }
            m["data"] = id_data;
            m["split"] = parse_split(id_split);
            m["search"] = normalized_search(search_json(id_fit, id_test));
        } else if (gd->parsed()) {
            m = manifest_header("gendata");
            gd_in.seed = gd_input_seed;
            if (!gd_input_file.empty()) {
                gd_in.kind = bench::InputSignal::Kind::File;
                gd_in.path = gd_input_file;
            }
            try {
                gd_in.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            if (gd_var < 0) throw ConfigError("--variance must be non-negative");
            m["truth"] = bench::to_json(bench::GroundTruth{});
            m["input"] = bench::to_json(gd_in);
            m["noise"] = bench::to_json(bench::NoiseSpec{gd_var, gd_seed});
            m["split"] = parse_split(gd_split);
        } else if (sm->parsed()) {
            m = manifest_header("simulate");
            m["library"] = sm_lib;
            m["scenario"] = sm_sc;
            m["data"] = sm_data;
            m["model"] = sm_model;
            std::map<std::string, double> params;
            if (sm_truth) {
                for (const auto& [name, value] : bench::GroundTruth{}.by_name()) params[name] = value;
                // Only the names the model uses are kept once it is compiled.
                dsl::Library lib = dsl::parse_library(load_text(sm_lib));
                dsl::Scenario sc = dsl::parse_scenario(load_text(sm_sc), lib);
                std::map<std::string, double> used;
                for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
                    if (cs.id != sm_model) continue;
                    for (const auto& p : model::compile(lib, cs, sc).params) {
                        if (params.count(p.name)) used[p.name] = params[p.name];
                    }
                }
                params = used;
            }
            for (const auto& kv : split_list(sm_params)) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--params expects name=value, got '" + kv + "'");
                try {
                    params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ConfigError("--params: '" + kv + "' has no numeric value");
                }
            }
            m["params"] = params;
            m["outputs"] = split_list(sm_outputs);
            m["split"] = parse_split(sm_split);
            ojson s = normalized_search(search_json(sm_fit, "h2"));
            m["solver"] = s["solver"];
            m["signals"] = s["signals"];
            m["denominator"] = s["denominator"];
        } else if (ex->parsed()) {
            m = manifest_header("experiment");
            m["experiment"] = ex_name;
            if (ex_mode != "single" && ex_mode != "multi") throw ConfigError("--mode must be single or multi");
            m["mode"] = ex_mode;
            std::vector<double> vars = bench::kVariances;
            if (!ex_var.empty()) {
                vars.clear();
                for (const auto& s : split_list(ex_var)) {
                    try {
                        vars.push_back(std::stod(s));
                    } catch (const std::exception&) {
                        throw ConfigError("--variance: '" + s + "' is not a number");
                    }
                    if (vars.back() < 0) throw ConfigError("--variance must be non-negative");
                }
            }
            if (ex_reps < 1) throw ConfigError("--reps must be at least 1");
            m["variances"] = vars;
            m["reps"] = ex_reps;
            m["noise_seed"] = ex_noise_seed;
            bench::InputSignal in;
            in.seed = ex_input_seed;
            m["input"] = bench::to_json(in);
            m["truth"] = bench::to_json(bench::GroundTruth{});
            m["search"] = normalized_search(search_json(ex_fit, "h2"));
        } else if (rp->parsed()) {
            try {
                m = ojson::parse(util::read_file(rp_manifest));
            } catch (const json::parse_error& e) {
                throw ConfigError(rp_manifest + ": " + e.what());
            }
            if (out.empty()) out = run_dir_for(m, "").string() + "-replay";
        }
        return execute(m, run_dir_for(m, out), jobs);
    } catch (const util::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const search::PlanError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const dsl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sim::DataError& e) {
        std::cerr << "error: " << e.what();
        if (e.row() >= 0) std::cerr << " (data row " << e.row() + 1 << ")";
        std::cerr << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
