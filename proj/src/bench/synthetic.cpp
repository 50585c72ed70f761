#include "pbm/bench/synthetic.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pbm/bench/assets.hpp"
#include "pbm/dsl/parser.hpp"
#include "pbm/dsl/printer.hpp"
#include "pbm/util/io.hpp"
#include "pbm/util/seed.hpp"

namespace pbm::bench {

std::map<std::string, double> GroundTruth::by_name() const {
    return {{"tank1.A", A1}, {"tank1.a", a1}, {"tank2.A", A2}, {"tank2.a", a2}, {"pump.k", k},
            {"valveTransmission.G", G}, {"outflow.G", G}};
}

std::vector<double> GroundTruth::params_for(const model::CompiledModel& model) const {
    auto values = by_name();
    std::vector<double> out;
    for (const auto& p : model.params) {
        auto it = values.find(p.name);
        if (it == values.end()) throw std::invalid_argument("no ground-truth value for '" + p.name + "'");
        out.push_back(it->second);
    }
    return out;
}

void InputSignal::validate() const {
    if (kind == Kind::File) {
        if (path.empty()) throw std::invalid_argument("input file path is empty");
        return;
    }
    if (!(level_lo <= level_hi) || level_lo < kPumpMin || level_hi > kPumpMax) {
        throw std::invalid_argument("input levels must lie within the pump range [0, 10]");
    }
    if (dwell_lo < 1 || dwell_hi < dwell_lo) throw std::invalid_argument("invalid dwell range");
    if (n < 2) throw std::invalid_argument("input needs at least two samples");
    if (!(dt > 0)) throw std::invalid_argument("sample time must be positive");
}

void InputSignal::generate(std::vector<double>& t, std::vector<double>& u) const {
    validate();
    t.clear();
    u.clear();
    if (kind == Kind::File) {
        sim::Dataset d = sim::read_csv(path);
        t = d.t;
        u = d.column("u");
        return;
    }
    std::mt19937_64 gen(util::derive_seed(seed, "input"));
    std::uniform_int_distribution<int> dwell(dwell_lo, dwell_hi);
    double level = 0.0;
    int left = 0;
    for (size_t i = 0; i < n; ++i) {
        if (left == 0) {
            level = level_lo + util::unit_double(gen()) * (level_hi - level_lo);
            left = dwell(gen);
        }
        t.push_back(double(i) * dt);
        u.push_back(level);
        --left;
    }
}

sim::SolverConfig reference_solver() {
    sim::SolverConfig cfg;
    cfg.abs_tol = 1e-12;
    cfg.rel_tol = 1e-10;
    cfg.mean_steps_per_interval = 0;
    return cfg;
}

sim::Dataset generate_synthetic(const GroundTruth& gt, const InputSignal& input, const NoiseSpec& noise,
                                const sim::SolverConfig& solver, const Split& split) {
    if (!(noise.variance >= 0)) throw std::invalid_argument("noise variance must be non-negative");
    dsl::Library lib = dsl::parse_library(asset("watertanks.pbl"));
    dsl::Scenario sc = dsl::parse_scenario(asset("single_stage.pbs"), lib);
    model::CompiledModel m;
    bool found = false;
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        if (cs.id == gt.id) {
            m = model::compile(lib, cs, sc);
            found = true;
        }
    }
    if (!found) throw std::invalid_argument("ground-truth structure '" + gt.id + "' is not in the model space");
    m.states[m.state_index("tank1.h")].initial = gt.h1_0;
    m.states[m.state_index("tank2.h")].initial = gt.h2_0;

    sim::Dataset d;
    std::vector<double> u;
    input.generate(d.t, u);
    d.add_column("u", u);
    sim::SignalMap map = sim::SignalMap::water_tanks();
    sim::Trajectory traj = sim::simulate(m, gt.params_for(m), d, map, solver);
    if (traj.failed) throw std::runtime_error("ground-truth simulation failed: " + traj.failure);

    const double sd = std::sqrt(noise.variance);
    const std::string vtag = std::to_string(std::bit_cast<std::uint64_t>(noise.variance));
    for (const auto& [col, var] : std::vector<std::pair<std::string, std::string>>{{"h1", "tank1.h"},
                                                                                   {"h2", "tank2.h"}}) {
        std::vector<double> y = traj.column(var);
        if (sd > 0) {
            std::mt19937_64 gen(util::derive_seed(noise.seed, "noise/" + vtag + "/" + col));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (double& v : y) v *= 1.0 + sd * normal(gen);
        }
        d.add_column(col, std::move(y));
    }
    d.set_split(split.train, split.validation, split.test);
    d.validate();
    return d;
}

sim::Dataset ingest_measured_text(const std::string& text, const Split& split) {
    sim::Dataset d = sim::parse_csv(text);
    for (const char* col : {"u", "h1", "h2"}) {
        if (!d.has(col)) throw sim::DataError(std::string("measured data lacks column '") + col + "'");
    }
    if (d.size() != kMeasuredRows) {
        throw sim::DataError("measured data has " + std::to_string(d.size()) + " rows, expected " +
                             std::to_string(kMeasuredRows));
    }
    d.set_split(split.train, split.validation, split.test);
    d.validate();
    return d;
}

sim::Dataset ingest_measured(const std::string& path, const Split& split) {
    return ingest_measured_text(util::read_file(path), split);
}

nlohmann::ordered_json to_json(const InputSignal& in) {
    if (in.kind == InputSignal::Kind::File) return {{"kind", "file"}, {"path", in.path}};
    return {{"kind", "steps"},       {"level_lo", in.level_lo}, {"level_hi", in.level_hi},
            {"dwell_lo", in.dwell_lo}, {"dwell_hi", in.dwell_hi}, {"n", in.n},
            {"dt", in.dt},             {"seed", in.seed}};
}

InputSignal input_from_json(const nlohmann::json& j) {
    InputSignal in;
    std::string kind = j.value("kind", std::string("steps"));
    if (kind == "file") {
        in.kind = InputSignal::Kind::File;
        in.path = j.value("path", std::string());
    } else if (kind == "steps") {
        in.level_lo = j.value("level_lo", in.level_lo);
        in.level_hi = j.value("level_hi", in.level_hi);
        in.dwell_lo = j.value("dwell_lo", in.dwell_lo);
        in.dwell_hi = j.value("dwell_hi", in.dwell_hi);
        in.n = j.value("n", in.n);
        in.dt = j.value("dt", in.dt);
        in.seed = j.value("seed", in.seed);
    } else {
        throw std::invalid_argument("input kind must be 'steps' or 'file'");
    }
    in.validate();
    return in;
}

nlohmann::ordered_json to_json(const NoiseSpec& noise) {
    return {{"variance", noise.variance}, {"seed", noise.seed}};
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
    NoiseSpec n;
    n.variance = j.value("variance", n.variance);
    n.seed = j.value("seed", n.seed);
    if (!(n.variance >= 0)) throw std::invalid_argument("noise variance must be non-negative");
    return n;
}

nlohmann::ordered_json to_json(const GroundTruth& gt) {
    return {{"structure", gt.id}, {"a1", gt.a1}, {"A1", gt.A1},     {"a2", gt.a2},    {"A2", gt.A2},
            {"k", gt.k},          {"G", gt.G},   {"h1_0", gt.h1_0}, {"h2_0", gt.h2_0}};
}

}  // namespace pbm::bench
