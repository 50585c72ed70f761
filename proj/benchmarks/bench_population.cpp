// Serial vs OpenMP population evaluation on the S-S training objective.

#include <benchmark/benchmark.h>

#include <random>

#include "pbm/bench/assets.hpp"
#include "pbm/bench/synthetic.hpp"
#include "pbm/de/de.hpp"
#include "pbm/de/estimate.hpp"
#include "pbm/dsl/parser.hpp"

namespace {

using namespace pbm;

struct Fixture {
    dsl::Library lib = dsl::parse_library(bench::asset("watertanks.pbl"));
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    sim::Dataset data = bench::generate_synthetic({}, {}, {});
    model::CompiledModel model;
    de::FitSettings settings;
    std::vector<double> pop;

    Fixture() {
        for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
            if (cs.id == "S-S") model = model::compile(lib, cs, sc);
        }
        // Population near the optimum, where simulations run to completion.
        bench::GroundTruth gt;
        auto truth = gt.params_for(model);
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> jitter(0.9, 1.1);
        for (int i = 0; i < 60; ++i) {
            for (double p : truth) pop.push_back(p * jitter(gen));
        }
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

template <bool Parallel>
void BM_Population(benchmark::State& state) {
    Fixture& fx = fixture();
    sim::Simulator simulator(fx.model, fx.data, fx.settings.map, fx.settings.solver);
    de::Objective f = [&](std::span<const double> p) {
        return de::objective(simulator, p, fx.data, {"h1", "h2"}, fx.settings);
    };
    std::vector<double> out(fx.pop.size() / fx.model.params.size());
    for (auto _ : state) {
        if (Parallel) de::evaluate_population_parallel(f, fx.pop, fx.model.params.size(), out);
        else de::evaluate_population_serial(f, fx.pop, fx.model.params.size(), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 60);
}

BENCHMARK(BM_Population<false>)->Name("population/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Population<true>)->Name("population/openmp")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
