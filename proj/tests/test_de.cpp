#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "pbm/bench/synthetic.hpp"
#include "pbm/de/de.hpp"
#include "pbm/de/estimate.hpp"

using namespace pbm;

namespace {

double sphere(std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += (v - 3.0) * (v - 3.0);
    return s;
}

de::DEConfig small_config(std::uint64_t seed = 1) {
    de::DEConfig cfg;
    cfg.np = 20;
    cfg.budget_per_param = 4000;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_SUITE("estimate") {

TEST_CASE("one-dimensional quadratic") {
    std::vector<dsl::Range> bounds = {{-10, 10}};
    auto res = de::differential_evolution(bounds, sphere, small_config());
    CHECK(std::abs(res.best[0] - 3.0) < 1e-6);
    CHECK(res.best_value < 1e-12);
}

TEST_CASE("best-so-far trace never increases") {
    std::vector<dsl::Range> bounds(4, dsl::Range{-5, 5});
    auto res = de::differential_evolution(bounds, sphere, small_config(9));
    REQUIRE(res.trace.size() > 2);
    for (size_t i = 1; i < res.trace.size(); ++i) {
        CHECK(res.trace[i].best <= res.trace[i - 1].best);
        CHECK(res.trace[i].generation == res.trace[i - 1].generation + 1);
    }
    CHECK(res.trace.back().best == res.best_value);
}

TEST_CASE("evaluation count respects the budget") {
    std::atomic<long> calls{0};
    auto counted = [&](std::span<const double> p) {
        ++calls;
        return sphere(p);
    };
    std::vector<dsl::Range> bounds(3, dsl::Range{-5, 5});
    auto cfg = small_config();
    cfg.budget_per_param = 1000;
    cfg.budget_scale = 0.35;
    auto res = de::differential_evolution(bounds, counted, cfg);
    const long budget = cfg.total_budget(3);
    CHECK(budget == 1050);
    CHECK(res.evals == calls.load());
    CHECK(res.evals <= budget);
    CHECK(res.evals > budget - cfg.np);
    CHECK(res.evals % cfg.np == 0);
}

TEST_CASE("same seed gives the same result; other seeds differ") {
    std::vector<dsl::Range> bounds(3, dsl::Range{-5, 5});
    auto cfg = small_config(42);
    cfg.budget_per_param = 200;
    auto a = de::differential_evolution(bounds, sphere, cfg);
    auto b = de::differential_evolution(bounds, sphere, cfg);
    CHECK(a.best == b.best);
    CHECK(a.best_value == b.best_value);
    cfg.seed = 43;
    auto c = de::differential_evolution(bounds, sphere, cfg);
    CHECK(a.best != c.best);
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
    auto m = test::water_model("S-S");
    sim::Dataset d = bench::generate_synthetic({}, {}, {0.01, 2});
    de::FitSettings settings;
    sim::Simulator simulator(m, d, settings.map, settings.solver);
    de::Objective f = [&](std::span<const double> p) {
        return de::objective(simulator, p, d, {"h1", "h2"}, settings);
    };
    const size_t dims = m.params.size();
    std::vector<double> pop;
    auto truth = bench::GroundTruth{}.params_for(m);
    for (int i = 0; i < 16; ++i) {
        for (size_t j = 0; j < dims; ++j) pop.push_back(truth[j] * (0.8 + 0.025 * ((i * 7 + int(j) * 3) % 16)));
    }
    std::vector<double> serial(16), parallel(16);
    de::evaluate_population_serial(f, pop, dims, serial);
    de::evaluate_population_parallel(f, pop, dims, parallel);
    CHECK(serial == parallel);

    std::vector<dsl::Range> bounds(2, dsl::Range{-5, 5});
    auto cfg = small_config(5);
    cfg.budget_per_param = 300;
    auto a = de::differential_evolution(bounds, sphere, cfg);
    cfg.parallel = false;
    auto b = de::differential_evolution(bounds, sphere, cfg);
    CHECK(a.best == b.best);
}

TEST_CASE("NaN and throwing objectives count as +inf") {
    std::vector<dsl::Range> bounds = {{0, 1}};
    auto nan = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
    auto cfg = small_config();
    cfg.budget_per_param = 40;
    auto res = de::differential_evolution(bounds, nan, cfg);
    CHECK(std::isinf(res.best_value));
    auto thrower = [](std::span<const double>) -> double { throw std::runtime_error("boom"); };
    CHECK(std::isinf(de::differential_evolution(bounds, thrower, cfg).best_value));
}

TEST_CASE("bound handling keeps members inside the box") {
    std::vector<dsl::Range> bounds = {{0, 1}, {2, 3}};
    for (auto mode : {de::BoundMode::Clip, de::BoundMode::Reflect}) {
        std::atomic<int> outside{0};
        auto f = [&](std::span<const double> p) {
            if (p[0] < 0 || p[0] > 1 || p[1] < 2 || p[1] > 3) ++outside;
            return -p[0] - p[1];  // optimum at the upper corner
        };
        auto cfg = small_config(3);
        cfg.bounds = mode;
        cfg.budget_per_param = 500;
        auto res = de::differential_evolution(bounds, f, cfg);
        CHECK(outside.load() == 0);
        CHECK(res.best[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(res.best[1] == doctest::Approx(3.0).epsilon(1e-6));
    }
}

TEST_CASE("configuration validation") {
    de::DEConfig cfg;
    cfg.np = 3;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.f = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.cr = 1.5;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.budget_scale = 1e-6;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    std::vector<dsl::Range> bad = {{1, 1}};
    CHECK_THROWS(de::differential_evolution(bad, sphere, cfg));
    auto back = de::de_from_json(nlohmann::json::parse(de::to_json(cfg).dump()));
    CHECK(de::to_json(back).dump() == de::to_json(cfg).dump());
}

TEST_CASE("no free parameters evaluates once") {
    auto res = de::differential_evolution({}, [](std::span<const double>) { return 2.5; }, de::DEConfig{});
    CHECK(res.evals == 1);
    CHECK(res.best_value == 2.5);
    CHECK(res.best.empty());
}

TEST_CASE("S-S fit on noise-free data recovers the truth") {
    auto m = test::water_model("S-S");
    sim::Dataset d = bench::generate_synthetic({}, {}, {});
    de::FitSettings settings;
    settings.de.budget_scale = 0.05;
    settings.de.seed = 11;
    auto fit = de::estimate(m, d, {"h1", "h2"}, settings);
    CHECK(fit.train_error < 1e-2);
    CHECK(fit.evals <= settings.de.total_budget(m.params.size()));
    CHECK(fit.names.size() == 5);
    const bench::GroundTruth gt;
    // only the ratios are identifiable
    CHECK(fit.param("tank1.a") / fit.param("tank1.A") == doctest::Approx(gt.a1 / gt.A1).epsilon(0.05));
    CHECK(fit.param("pump.k") / fit.param("tank1.A") == doctest::Approx(gt.k / gt.A1).epsilon(0.05));
    CHECK_THROWS(fit.param("tank9.A"));

    auto csv = de::trace_csv(fit);
    CHECK(csv.rfind("generation,best_error,mean_error\n", 0) == 0);
    auto j = de::to_json(fit);
    CHECK(j["params"].size() == 5);
}

TEST_CASE("repeated fits use consecutive seeds") {
    auto m = test::water_model("S-S");
    sim::Dataset d = bench::generate_synthetic({}, {}, {});
    de::FitSettings settings;
    settings.de.np = 10;
    settings.de.budget_per_param = 20;
    settings.de.seed = 100;
    auto fits = de::repeat_estimate(m, d, {"h2"}, settings, 3);
    REQUIRE(fits.size() == 3);
    for (int r = 0; r < 3; ++r) CHECK(fits[size_t(r)].seed == 100u + unsigned(r));
}

TEST_CASE("infinite values serialize as strings") {
    CHECK(de::number_json(std::numeric_limits<double>::infinity()).is_string());
    CHECK(de::number_json(1.5).get<double>() == 1.5);
}

}  // TEST_SUITE
