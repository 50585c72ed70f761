#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "pbm/bench/experiments.hpp"
#include "pbm/bench/synthetic.hpp"
#include "pbm/util/seed.hpp"

using namespace pbm;

namespace {

std::string measured_text(size_t rows, double dt = 4.0) {
    std::ostringstream out;
    out << "t,u,h1,h2\n";
    for (size_t i = 0; i < rows; ++i) out << double(i) * dt << ",1.5," << 0.4 + 1e-4 * double(i) << ",0.2\n";
    return out.str();
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("synthetic data is deterministic") {
    auto a = bench::generate_synthetic({}, {}, {0.02, 5});
    auto b = bench::generate_synthetic({}, {}, {0.02, 5});
    CHECK(a.columns == b.columns);
    auto c = bench::generate_synthetic({}, {}, {0.02, 6});
    CHECK(c.column("h1") != a.column("h1"));
    CHECK(c.column("u") == a.column("u"));
    CHECK(a.size() == 2500);
    CHECK(a.dt() == 4.0);
    CHECK(a.train().size() == 1000);
    CHECK(a.validation().size() == 500);
    CHECK(a.test().size() == 1000);
}

TEST_CASE("input steps stay within the configured levels and dwell times") {
    bench::InputSignal in;
    std::vector<double> t, u;
    in.generate(t, u);
    REQUIRE(u.size() == in.n);
    size_t run = 1;
    for (size_t i = 1; i < u.size(); ++i) {
        CHECK(u[i] >= in.level_lo);
        CHECK(u[i] <= in.level_hi);
        if (u[i] == u[i - 1]) {
            ++run;
        } else {
            CHECK(run >= size_t(in.dwell_lo));
            CHECK(run <= size_t(in.dwell_hi));
            run = 1;
        }
    }
    in.level_hi = bench::kPumpMax + 1;
    CHECK_THROWS(in.validate());
}

TEST_CASE("multiplicative noise has the requested variance") {
    auto clean = bench::generate_synthetic({}, {}, {});
    auto noisy = bench::generate_synthetic({}, {}, {0.05, 9});
    for (const char* col : {"h1", "h2"}) {
        const auto& y = clean.column(col);
        const auto& yn = noisy.column(col);
        double sum = 0.0, sq = 0.0;
        for (size_t i = 0; i < y.size(); ++i) {
            double e = yn[i] / y[i] - 1.0;
            sum += e;
            sq += e * e;
        }
        double n = double(y.size());
        double mean = sum / n;
        double var = sq / n - mean * mean;
        CHECK(var == doctest::Approx(0.05).epsilon(0.10));
        CHECK(std::abs(mean) < 4 * std::sqrt(0.05 / n));
    }
    CHECK(noisy.column("u") == clean.column("u"));
}

TEST_CASE("zero-valued samples stay zero under noise") {
    bench::GroundTruth gt;
    gt.h2_0 = 0.0;
    bench::InputSignal in;
    in.n = 40;
    auto d = bench::generate_synthetic(gt, in, {0.2, 1}, bench::reference_solver(), {20, 10, 10});
    CHECK(d.column("h2")[0] == 0.0);
}

TEST_CASE("the variance suite shares one input") {
    bench::ExperimentConfig cfg;
    auto suite = bench::synthetic_suite(cfg);
    REQUIRE(suite.size() == bench::kVariances.size());
    for (const auto& d : suite) CHECK(d.column("u") == suite.front().column("u"));
    CHECK(suite[0].column("h2") != suite[1].column("h2"));
}

TEST_CASE("ground truth parameter mapping") {
    auto m = test::water_model("S-S");
    bench::GroundTruth gt;
    auto p = gt.params_for(m);
    CHECK(p[size_t(m.param_index("tank1.A"))] == 20.0);
    CHECK(p[size_t(m.param_index("tank2.a"))] == 0.7);
    CHECK(p[size_t(m.param_index("pump.k"))] == 5.0);
    auto ratios = bench::truth_ratios(gt);
    CHECK(ratios[0] == 0.65 / 20.0);
    CHECK(ratios[3] == 0.65 / 12.0);
}

TEST_CASE("measured data ingest") {
    auto d = bench::ingest_measured_text(measured_text(2500));
    CHECK(d.size() == 2500);
    CHECK(d.train().size() == 1000);
    CHECK(d.test().end == 2500);

    CHECK_THROWS_AS(bench::ingest_measured_text(measured_text(2499)), sim::DataError);
    CHECK_THROWS_AS(bench::ingest_measured_text("t,u,h1\n0,1,1\n"), sim::DataError);

    std::string bad = measured_text(2500);
    size_t line = 0, pos = 0;
    while (line < 8) pos = bad.find('\n', pos) + 1, ++line;  // start of data row 7
    bad.replace(bad.find(",0.2", pos), 4, ",nan");
    try {
        bench::ingest_measured_text(bad);
        FAIL("NaN accepted");
    } catch (const sim::DataError& e) {
        CHECK(e.row() == 7);
    }
    CHECK_THROWS_AS(bench::ingest_measured_text(measured_text(2500, 0.0)), sim::DataError);
}

TEST_CASE("summary statistics") {
    auto s = bench::summarize({3, 1, 2, 10});
    CHECK(s.mean == 4.0);
    CHECK(s.median == 2.5);
    CHECK(s.max == 10.0);
    CHECK(s.stddev == doctest::Approx(std::sqrt(((1.0 + 4 + 9 + 36) / 4))));
    CHECK(bench::summarize({}).mean == 0.0);
}

TEST_CASE("seed derivation") {
    CHECK(util::derive_seed(1, "a") == util::derive_seed(1, "a"));
    CHECK(util::derive_seed(1, "a") != util::derive_seed(1, "b"));
    CHECK(util::derive_seed(1, "a") != util::derive_seed(2, "a"));
    CHECK(util::fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(util::unit_double(~0ull) < 1.0);
}

TEST_CASE("small parameter recovery run") {
    bench::ExperimentConfig cfg;
    cfg.variances = {0.0};
    cfg.reps = 2;
    cfg.search.fit.de.np = 12;
    cfg.search.fit.de.budget_per_param = 100;
    auto rows = bench::parameter_recovery_experiment(bench::Mode::Single, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].fits.size() == 2);
    CHECK(rows[0].abs_error.size() == 4);
    CHECK(rows[0].fits[0].seed != rows[0].fits[1].seed);
    auto csv = bench::parameter_recovery_summary_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 2);
}

}  // TEST_SUITE
