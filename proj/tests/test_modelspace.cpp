#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "pbm/bench/synthetic.hpp"
#include "pbm/dsl/printer.hpp"

using namespace pbm;

namespace {

std::vector<std::string> ids_of(const std::vector<model::CandidateStructure>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.id);
    return out;
}

std::vector<double> truth_params(const model::CompiledModel& m) { return bench::GroundTruth{}.params_for(m); }

}  // namespace

TEST_SUITE("modelspace") {

TEST_CASE("instances per skeleton") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    auto inst = model::instantiate(lib, sc);
    REQUIRE(inst.size() == 3);
    CHECK(inst[0].skeleton == "inflow");
    CHECK(inst[0].instances.size() == 1);
    CHECK(inst[1].instances.size() == 3);
    CHECK(inst[2].instances.size() == 3);
}

TEST_CASE("a skeleton declaring a leaf has one instance") {
    dsl::Library lib = test::water_library();
    std::string text = bench::asset("single_stage.pbs");
    text.replace(text.find(": Outflow"), 9, ": Outflow.SquareRoot");
    dsl::Scenario sc = dsl::parse_scenario(text, lib);
    auto inst = model::instantiate(lib, sc);
    CHECK(inst[2].instances.size() == 1);
    auto structures = model::enumerate(inst);
    CHECK(ids_of(structures) == std::vector<std::string>{"S", "L", "E"});
}

TEST_CASE("nine structures with legend ids") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    auto structures = model::enumerate(model::instantiate(lib, sc));
    CHECK(ids_of(structures) ==
          std::vector<std::string>{"S-S", "S-L", "S-E", "L-S", "L-L", "L-E", "E-S", "E-L", "E-E"});
}

TEST_CASE("extended library gives sixteen structures") {
    dsl::Library lib = test::power_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    auto ids = ids_of(model::enumerate(model::instantiate(lib, sc)));
    CHECK(ids.size() == 16);
    CHECK(std::find(ids.begin(), ids.end(), "P-P") != ids.end());
    CHECK(ids.back() == "P-P");
}

TEST_CASE("enumeration count is the product of instance counts") {
    std::mt19937 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        int roots = 1 + int(gen() % 3);
        std::string lib_text = "template entity E { vars: x {aggregation: sum}; consts: c {range: <0, 1>}; }\n";
        std::string sc_text = "entity e : E { vars: x {role: endogenous; initial: 1;}; consts: c = null; }\n";
        size_t expected = 1;
        for (int r = 0; r < roots; ++r) {
            std::string root = "R" + std::to_string(r);
            int leaves = 1 + int(gen() % 4);
            expected *= size_t(leaves);
            if (leaves == 1) {
                lib_text += "template process " + root + "(p: E) { equations: td(p.x) = -p.c * p.x; }\n";
            } else {
                lib_text += "template process " + root + "(p: E) {}\n";
                // leaves in a two-level hierarchy to exercise descendant lookup
                std::string mid = root + "Mid";
                lib_text += "template process " + mid + " : " + root + " {}\n";
                for (int l = 0; l < leaves; ++l) {
                    std::string parent = l % 2 ? mid : root;
                    lib_text += "template process " + root + "L" + std::to_string(l) + " : " + parent +
                                " { equations: td(p.x) = -p.c * p.x * " + std::to_string(l + 1) + "; }\n";
                }
            }
            sc_text += "process s" + std::to_string(r) + "(e) : " + root + " {}\n";
        }
        dsl::Library lib = dsl::parse_library(lib_text);
        dsl::Scenario sc = dsl::parse_scenario(sc_text, lib);
        auto structures = model::enumerate(model::instantiate(lib, sc));
        CHECK(structures.size() == expected);
        auto ids = ids_of(structures);
        CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == expected);
    }
}

TEST_CASE("S-S compiles to two states, one input, five params") {
    auto m = test::water_model("S-S");
    REQUIRE(m.states.size() == 2);
    CHECK(m.states[0].name == "tank1.h");
    CHECK(m.states[0].initial == 0.38086);
    CHECK(m.states[1].name == "tank2.h");
    CHECK(m.states[1].initial == 0.20508);
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].name == "pump.v");
    std::vector<std::string> names;
    for (const auto& p : m.params) names.push_back(p.name);
    CHECK(names == std::vector<std::string>{"tank1.A", "tank1.a", "tank2.A", "tank2.a", "pump.k"});
    for (const auto& p : m.params) {
        CHECK(p.bounds.lo < p.bounds.hi);
        CHECK(std::isfinite(p.bounds.lo));
    }
    // stable across compiles
    auto again = test::water_model("S-S");
    CHECK(again.bounds() == m.bounds());
}

TEST_CASE("eval_rhs hand values") {
    auto m = test::water_model("S-S");
    std::vector<double> p = {20, 0.65, 12, 0.7, 5};
    auto zero = model::eval_rhs(m, std::vector<double>{0, 0}, std::vector<double>{0}, p);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    auto d = model::eval_rhs(m, std::vector<double>{1, 1}, std::vector<double>{0}, p);
    const double e0 = -4.429 * 0.65 / 20;
    const double e1 = 4.429 * 0.65 / 12 - 4.429 * 0.7 / 12;
    CHECK(d[0] == doctest::Approx(e0).epsilon(1e-14));
    CHECK(d[1] == doctest::Approx(e1).epsilon(1e-14));
    CHECK(d[0] == doctest::Approx(-0.1439425).epsilon(1e-7));
    CHECK(d[1] == doctest::Approx(-0.01845417).epsilon(1e-6));

    auto bad = model::eval_rhs(m, std::vector<double>{-1, 0}, std::vector<double>{1}, p);
    CHECK_FALSE(std::isfinite(bad[0]));
}

TEST_CASE("sum aggregation equals the sum of single-process models") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("single_stage.pbs"), lib);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(0.1, 3.0);
    for (const auto& cs : model::enumerate(model::instantiate(lib, sc))) {
        auto full = model::compile(lib, cs, sc);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x = {U(gen), U(gen)}, u = {U(gen)}, p;
            for (size_t i = 0; i < full.params.size(); ++i) p.push_back(U(gen));
            auto total = model::eval_rhs(full, x, u, p);
            std::vector<double> parts(2, 0.0);
            for (const auto& inst : cs.instances) {
                // each instance compiled on its own
                model::CandidateStructure one{cs.id, {inst}};
                auto sub = model::compile(lib, one, sc);
                std::vector<double> sp, su;
                for (const auto& q : sub.params) sp.push_back(p[size_t(full.param_index(q.name))]);
                for (const auto& in : sub.inputs) su.push_back(u[size_t(full.input_index(in.name))]);
                auto d = model::eval_rhs(sub, x, su, sp);
                for (size_t s = 0; s < 2; ++s) parts[s] += d[s];
            }
            CHECK(total[0] == doctest::Approx(parts[0]).epsilon(1e-13));
            CHECK(total[1] == doctest::Approx(parts[1]).epsilon(1e-13));
        }
    }
}

TEST_CASE("state without contributions has a zero RHS") {
    dsl::Library lib = test::water_library();
    std::string text = bench::asset("single_stage.pbs");
    // drop the valve and the outflow: tank2.h receives nothing
    text = text.substr(0, text.find("process valveTransmission"));
    dsl::Scenario sc = dsl::parse_scenario(text, lib);
    auto m = test::compile_id(lib, sc, model::enumerate(model::instantiate(lib, sc)).front().id);
    REQUIRE(m.states.size() == 2);
    CHECK(m.rhs[1] == dsl::Expr::number(0));
    CHECK(model::eval_rhs(m, std::vector<double>{1, 1}, std::vector<double>{1}, std::vector<double>{2, 3})[1] ==
          0.0);
}

TEST_CASE("linear leaves are homogeneous in the state") {
    auto m = test::water_model("L-L");
    std::vector<double> p = {20, 0.65, 12, 0.7, 5};
    auto d1 = model::eval_rhs(m, std::vector<double>{0.7, 0.3}, std::vector<double>{0}, p);
    auto d2 = model::eval_rhs(m, std::vector<double>{1.4, 0.6}, std::vector<double>{0}, p);
    CHECK(d2[0] == doctest::Approx(2 * d1[0]).epsilon(1e-14));
    CHECK(d2[1] == doctest::Approx(2 * d1[1]).epsilon(1e-14));
}

TEST_CASE("format_model renders the flattened equations") {
    auto m = test::water_model("S-S");
    std::string text = model::format_model(m, truth_params(m));
    CHECK(text.find("td(tank2.h) = 4.429*pow(tank1.h,0.5)*0.65/12 - 4.429*pow(tank2.h,0.5)*0.7/12") !=
          std::string::npos);
    CHECK(text.find("td(tank1.h) = ") != std::string::npos);
    CHECK(model::format_model(m, truth_params(m)) == text);

    auto ll = test::water_model("L-L");
    std::string lin = model::format_model(ll, std::vector<double>(ll.params.size(), 1.0));
    auto eqs = lin.substr(lin.find("equations:"));
    CHECK(eqs.find("pow") == std::string::npos);
    CHECK(eqs.find("exp") == std::string::npos);
}

TEST_CASE("stage-1 valve keeps only the upper-tank equation") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("stage1.pbs"), lib);
    auto inst = model::instantiate(lib, sc);
    REQUIRE(inst.size() == 2);
    for (const auto& pi : inst[1].instances) {
        REQUIRE(pi.equations.size() == 1);
        CHECK(pi.equations[0].target_owner == "tank1");
    }
    auto structures = model::enumerate(inst);
    CHECK(ids_of(structures) == std::vector<std::string>{"S", "L", "E"});
    auto m = model::compile(lib, structures[0], sc);
    CHECK(m.states.size() == 1);
    std::vector<std::string> names;
    for (const auto& p : m.params) names.push_back(p.name);
    CHECK(names == std::vector<std::string>{"tank1.A", "tank1.a", "pump.k"});
}

TEST_CASE("stage-2 scenario folds promoted constants") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::substitute(
        dsl::parse_scenario(bench::asset("stage2.pbs"), lib),
        {{"tank1_A", 23.98}, {"tank1_a", 0.762}, {"valve_form", std::string("ValveTransmission.SquareRoot")}},
        lib);
    auto structures = model::enumerate(model::instantiate(lib, sc));
    CHECK(ids_of(structures) == std::vector<std::string>{"S-S", "S-L", "S-E"});
    auto m = model::compile(lib, structures[0], sc);
    REQUIRE(m.states.size() == 1);
    CHECK(m.states[0].name == "tank2.h");
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].name == "tank1.h");
    std::vector<std::string> names;
    for (const auto& p : m.params) names.push_back(p.name);
    CHECK(names == std::vector<std::string>{"tank2.A", "tank2.a"});
    std::string rhs = dsl::to_infix(m.rhs[0]);
    CHECK(rhs.find("0.762") != std::string::npos);
    CHECK(rhs.find("tank1.a") == std::string::npos);
}

TEST_CASE("unfilled placeholders cannot be instantiated") {
    dsl::Library lib = test::water_library();
    dsl::Scenario sc = dsl::parse_scenario(bench::asset("stage2.pbs"), lib);
    CHECK_THROWS_AS(model::instantiate(lib, sc), model::ModelError);
}

TEST_CASE("fixed P = 0.5 reproduces the square-root model") {
    dsl::Library lib = test::power_library();
    std::string text = bench::asset("single_stage.pbs");
    text.replace(text.find("ValveTransmission { consts: G = 4.429; }"), 40,
                 "ValveTransmission.Power { consts: G = 4.429, P = 0.5; }");
    text.replace(text.find("Outflow { consts: G = 4.429; }"), 30, "Outflow.Power { consts: G = 4.429, P = 0.5; }");
    dsl::Scenario sc = dsl::parse_scenario(text, lib);
    auto pp = model::compile(lib, model::enumerate(model::instantiate(lib, sc)).front(), sc);
    auto ss = test::water_model("S-S");
    REQUIRE(pp.params.size() == ss.params.size());
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> U(0.01, 5.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x = {U(gen), U(gen)}, u = {U(gen)}, p;
        for (size_t k = 0; k < ss.params.size(); ++k) p.push_back(U(gen));
        auto a = model::eval_rhs(pp, x, u, p);
        auto b = model::eval_rhs(ss, x, u, p);
        CHECK(std::abs(a[0] - b[0]) <= 1e-12 * std::max(1.0, std::abs(b[0])));
        CHECK(std::abs(a[1] - b[1]) <= 1e-12 * std::max(1.0, std::abs(b[1])));
    }
}

TEST_CASE("JSON export lists states, inputs and prefix RHS") {
    auto m = test::water_model("S-S");
    auto j = model::model_to_json(m);
    CHECK(j["states"].size() == 2);
    CHECK(j["inputs"].size() == 1);
    CHECK(j["params"].size() == 5);
    CHECK(j["states"][0]["rhs"].get<std::string>().front() == '(');
}

TEST_CASE("range check on initial values") {
    dsl::Library lib = test::water_library();
    std::string text = bench::asset("single_stage.pbs");
    text.replace(text.find("initial: 0.38086"), 16, "initial: 600");
    dsl::Scenario sc = dsl::parse_scenario(text, lib);
    auto cs = model::enumerate(model::instantiate(lib, sc)).front();
    CHECK_NOTHROW(model::compile(lib, cs, sc));
    CHECK_THROWS_AS(model::compile(lib, cs, sc, {.check_ranges = true}), model::ModelError);
}

}  // TEST_SUITE
