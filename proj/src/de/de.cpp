#include "pbm/de/de.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "pbm/util/seed.hpp"

namespace pbm::de {

void DEConfig::validate() const {
    if (np < 4) throw std::invalid_argument("population size must be at least 4");
    if (!(f > 0)) throw std::invalid_argument("differential weight F must be positive");
    if (!(cr > 0 && cr <= 1)) throw std::invalid_argument("crossover probability must be in (0, 1]");
    if (!(budget_scale > 0)) throw std::invalid_argument("budget scale must be positive");
    if (!(budget_per_param * budget_scale >= np)) {
        throw std::invalid_argument("scaled budget per parameter must be at least the population size");
    }
}

long DEConfig::total_budget(size_t dims) const {
    return std::lround(double(dims) * budget_per_param * budget_scale);
}

nlohmann::ordered_json to_json(const DEConfig& cfg) {
    return {{"np", cfg.np},
            {"f", cfg.f},
            {"cr", cfg.cr},
            {"budget_per_param", cfg.budget_per_param},
            {"budget_scale", cfg.budget_scale},
            {"seed", cfg.seed},
            {"bounds", cfg.bounds == BoundMode::Clip ? "clip" : "reflect"},
            {"parallel", cfg.parallel}};
}

DEConfig de_from_json(const nlohmann::json& j) {
    DEConfig cfg;
    cfg.np = j.value("np", cfg.np);
    cfg.f = j.value("f", cfg.f);
    cfg.cr = j.value("cr", cfg.cr);
    cfg.budget_per_param = j.value("budget_per_param", cfg.budget_per_param);
    cfg.budget_scale = j.value("budget_scale", cfg.budget_scale);
    cfg.seed = j.value("seed", cfg.seed);
    std::string b = j.value("bounds", std::string("clip"));
    if (b == "clip") cfg.bounds = BoundMode::Clip;
    else if (b == "reflect") cfg.bounds = BoundMode::Reflect;
    else throw std::invalid_argument("unknown bound handling '" + b + "'");
    cfg.parallel = j.value("parallel", cfg.parallel);
    cfg.validate();
    return cfg;
}

namespace {

double guarded(const Objective& f, std::span<const double> x) {
    double v;
    try {
        v = f(x);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(util::splitmix64(seed)) {}
    double unit() { return util::unit_double(gen_()); }
    size_t below(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(gen_); }

private:
    std::mt19937_64 gen_;
};

double handle_bound(double v, const dsl::Range& r, BoundMode mode) {
    if (v >= r.lo && v <= r.hi) return v;
    if (mode == BoundMode::Reflect) {
        double w = v < r.lo ? 2 * r.lo - v : 2 * r.hi - v;
        if (w >= r.lo && w <= r.hi) return w;
    }
    return std::clamp(v, r.lo, r.hi);
}

GenerationStat stats(long gen, const std::vector<double>& fit) {
    GenerationStat s{gen, std::numeric_limits<double>::infinity(), 0.0};
    double sum = 0.0;
    long count = 0;
    for (double v : fit) {
        s.best = std::min(s.best, v);
        if (std::isfinite(v)) {
            sum += v;
            ++count;
        }
    }
    s.mean = count > 0 ? sum / double(count) : std::numeric_limits<double>::infinity();
    return s;
}

}  // namespace

void evaluate_population_serial(const Objective& f, const std::vector<double>& pop, size_t dims,
                                std::vector<double>& out) {
    const size_t n = out.size();
    for (size_t i = 0; i < n; ++i) out[i] = guarded(f, std::span<const double>(pop.data() + i * dims, dims));
}

void evaluate_population_parallel(const Objective& f, const std::vector<double>& pop, size_t dims,
                                  std::vector<double>& out) {
    const long n = static_cast<long>(out.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
        out[i] = guarded(f, std::span<const double>(pop.data() + i * dims, dims));
    }
}

DEResult differential_evolution(std::span<const dsl::Range> bounds, const Objective& f, const DEConfig& cfg) {
    cfg.validate();
    for (const auto& r : bounds) {
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi)) {
            throw std::invalid_argument("parameter bounds must be finite with lo < hi");
        }
    }
    DEResult res;
    res.seed = cfg.seed;
    const size_t d = bounds.size();
    if (d == 0) {
        res.best_value = guarded(f, {});
        res.evals = 1;
        res.trace.push_back({0, res.best_value, res.best_value});
        return res;
    }

    const size_t np = static_cast<size_t>(cfg.np);
    const long budget = cfg.total_budget(d);
    auto evaluate = [&](const std::vector<double>& pop, std::vector<double>& out) {
        if (cfg.parallel) evaluate_population_parallel(f, pop, d, out);
        else evaluate_population_serial(f, pop, d, out);
    };

    Rng rng(cfg.seed);
    std::vector<double> pop(np * d);
    for (size_t i = 0; i < np; ++i) {
        for (size_t j = 0; j < d; ++j) pop[i * d + j] = bounds[j].lo + rng.unit() * (bounds[j].hi - bounds[j].lo);
    }
    std::vector<double> fit(np);
    evaluate(pop, fit);
    res.evals = long(np);
    res.trace.push_back(stats(0, fit));

    std::vector<double> trial(np * d);
    std::vector<double> trial_fit(np);
    long gen = 0;
    while (res.evals + long(np) <= budget) {
        ++gen;
        for (size_t i = 0; i < np; ++i) {
            size_t r1, r2, r3;
            do r1 = rng.below(np); while (r1 == i);
            do r2 = rng.below(np); while (r2 == i || r2 == r1);
            do r3 = rng.below(np); while (r3 == i || r3 == r1 || r3 == r2);
            size_t jrand = rng.below(d);
            for (size_t j = 0; j < d; ++j) {
                double u = rng.unit();
                double x = pop[i * d + j];
                if (u < cfg.cr || j == jrand) {
                    x = pop[r1 * d + j] + cfg.f * (pop[r2 * d + j] - pop[r3 * d + j]);
                    x = handle_bound(x, bounds[j], cfg.bounds);
                }
                trial[i * d + j] = x;
            }
        }
        evaluate(trial, trial_fit);
        res.evals += long(np);
        for (size_t i = 0; i < np; ++i) {
            if (trial_fit[i] <= fit[i]) {
                std::copy_n(trial.begin() + long(i * d), d, pop.begin() + long(i * d));
                fit[i] = trial_fit[i];
            }
        }
        res.trace.push_back(stats(gen, fit));
    }

    size_t best = 0;
    for (size_t i = 1; i < np; ++i) {
        if (fit[i] < fit[best]) best = i;
    }
    res.best.assign(pop.begin() + long(best * d), pop.begin() + long(best * d + d));
    res.best_value = fit[best];
    return res;
}

}  // namespace pbm::de
