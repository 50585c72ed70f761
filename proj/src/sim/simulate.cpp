#include "pbm/sim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pbm/dsl/printer.hpp"

namespace pbm::sim {

void SolverConfig::validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0)) throw std::invalid_argument("solver tolerances must be positive");
    if (max_steps_per_interval < 1) throw std::invalid_argument("max steps per interval must be at least 1");
    if (mean_steps_per_interval < 0) throw std::invalid_argument("mean steps per interval must not be negative");
}

const char* to_string(InputHold h) {
    switch (h) {
        case InputHold::ZeroOrder: return "zero-order";
        case InputHold::Linear: return "linear";
        case InputHold::Auto: break;
    }
    return "auto";
}

InputHold hold_from_string(std::string_view s) {
    if (s == "auto") return InputHold::Auto;
    if (s == "zero-order") return InputHold::ZeroOrder;
    if (s == "linear") return InputHold::Linear;
    throw std::invalid_argument("input hold must be auto, zero-order or linear");
}

nlohmann::ordered_json to_json(const SolverConfig& cfg) {
    return {{"abs_tol", cfg.abs_tol},
            {"rel_tol", cfg.rel_tol},
            {"max_steps_per_interval", cfg.max_steps_per_interval},
            {"mean_steps_per_interval", cfg.mean_steps_per_interval},
            {"hold", to_string(cfg.hold)},
            {"clamp_inputs", cfg.clamp_inputs}};
}

SolverConfig solver_from_json(const nlohmann::json& j) {
    SolverConfig cfg;
    cfg.abs_tol = j.value("abs_tol", cfg.abs_tol);
    cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
    cfg.max_steps_per_interval = j.value("max_steps_per_interval", cfg.max_steps_per_interval);
    cfg.mean_steps_per_interval = j.value("mean_steps_per_interval", cfg.mean_steps_per_interval);
    cfg.hold = hold_from_string(j.value("hold", std::string(to_string(cfg.hold))));
    cfg.clamp_inputs = j.value("clamp_inputs", cfg.clamp_inputs);
    cfg.validate();
    return cfg;
}

int Trajectory::state_index(std::string_view state) const {
    for (size_t i = 0; i < states.size(); ++i) {
        if (states[i] == state) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<double>& Trajectory::column(std::string_view state) const {
    int i = state_index(state);
    if (i < 0) throw std::out_of_range("trajectory has no state '" + std::string(state) + "'");
    return columns[i];
}

Simulator::Simulator(const model::CompiledModel& model, const Dataset& data, const SignalMap& map,
                     const SolverConfig& cfg)
    : model_(model), data_(data), cfg_(cfg) {
    cfg_.validate();
    if (data.size() < 1) throw DataError("dataset is empty");
    for (const auto& in : model.inputs) {
        std::string col = map.column_for(in.name);
        if (col.empty()) throw DataError("model input '" + in.name + "' is not mapped to a data column");
        std::vector<double> values = data.column(col);
        if (cfg_.clamp_inputs && in.range) {
            for (double& v : values) v = std::clamp(v, in.range->lo, in.range->hi);
        }
        inputs_.push_back(std::move(values));
        linear_.push_back(cfg_.hold == InputHold::Linear || (cfg_.hold == InputHold::Auto && in.dynamic));
    }
    bool any_linear = std::find(linear_.begin(), linear_.end(), 1) != linear_.end();
    for (size_t i = 1; i < data.size(); ++i) {
        bool change = any_linear;
        for (const auto& col : inputs_) change = change || col[i] != col[i - 1];
        if (change) breaks_.push_back(i);
    }
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Dense output (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

class Integrator {
public:
    Integrator(const model::CompiledModel& m, const Dataset& data, const std::vector<std::vector<double>>& inputs,
               const std::vector<char>& linear, const SolverConfig& cfg, std::span<const double> params)
        : m_(m), data_(data), inputs_(inputs), linear_(linear), cfg_(cfg), params_(params) {
        any_linear_ = std::find(linear.begin(), linear.end(), 1) != linear.end();
        const size_t n = m.states.size();
        for (auto* v : {&y_, &y5_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &r2_, &r3_, &r4_, &r5_}) {
            v->assign(n, 0.0);
        }
        u_.assign(inputs.size(), 0.0);
        scratch_.assign(m.tape.registers(), 0.0);
    }

    Trajectory run(const std::vector<size_t>& breaks, size_t stop) {
        const size_t n = stop;
        const size_t ns = m_.states.size();
        Trajectory tr;
        tr.t.assign(data_.t.begin(), data_.t.begin() + n);
        for (const auto& s : m_.states) tr.states.push_back(s.name);
        tr.columns.assign(ns, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
        for (size_t k = 0; k < ns; ++k) {
            y_[k] = m_.states[k].initial;
            tr.columns[k][0] = y_[k];
        }
        tr.reached = 1;

        size_t start = 0;
        auto next_break = std::upper_bound(breaks.begin(), breaks.end(), start);
        while (start + 1 < n) {
            size_t end = n - 1;
            while (next_break != breaks.end() && *next_break <= start) ++next_break;
            if (next_break != breaks.end() && *next_break < end) end = *next_break;
            if (!segment(start, end, tr)) {
                tr.failed = true;
                return tr;
            }
            start = end;
        }
        return tr;
    }

private:
    const model::CompiledModel& m_;
    const Dataset& data_;
    const std::vector<std::vector<double>>& inputs_;
    const std::vector<char>& linear_;
    bool any_linear_ = false;
    const SolverConfig& cfg_;
    std::span<const double> params_;

    std::vector<double> y_, y5_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, r2_, r3_, r4_, r5_, u_, scratch_;
    size_t seg_ = 0;  // grid index the current segment's inputs are taken from
    double h_ = 0.0;
    long total_steps_ = 0;

    void rhs(double t, const std::vector<double>& y, std::vector<double>& out) {
        if (any_linear_ && seg_ + 1 < data_.size()) {
            double w = (t - data_.t[seg_]) / (data_.t[seg_ + 1] - data_.t[seg_]);
            for (size_t j = 0; j < u_.size(); ++j) {
                if (linear_[j]) u_[j] = inputs_[j][seg_] + w * (inputs_[j][seg_ + 1] - inputs_[j][seg_]);
            }
        }
        m_.tape.eval(y.data(), u_.data(), params_.data(), out.data(), scratch_.data());
    }

    double norm(const std::vector<double>& v, const std::vector<double>& ya, const std::vector<double>& yb) const {
        double sum = 0.0;
        for (size_t i = 0; i < v.size(); ++i) {
            double sk = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            double q = v[i] / sk;
            sum += q * q;
        }
        return v.empty() ? 0.0 : std::sqrt(sum / double(v.size()));
    }

    double initial_step(double t, double span) {
        double d0 = norm(y_, y_, y_);
        double d1n = norm(k1_, y_, y_);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, span);
        for (size_t i = 0; i < y_.size(); ++i) tmp_[i] = y_[i] + h0 * k1_[i];
        rhs(t + h0, tmp_, k2_);
        if (!all_finite(k2_)) return h0;
        for (size_t i = 0; i < y_.size(); ++i) k3_[i] = (k2_[i] - k1_[i]) / h0;
        double d2 = norm(k3_, y_, y_);
        double dm = std::max(d1n, d2);
        double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100 * h0, h1, span});
    }

    void set_inputs(size_t idx) {
        seg_ = idx;
        for (size_t j = 0; j < u_.size(); ++j) u_[j] = inputs_[j][idx];
    }

    bool fail(Trajectory& tr, size_t next, const std::string& why) {
        tr.reached = next;
        tr.failure = why + " at t=" + dsl::format_number(data_.t[next - 1]);
        return false;
    }

    // Integrates from grid index `from` to `to` with inputs held from `from`.
    bool segment(size_t from, size_t to, Trajectory& tr) {
        const size_t ns = y_.size();
        set_inputs(from);
        double t = data_.t[from];
        const double t_end = data_.t[to];
        size_t next = from + 1;

        rhs(t, y_, k1_);
        if (!all_finite(k1_)) return fail(tr, next, "non-finite derivative");
        if (ns == 0) {
            tr.reached = to + 1;
            return true;
        }
        if (h_ <= 0.0) h_ = initial_step(t, t_end - t);

        long since_output = 0;
        int nonfinite = 0;
        bool rejected = false;
        while (next <= to) {
            ++total_steps_;
            if (cfg_.mean_steps_per_interval > 0 &&
                total_steps_ > cfg_.mean_steps_per_interval * long(next + 9)) {
                return fail(tr, next, "step allowance exceeded");
            }
            if (++since_output > cfg_.max_steps_per_interval) return fail(tr, next, "step limit reached");

            double h = h_;
            bool last = false;
            if (t + h >= t_end - 1e-12 * std::abs(t_end)) {
                h = t_end - t;
                last = true;
            }
            if (!(h > 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))) {
                return fail(tr, next, "step size underflow");
            }

            for (size_t i = 0; i < ns; ++i) tmp_[i] = y_[i] + h * a21 * k1_[i];
            rhs(t + c2 * h, tmp_, k2_);
            for (size_t i = 0; i < ns; ++i) tmp_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
            rhs(t + c3 * h, tmp_, k3_);
            for (size_t i = 0; i < ns; ++i) tmp_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
            rhs(t + c4 * h, tmp_, k4_);
            for (size_t i = 0; i < ns; ++i) {
                tmp_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
            }
            rhs(t + c5 * h, tmp_, k5_);
            for (size_t i = 0; i < ns; ++i) {
                tmp_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
            }
            rhs(t + h, tmp_, k6_);
            for (size_t i = 0; i < ns; ++i) {
                y5_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
            }
            rhs(t + h, y5_, k7_);

            bool finite = all_finite(y5_) && all_finite(k7_) && all_finite(k2_) && all_finite(k3_) &&
                          all_finite(k4_) && all_finite(k5_) && all_finite(k6_);
            if (!finite) {
                if (++nonfinite > 60) return fail(tr, next, "non-finite state");
                h_ = h * 0.25;
                rejected = true;
                continue;
            }
            nonfinite = 0;

            for (size_t i = 0; i < ns; ++i) {
                tmp_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
            }
            double err = norm(tmp_, y_, y5_);
            if (!std::isfinite(err)) err = 1e10;

            if (err > 1.0) {
                h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
                rejected = true;
                continue;
            }

            double t_new = last ? t_end : t + h;
            bool dense_ready = false;
            while (next <= to && data_.t[next] <= t_new) {
                if (data_.t[next] == t_new) {
                    for (size_t i = 0; i < ns; ++i) tr.columns[i][next] = y5_[i];
                } else {
                    if (!dense_ready) {
                        for (size_t i = 0; i < ns; ++i) {
                            double ydiff = y5_[i] - y_[i];
                            double bspl = h * k1_[i] - ydiff;
                            r2_[i] = ydiff;
                            r3_[i] = bspl;
                            r4_[i] = ydiff - h * k7_[i] - bspl;
                            r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] +
                                          d7 * k7_[i]);
                        }
                        dense_ready = true;
                    }
                    double th = (data_.t[next] - t) / h;
                    double th1 = 1.0 - th;
                    for (size_t i = 0; i < ns; ++i) {
                        tr.columns[i][next] =
                            y_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
                    }
                }
                ++next;
                tr.reached = next;
                since_output = 0;
            }

            t = t_new;
            std::swap(y_, y5_);
            std::swap(k1_, k7_);

            double fac = err == 0.0 ? 10.0 : std::min(10.0, 0.9 * std::pow(err, -0.2));
            if (rejected) fac = std::min(fac, 1.0);
            rejected = false;
            // A step cut short to land on the segment end does not shrink the proposal.
            h_ = last ? std::max(h_, h * fac) : h * fac;
        }
        return true;
    }
};

}  // namespace

Trajectory Simulator::run(std::span<const double> params, size_t stop) const {
    if (params.size() != model_.params.size()) {
        throw std::invalid_argument("simulate: expected " + std::to_string(model_.params.size()) + " parameters");
    }
    size_t n = stop == 0 ? data_.size() : std::min(stop, data_.size());
    Integrator integ(model_, data_, inputs_, linear_, cfg_, params);
    return integ.run(breaks_, n);
}

Trajectory simulate(const model::CompiledModel& model, std::span<const double> params, const Dataset& data,
                    const SignalMap& map, const SolverConfig& cfg) {
    return Simulator(model, data, map, cfg).run(params);
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t";
    for (const auto& s : traj.states) out += "," + s;
    out += "\n";
    for (size_t i = 0; i < traj.t.size(); ++i) {
        out += dsl::format_number(traj.t[i]);
        for (const auto& col : traj.columns) out += "," + dsl::format_number(col[i]);
        out += "\n";
    }
    return out;
}

}  // namespace pbm::sim
