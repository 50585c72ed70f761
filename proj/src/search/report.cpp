#include "pbm/search/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pbm/dsl/printer.hpp"

namespace pbm::search {

namespace {

std::string fixed(double v) {
    if (!std::isfinite(v)) return dsl::format_number(v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(const std::string& s, size_t width) { return s.size() >= width ? s : s + std::string(width - s.size(), ' '); }

std::string text_table(const std::vector<RankedResult>& results) {
    size_t w = 5;
    for (const auto& r : results) w = std::max(w, r.id.size());
    std::string val_head = "Validation";
    std::string test_head = "Test";
    if (!results.empty()) {
        std::string joined;
        for (const auto& o : results.front().outputs) joined += (joined.empty() ? "" : "+") + o;
        val_head += " (" + joined + ")";
        if (!results.front().test_output.empty()) test_head += " (" + results.front().test_output + ")";
    }
    std::string out = "Rank  " + pad("Model", w) + "  " + pad(val_head, 20) + "  " + test_head + "\n";
    for (const auto& r : results) {
        out += pad(std::to_string(r.rank), 4) + "  " + pad(r.id, w) + "  " + pad(fixed(r.validation_error), 20) +
               "  " + fixed(r.test_error);
        if (!r.failure.empty()) out += "  (" + r.failure + ")";
        out += "\n";
    }
    return out;
}

std::string csv_table(const std::vector<RankedResult>& results) {
    std::string out = "rank,model,validation_error,test_error,train_error\n";
    for (const auto& r : results) {
        out += std::to_string(r.rank) + "," + r.id + "," + dsl::format_number(r.validation_error) + "," +
               dsl::format_number(r.test_error) + "," + dsl::format_number(r.train_error) + "\n";
    }
    return out;
}

}  // namespace

ReportFormat format_from_string(std::string_view s) {
    if (s == "text") return ReportFormat::Text;
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    throw std::invalid_argument("report format must be text, json or csv");
}

nlohmann::ordered_json results_json(const std::vector<RankedResult>& results) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (size_t i = 0; i < r.fit.names.size() && i < r.fit.params.size(); ++i) {
            params[r.fit.names[i]] = de::number_json(r.fit.params[i]);
        }
        nlohmann::ordered_json j = {{"rank", r.rank},
                                    {"model", r.id},
                                    {"validation_error", de::number_json(r.validation_error)},
                                    {"test_error", de::number_json(r.test_error)},
                                    {"train_error", de::number_json(r.train_error)},
                                    {"outputs", r.outputs},
                                    {"test_output", r.test_output},
                                    {"params", params},
                                    {"evals", r.fit.evals},
                                    {"seed", r.fit.seed}};
        if (!r.failure.empty()) j["failure"] = r.failure;
        arr.push_back(std::move(j));
    }
    return arr;
}

nlohmann::ordered_json multi_stage_json(const MultiStageResult& result) {
    auto stages = nlohmann::ordered_json::array();
    for (const auto& st : result.stages) {
        nlohmann::ordered_json promoted = nlohmann::ordered_json::object();
        for (const auto& [k, v] : st.promoted) {
            if (const double* d = std::get_if<double>(&v)) promoted[k] = *d;
            else promoted[k] = std::get<std::string>(v);
        }
        stages.push_back({{"name", st.name},
                          {"outputs", st.outputs},
                          {"promoted", promoted},
                          {"tie", st.tie},
                          {"results", results_json(st.ranked)}});
    }
    return {{"stages", stages}};
}

std::string report(const std::vector<RankedResult>& results, ReportFormat format) {
    if (results.empty()) throw std::invalid_argument("nothing to report");
    switch (format) {
        case ReportFormat::Text: return text_table(results);
        case ReportFormat::Json: return results_json(results).dump(2) + "\n";
        case ReportFormat::Csv: return csv_table(results);
    }
    return {};
}

std::string params_csv(const std::vector<RankedResult>& results) {
    std::string out = "model,param,value,lo,hi\n";
    for (const auto& r : results) {
        for (size_t i = 0; i < r.fit.names.size() && i < r.fit.params.size(); ++i) {
            out += r.id + "," + r.fit.names[i] + "," + dsl::format_number(r.fit.params[i]) + "," +
                   dsl::format_number(r.fit.bounds[i].lo) + "," + dsl::format_number(r.fit.bounds[i].hi) + "\n";
        }
    }
    return out;
}

std::string series_csv(const RankedResult& result, const sim::Dataset& data, const sim::SignalMap& map,
                       const sim::SolverConfig& solver) {
    if (result.fit.params.size() != result.model.params.size()) {
        throw std::invalid_argument("model " + result.id + " has no fitted parameters");
    }
    sim::Trajectory traj = sim::simulate(result.model, result.fit.params, data, map, solver);
    std::vector<const std::vector<double>*> cols;
    std::string out = "t";
    for (const auto& o : result.outputs) {
        out += "," + o + "_measured," + o + "_simulated";
        cols.push_back(&data.column(o));
        cols.push_back(&traj.column(map.var_for(o)));
    }
    out += "\n";
    for (size_t i = 0; i < data.size(); ++i) {
        out += dsl::format_number(data.t[i]);
        for (const auto* c : cols) out += "," + dsl::format_number((*c)[i]);
        out += "\n";
    }
    return out;
}

}  // namespace pbm::search
