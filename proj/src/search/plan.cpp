#include "pbm/search/plan.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "pbm/bench/assets.hpp"
#include "pbm/dsl/error.hpp"
#include "pbm/util/io.hpp"

namespace pbm::search {

namespace {

struct Source {
    std::string owner;
    std::string name;  // empty for a skeleton's template
};

Source split_source(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos) return {s, ""};
    return {s.substr(0, dot), s.substr(dot + 1)};
}

/// Checks that `source` names something `scenario` can provide.
void check_source(const std::string& key, const std::string& source, const dsl::Scenario& scenario,
                  const std::string& stage) {
    Source src = split_source(source);
    if (src.name.empty()) {
        if (!scenario.find_process(src.owner)) {
            throw PlanError("stage '" + stage + "': promoted '" + key + "' names unknown process '" + src.owner +
                            "' of the previous stage");
        }
        return;
    }
    const dsl::ConstBinding* c = nullptr;
    if (const auto* e = scenario.find_entity(src.owner)) c = e->find_const(src.name);
    if (const auto* p = scenario.find_process(src.owner)) c = p->find_const(src.name);
    if (!c) {
        throw PlanError("stage '" + stage + "': promoted '" + key + "' names unknown constant '" + source +
                        "' of the previous stage");
    }
}

}  // namespace

void StagePlan::validate(const dsl::Library& lib) const {
    if (stages.empty()) throw PlanError("plan has no stages");
    std::vector<dsl::Scenario> parsed;
    for (size_t k = 0; k < stages.size(); ++k) {
        const Stage& st = stages[k];
        if (st.outputs.empty()) throw PlanError("stage '" + st.name + "' has no outputs");
        try {
            parsed.push_back(dsl::parse_scenario(st.scenario_text, lib));
        } catch (const dsl::Error& e) {
            throw PlanError("stage '" + st.name + "': " + e.what());
        }
        auto holes = parsed.back().placeholders();
        std::set<std::string> want(holes.begin(), holes.end());
        std::set<std::string> have;
        for (const auto& [key, source] : st.promote) have.insert(key);
        for (const auto& h : want) {
            if (!have.count(h)) throw PlanError("stage '" + st.name + "': placeholder '@" + h + "' is not promoted");
        }
        for (const auto& h : have) {
            if (!want.count(h)) {
                throw PlanError("stage '" + st.name + "': promoted '" + h + "' matches no placeholder");
            }
        }
        if (k == 0) continue;
        for (const auto& [key, source] : st.promote) check_source(key, source, parsed[k - 1], st.name);
    }
}

StagePlan parse_plan(const nlohmann::json& j, const std::function<std::string(const std::string&)>& load) {
    if (!j.is_object() || !j.contains("stages") || !j["stages"].is_array()) {
        throw PlanError("plan must be an object with a 'stages' array");
    }
    StagePlan plan;
    for (const auto& s : j["stages"]) {
        Stage st;
        st.name = s.value("name", "stage" + std::to_string(plan.stages.size() + 1));
        if (!s.contains("scenario")) throw PlanError("stage '" + st.name + "' has no scenario");
        st.scenario_path = s["scenario"].get<std::string>();
        st.scenario_text = load(st.scenario_path);
        st.outputs = s.value("outputs", std::vector<std::string>{});
        st.promote = s.value("promote", std::map<std::string, std::string>{});
        plan.stages.push_back(std::move(st));
    }
    return plan;
}

StagePlan load_plan(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw PlanError(path + ": " + e.what());
    }
    auto dir = std::filesystem::path(path).parent_path();
    return parse_plan(j, [&](const std::string& p) { return util::read_file((dir / p).string()); });
}

StagePlan bundled_two_stage() {
    return parse_plan(nlohmann::json::parse(bench::asset("two_stage.json")),
                      [](const std::string& p) { return bench::asset(p); });
}

nlohmann::ordered_json to_json(const StagePlan& plan) {
    auto stages = nlohmann::ordered_json::array();
    for (const auto& st : plan.stages) {
        nlohmann::ordered_json s = {{"name", st.name}, {"scenario", st.scenario_path}, {"outputs", st.outputs}};
        if (!st.promote.empty()) s["promote"] = st.promote;
        stages.push_back(s);
    }
    return {{"stages", stages}};
}

std::map<std::string, dsl::PlaceholderValue> promote(const Stage& next, const RankedResult& winner,
                                                      const dsl::Scenario& scenario) {
    std::map<std::string, dsl::PlaceholderValue> out;
    for (const auto& [key, source] : next.promote) {
        Source src = split_source(source);
        if (src.name.empty()) {
            bool found = false;
            for (const auto& inst : winner.model.instances) {
                if (inst.skeleton == src.owner) {
                    out[key] = inst.template_name;
                    found = true;
                }
            }
            if (!found) throw PlanError("winner " + winner.id + " has no process '" + src.owner + "'");
            continue;
        }
        if (winner.model.param_index(source) >= 0) {
            out[key] = winner.fit.param(source);
            continue;
        }
        const dsl::ConstBinding* c = nullptr;
        if (const auto* e = scenario.find_entity(src.owner)) c = e->find_const(src.name);
        if (const auto* p = scenario.find_process(src.owner)) c = p->find_const(src.name);
        if (!c || c->value.kind != dsl::ConstValue::Kind::Fixed) {
            throw PlanError("winner " + winner.id + " has no value for '" + source + "'");
        }
        out[key] = c->value.value;
    }
    return out;
}

MultiStageResult run_multi_stage(const dsl::Library& lib, const StagePlan& plan, const sim::Dataset& data,
                                 const SearchConfig& cfg) {
    plan.validate(lib);
    MultiStageResult result;
    std::map<std::string, dsl::PlaceholderValue> values;
    for (size_t k = 0; k < plan.stages.size(); ++k) {
        const Stage& st = plan.stages[k];
        dsl::Scenario sc = dsl::parse_scenario(st.scenario_text, lib);
        if (k > 0) sc = dsl::substitute(sc, values, lib);

        StageResult sr;
        sr.name = st.name;
        sr.outputs = st.outputs;
        sr.promoted = values;
        sr.ranked = run_single_stage(lib, sc, data, st.outputs, cfg);
        sr.tie = sr.ranked.size() > 1 && sr.ranked[1].validation_error == sr.ranked[0].validation_error;
        result.stages.push_back(std::move(sr));
        const RankedResult& winner = result.stages.back().ranked.front();

        if (k + 1 == plan.stages.size()) break;
        if (!std::isfinite(winner.validation_error)) {
            throw std::runtime_error("stage '" + st.name + "' produced no usable model");
        }
        values = promote(plan.stages[k + 1], winner, sc);
    }
    return result;
}

}  // namespace pbm::search
