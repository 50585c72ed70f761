#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbm/dsl/ast.hpp"
#include "pbm/model/tape.hpp"

namespace pbm::model {

/// Raised when a scenario cannot be turned into candidate models.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InstanceConst {
    std::string name;
    dsl::Range range;
    bool fixed = false;
    double value = 0.0;
};

/// One leaf template bound to a skeleton's entities. Equation references to
/// entity parameters are renamed to the bound instance names; references to
/// process constants keep an empty owner.
struct ProcessInstance {
    std::string skeleton;
    std::string template_name;  // qualified leaf name
    std::string leaf_name;      // short leaf name
    std::vector<std::string> entities;
    std::vector<InstanceConst> consts;
    std::vector<dsl::Equation> equations;
    /// The skeleton offers a choice, so this instance contributes to the structure id.
    bool selectable = false;

    const InstanceConst* find_const(std::string_view n) const;
};

struct SkeletonInstances {
    std::string skeleton;
    std::vector<ProcessInstance> instances;
};

struct CandidateStructure {
    std::string id;
    std::vector<ProcessInstance> instances;  // one per skeleton, skeleton order
};

/// One instance per leaf descendant-or-self of each skeleton's template.
/// The scenario must have no pending placeholders.
std::vector<SkeletonInstances> instantiate(const dsl::Library& lib, const dsl::Scenario& scenario);

/// Cartesian product in skeleton order; the last skeleton varies fastest.
std::vector<CandidateStructure> enumerate(const std::vector<SkeletonInstances>& instances);

struct StateVar {
    std::string name;  // "entity.var"
    double initial = 0.0;
    std::optional<dsl::Range> range;
};

struct InputVar {
    std::string name;
    std::optional<dsl::Range> range;
    /// Some library process drives this variable with td(); it is a
    /// measured state rather than an actuator signal.
    bool dynamic = false;
};

struct Param {
    std::string name;  // "entity.const" or "process.const"
    dsl::Range bounds;
};

struct CompiledModel {
    std::string id;
    std::vector<ProcessInstance> instances;
    std::vector<StateVar> states;
    std::vector<InputVar> inputs;
    std::vector<Param> params;
    /// Per state; references name states, inputs and params by full name.
    std::vector<dsl::Expr> rhs;
    Tape tape;

    int state_index(std::string_view name) const;
    int input_index(std::string_view name) const;
    int param_index(std::string_view name) const;
    std::vector<dsl::Range> bounds() const;
};

struct CompileOptions {
    /// Reject initial values outside the declared var range.
    bool check_ranges = false;
};

CompiledModel compile(const dsl::Library& lib, const CandidateStructure& structure, const dsl::Scenario& scenario,
                      const CompileOptions& options = {});

/// d(state)/dt. Domain errors surface as non-finite entries.
std::vector<double> eval_rhs(const CompiledModel& model, std::span<const double> state,
                             std::span<const double> inputs, std::span<const double> params);

/// RHS with parameters replaced by literal values.
std::vector<dsl::Expr> bind_params(const CompiledModel& model, std::span<const double> params);

/// Process view followed by the flattened equations.
std::string format_model(const CompiledModel& model, std::span<const double> params);

/// Prefix (s-expression) rendering used by the JSON export.
std::string to_prefix(const dsl::Expr& e);

nlohmann::ordered_json model_to_json(const CompiledModel& model);

}  // namespace pbm::model
