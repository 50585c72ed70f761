#include "pbm/model/modelspace.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "pbm/dsl/printer.hpp"

namespace pbm::model {

using dsl::Expr;

const InstanceConst* ProcessInstance::find_const(std::string_view n) const {
    auto it = std::find_if(consts.begin(), consts.end(), [&](const InstanceConst& c) { return c.name == n; });
    return it == consts.end() ? nullptr : &*it;
}

namespace {

// Returns false when some entity reference is outside `bound`.
bool rename_refs(Expr& e, const std::map<std::string, std::string>& bound) {
    if (e.kind == Expr::Kind::Ref) {
        if (e.owner.empty()) return true;
        auto it = bound.find(e.owner);
        if (it == bound.end()) return false;
        e.owner = it->second;
        return true;
    }
    for (auto& a : e.args) {
        if (!rename_refs(a, bound)) return false;
    }
    return true;
}

ProcessInstance make_instance(const dsl::ProcessSkeleton& skel, const dsl::ProcessTemplate& leaf) {
    ProcessInstance inst;
    inst.skeleton = skel.name;
    inst.template_name = leaf.qualified_name;
    inst.leaf_name = leaf.name;
    inst.entities = skel.entities;

    std::map<std::string, std::string> bound;
    for (size_t i = 0; i < skel.entities.size() && i < leaf.params.size(); ++i) {
        bound[leaf.params[i].name] = skel.entities[i];
    }

    for (const auto& decl : leaf.all_consts()) {
        InstanceConst c{decl.name, decl.range, false, 0.0};
        if (const dsl::ConstBinding* b = skel.find_const(decl.name)) {
            if (b->value.kind == dsl::ConstValue::Kind::Placeholder) {
                throw ModelError("process '" + skel.name + "' constant '" + decl.name + "' is still a placeholder");
            }
            if (b->value.kind == dsl::ConstValue::Kind::Fixed) {
                c.fixed = true;
                c.value = b->value.value;
            }
        }
        inst.consts.push_back(c);
    }

    for (const auto& eq : leaf.equations) {
        auto target = bound.find(eq.target_owner);
        if (target == bound.end()) continue;
        dsl::Equation out = eq;
        out.target_owner = target->second;
        if (!rename_refs(out.rhs, bound)) continue;
        inst.equations.push_back(std::move(out));
    }
    if (inst.equations.empty()) {
        throw ModelError("process '" + skel.name + "' with template " + leaf.qualified_name +
                         " keeps no equation for the entities it binds");
    }
    return inst;
}

std::string initials_id(const std::vector<const ProcessInstance*>& picks, bool full) {
    std::string id;
    for (const auto* p : picks) {
        if (!id.empty()) id += "-";
        id += full ? p->leaf_name : p->leaf_name.substr(0, 1);
    }
    return id;
}

}  // namespace

std::vector<SkeletonInstances> instantiate(const dsl::Library& lib, const dsl::Scenario& scenario) {
    if (!scenario.is_resolved()) {
        throw ModelError("scenario has unresolved placeholder '" + scenario.placeholders().front() + "'");
    }
    std::vector<SkeletonInstances> out;
    for (const auto& skel : scenario.processes) {
        const dsl::ProcessTemplate* tmpl = lib.find_process(skel.template_name);
        if (!tmpl) throw ModelError("unknown process template '" + skel.template_name + "'");
        auto leaves = lib.leaves_under(*tmpl);
        if (leaves.empty()) throw ModelError("template " + tmpl->qualified_name + " has no leaves");
        SkeletonInstances si{skel.name, {}};
        for (const auto* leaf : leaves) {
            ProcessInstance inst = make_instance(skel, *leaf);
            inst.selectable = leaves.size() > 1 || skel.promoted;
            si.instances.push_back(std::move(inst));
        }
        out.push_back(std::move(si));
    }
    return out;
}

std::vector<CandidateStructure> enumerate(const std::vector<SkeletonInstances>& instances) {
    std::vector<CandidateStructure> out;
    if (instances.empty()) return out;
    for (const auto& si : instances) {
        if (si.instances.empty()) return out;
    }

    std::vector<size_t> pick(instances.size(), 0);
    std::vector<std::vector<const ProcessInstance*>> choices;
    while (true) {
        CandidateStructure cs;
        std::vector<const ProcessInstance*> chosen;
        for (size_t s = 0; s < instances.size(); ++s) {
            cs.instances.push_back(instances[s].instances[pick[s]]);
            chosen.push_back(&instances[s].instances[pick[s]]);
        }
        out.push_back(std::move(cs));
        choices.push_back(std::move(chosen));

        size_t s = instances.size();
        bool advanced = false;
        while (s > 0 && !advanced) {
            --s;
            if (++pick[s] < instances[s].instances.size()) {
                advanced = true;
            } else {
                pick[s] = 0;
            }
        }
        if (!advanced) break;
    }

    // Ids come from the selectable skeletons; fall back to every skeleton
    // when none offers a choice, and to full leaf names on collisions.
    bool any_selectable = std::any_of(instances.begin(), instances.end(), [](const SkeletonInstances& si) {
        return si.instances.front().selectable;
    });
    auto id_picks = [&](size_t i) {
        std::vector<const ProcessInstance*> picks;
        for (const auto* p : choices[i]) {
            if (!any_selectable || p->selectable) picks.push_back(p);
        }
        return picks;
    };
    std::set<std::string> ids;
    for (size_t i = 0; i < out.size(); ++i) ids.insert(initials_id(id_picks(i), false));
    bool full = ids.size() != out.size();
    for (size_t i = 0; i < out.size(); ++i) out[i].id = initials_id(id_picks(i), full);
    return out;
}

int CompiledModel::state_index(std::string_view name) const {
    for (size_t i = 0; i < states.size(); ++i) {
        if (states[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int CompiledModel::input_index(std::string_view name) const {
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int CompiledModel::param_index(std::string_view name) const {
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<dsl::Range> CompiledModel::bounds() const {
    std::vector<dsl::Range> out;
    for (const auto& p : params) out.push_back(p.bounds);
    return out;
}

namespace {

struct CompileContext {
    const dsl::Scenario& scenario;
    const std::map<std::string, const dsl::EntityTemplate*>& templates;
    std::set<std::string> used_inputs;
    std::set<std::string> used_params;
    std::map<std::string, dsl::Range> param_ranges;

    // Rewrites references to full names and folds fixed constants.
    Expr resolve(const Expr& e, const ProcessInstance& inst) {
        if (e.kind != Expr::Kind::Ref) {
            Expr out = e;
            for (auto& a : out.args) a = resolve(a, inst);
            return out;
        }
        if (e.owner.empty()) {
            const InstanceConst* c = inst.find_const(e.name);
            if (!c) throw ModelError("process '" + inst.skeleton + "' has no constant '" + e.name + "'");
            if (c->fixed) return Expr::number(c->value, e.loc);
            std::string full = inst.skeleton + "." + e.name;
            used_params.insert(full);
            param_ranges[full] = c->range;
            return Expr::ref(inst.skeleton, e.name, e.loc);
        }
        const dsl::EntityInstance* ent = scenario.find_entity(e.owner);
        if (!ent) throw ModelError("unknown entity '" + e.owner + "'");
        std::string full = e.owner + "." + e.name;
        if (const dsl::VarBinding* v = ent->find_var(e.name)) {
            if (v->role == dsl::Role::Exogenous) used_inputs.insert(full);
            return Expr::ref(e.owner, e.name, e.loc);
        }
        const dsl::ConstBinding* c = ent->find_const(e.name);
        if (!c) throw ModelError("entity '" + e.owner + "' has no property '" + e.name + "'");
        switch (c->value.kind) {
            case dsl::ConstValue::Kind::Fixed: return Expr::number(c->value.value, e.loc);
            case dsl::ConstValue::Kind::Placeholder:
                throw ModelError("constant '" + full + "' is still a placeholder");
            case dsl::ConstValue::Kind::Free: break;
        }
        used_params.insert(full);
        param_ranges[full] = templates.at(e.owner)->find_const(e.name)->range;
        return Expr::ref(e.owner, e.name, e.loc);
    }
};

Expr aggregate(std::vector<Expr> terms) {
    if (terms.empty()) return Expr::number(0.0);
    Expr acc = std::move(terms.front());
    for (size_t i = 1; i < terms.size(); ++i) {
        Expr& t = terms[i];
        if (t.kind == Expr::Kind::Neg) {
            acc = Expr::binary(Expr::Kind::Sub, std::move(acc), std::move(t.args[0]));
        } else {
            acc = Expr::binary(Expr::Kind::Add, std::move(acc), std::move(t));
        }
    }
    return acc;
}

}  // namespace

namespace {

bool has_dynamics(const dsl::Library& lib, const std::string& entity, const std::string& var) {
    for (const auto& p : lib.processes) {
        for (const auto& eq : p.equations) {
            if (eq.target_var != var) continue;
            for (const auto& ep : p.params) {
                if (ep.name == eq.target_owner && ep.entity == entity) return true;
            }
        }
    }
    return false;
}

}  // namespace

CompiledModel compile(const dsl::Library& lib, const CandidateStructure& structure, const dsl::Scenario& scenario,
                      const CompileOptions& options) {
    CompiledModel m;
    m.id = structure.id;
    m.instances = structure.instances;

    std::map<std::string, const dsl::EntityTemplate*> templates;
    for (const auto& ent : scenario.entities) {
        const dsl::EntityTemplate* t = lib.find_entity(ent.template_name);
        if (!t) throw ModelError("unknown entity template '" + ent.template_name + "'");
        templates[ent.name] = t;
        for (const auto& v : ent.vars) {
            if (v.role != dsl::Role::Endogenous) continue;
            StateVar s{ent.name + "." + v.name, v.initial.value_or(0.0), t->find_var(v.name)->range};
            if (options.check_ranges && s.range && !s.range->contains(s.initial)) {
                throw ModelError("initial value of '" + s.name + "' is outside its declared range");
            }
            m.states.push_back(std::move(s));
        }
    }

    CompileContext ctx{scenario, templates, {}, {}, {}};
    std::vector<std::vector<Expr>> terms(m.states.size());
    for (const auto& inst : structure.instances) {
        for (const auto& eq : inst.equations) {
            int target = m.state_index(eq.target_owner + "." + eq.target_var);
            // Equations driving an exogenous variable have nothing to integrate.
            if (target < 0) continue;
            terms[target].push_back(ctx.resolve(eq.rhs, inst));
        }
    }
    for (auto& t : terms) m.rhs.push_back(aggregate(std::move(t)));

    for (const auto& ent : scenario.entities) {
        const dsl::EntityTemplate* t = templates.at(ent.name);
        for (const auto& v : ent.vars) {
            std::string full = ent.name + "." + v.name;
            if (ctx.used_inputs.count(full)) {
                m.inputs.push_back({full, t->find_var(v.name)->range, has_dynamics(lib, t->name, v.name)});
            }
        }
        for (const auto& c : ent.consts) {
            std::string full = ent.name + "." + c.name;
            if (ctx.used_params.count(full)) m.params.push_back({full, ctx.param_ranges.at(full)});
        }
    }
    for (const auto& inst : structure.instances) {
        for (const auto& c : inst.consts) {
            std::string full = inst.skeleton + "." + c.name;
            if (ctx.used_params.count(full)) m.params.push_back({full, ctx.param_ranges.at(full)});
        }
    }
    for (const auto& p : m.params) {
        if (!(p.bounds.lo < p.bounds.hi)) throw ModelError("parameter '" + p.name + "' has empty bounds");
    }

    m.tape = Tape(m.rhs, [&](const Expr& ref, Tape::Slot& slot) {
        std::string full = ref.owner + "." + ref.name;
        if (int i = m.state_index(full); i >= 0) {
            slot = {Tape::SlotKind::State, i};
            return true;
        }
        if (int i = m.input_index(full); i >= 0) {
            slot = {Tape::SlotKind::Input, i};
            return true;
        }
        if (int i = m.param_index(full); i >= 0) {
            slot = {Tape::SlotKind::Param, i};
            return true;
        }
        return false;
    });
    return m;
}

std::vector<double> eval_rhs(const CompiledModel& model, std::span<const double> state,
                             std::span<const double> inputs, std::span<const double> params) {
    if (state.size() != model.states.size() || inputs.size() != model.inputs.size() ||
        params.size() != model.params.size()) {
        throw std::invalid_argument("eval_rhs: vector length does not match the model");
    }
    std::vector<double> out(model.states.size());
    std::vector<double> scratch(model.tape.registers());
    model.tape.eval(state.data(), inputs.data(), params.data(), out.data(), scratch.data());
    return out;
}

namespace {

Expr substitute_params(const Expr& e, const CompiledModel& m, std::span<const double> params) {
    if (e.kind == Expr::Kind::Ref) {
        int i = m.param_index(e.owner + "." + e.name);
        if (i >= 0) return Expr::number(params[i], e.loc);
        return e;
    }
    Expr out = e;
    for (auto& a : out.args) a = substitute_params(a, m, params);
    return out;
}

}  // namespace

std::vector<dsl::Expr> bind_params(const CompiledModel& model, std::span<const double> params) {
    if (params.size() != model.params.size()) {
        throw std::invalid_argument("bind_params: parameter count does not match the model");
    }
    std::vector<Expr> out;
    for (const auto& r : model.rhs) out.push_back(substitute_params(r, model, params));
    return out;
}

std::string format_model(const CompiledModel& model, std::span<const double> params) {
    std::ostringstream out;
    out << "model " << (model.id.empty() ? "-" : model.id) << "\n";
    out << "processes:\n";
    for (const auto& inst : model.instances) {
        out << "  " << inst.skeleton << "(";
        for (size_t i = 0; i < inst.entities.size(); ++i) out << (i ? ", " : "") << inst.entities[i];
        out << ") : " << inst.template_name;
        for (const auto& c : inst.consts) {
            out << " " << c.name << "=";
            if (c.fixed) {
                out << dsl::format_number(c.value);
            } else {
                int i = model.param_index(inst.skeleton + "." + c.name);
                out << (i >= 0 ? dsl::format_number(params[i]) : std::string("unused"));
            }
        }
        out << "\n";
    }
    if (!model.params.empty()) {
        out << "parameters:\n";
        for (size_t i = 0; i < model.params.size(); ++i) {
            out << "  " << model.params[i].name << " = " << dsl::format_number(params[i]) << "\n";
        }
    }
    out << "equations:\n";
    auto bound = bind_params(model, params);
    for (size_t i = 0; i < model.states.size(); ++i) {
        out << "  td(" << model.states[i].name << ") = " << dsl::to_infix(bound[i]) << "\n";
    }
    return out.str();
}

std::string to_prefix(const Expr& e) {
    static const char* ops[] = {"", "", "neg", "+", "-", "*", "/", "pow", "exp"};
    switch (e.kind) {
        case Expr::Kind::Number: return dsl::format_number(e.value);
        case Expr::Kind::Ref: return e.owner.empty() ? e.name : e.owner + "." + e.name;
        default: break;
    }
    std::string s = "(";
    s += ops[static_cast<int>(e.kind)];
    for (const auto& a : e.args) s += " " + to_prefix(a);
    return s + ")";
}

nlohmann::ordered_json model_to_json(const CompiledModel& model) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["id"] = model.id;
    auto states = ordered_json::array();
    for (size_t i = 0; i < model.states.size(); ++i) {
        states.push_back({{"name", model.states[i].name},
                          {"initial", model.states[i].initial},
                          {"rhs", to_prefix(model.rhs[i])}});
    }
    j["states"] = states;
    auto inputs = ordered_json::array();
    for (const auto& u : model.inputs) inputs.push_back(u.name);
    j["inputs"] = inputs;
    auto params = ordered_json::array();
    for (const auto& p : model.params) {
        params.push_back({{"name", p.name}, {"lo", p.bounds.lo}, {"hi", p.bounds.hi}});
    }
    j["params"] = params;
    auto procs = ordered_json::array();
    for (const auto& inst : model.instances) {
        procs.push_back({{"name", inst.skeleton}, {"template", inst.template_name}, {"entities", inst.entities}});
    }
    j["processes"] = procs;
    return j;
}

}  // namespace pbm::model
