#include "pbm/dsl/printer.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace pbm::dsl {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string ref_text(const Expr& e) { return e.owner.empty() ? e.name : e.owner + "." + e.name; }

// Precedence levels: 1 = additive, 2 = multiplicative, 3 = factor.
// `at_start` is true when the text begins an expression production, where a
// leading '-' negates the whole first term rather than a single factor.
std::string infix(const Expr& e, int min_prec, bool at_start) {
    auto paren = [&] { return "(" + infix(e, 0, true) + ")"; };
    switch (e.kind) {
        case Expr::Kind::Number:
            if (e.value < 0 || std::signbit(e.value)) {
                if (at_start ? min_prec > 1 : false) return paren();
                return "-" + format_number(-e.value);
            }
            return format_number(e.value);
        case Expr::Kind::Ref: return ref_text(e);
        case Expr::Kind::Pow:
            return "pow(" + infix(e.args[0], 0, true) + "," + infix(e.args[1], 0, true) + ")";
        case Expr::Kind::Exp: return "exp(" + infix(e.args[0], 0, true) + ")";
        case Expr::Kind::Neg:
            if (at_start) {
                if (min_prec > 1) return paren();
                return "-" + infix(e.args[0], 2, false);
            }
            return "-" + infix(e.args[0], 3, false);
        case Expr::Kind::Add:
        case Expr::Kind::Sub: {
            if (min_prec > 1) return paren();
            const char* op = e.kind == Expr::Kind::Add ? " + " : " - ";
            return infix(e.args[0], 1, at_start) + op + infix(e.args[1], 2, false);
        }
        case Expr::Kind::Mul:
        case Expr::Kind::Div: {
            if (min_prec > 2) return paren();
            const char* op = e.kind == Expr::Kind::Mul ? "*" : "/";
            return infix(e.args[0], 2, at_start) + op + infix(e.args[1], 3, false);
        }
    }
    return {};
}

std::string range_text(const Range& r) { return "<" + format_number(r.lo) + ", " + format_number(r.hi) + ">"; }

std::string const_decls(const std::vector<ConstDecl>& consts) {
    std::string out;
    for (size_t i = 0; i < consts.size(); ++i) {
        if (i) out += ", ";
        out += consts[i].name + " {range: " + range_text(consts[i].range) + "}";
    }
    return out;
}

std::string const_value_text(const ConstValue& v) {
    switch (v.kind) {
        case ConstValue::Kind::Fixed: return format_number(v.value);
        case ConstValue::Kind::Free: return "null";
        case ConstValue::Kind::Placeholder: return "@" + v.placeholder;
    }
    return {};
}

std::string const_bindings(const std::vector<ConstBinding>& consts) {
    std::string out;
    for (size_t i = 0; i < consts.size(); ++i) {
        if (i) out += ", ";
        out += consts[i].name + " = " + const_value_text(consts[i].value);
    }
    return out;
}

nlohmann::ordered_json range_json(const Range& r) { return nlohmann::ordered_json::array({r.lo, r.hi}); }

nlohmann::ordered_json consts_json(const std::vector<ConstDecl>& consts) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : consts) arr.push_back({{"name", c.name}, {"range", range_json(c.range)}});
    return arr;
}

nlohmann::ordered_json const_value_json(const ConstValue& v) {
    switch (v.kind) {
        case ConstValue::Kind::Fixed: return v.value;
        case ConstValue::Kind::Free: return nullptr;
        case ConstValue::Kind::Placeholder: return "@" + v.placeholder;
    }
    return nullptr;
}

nlohmann::ordered_json process_json(const Library& lib, const ProcessTemplate& p) {
    nlohmann::ordered_json j;
    j["name"] = p.name;
    j["qualified_name"] = p.qualified_name;
    auto params = nlohmann::ordered_json::array();
    for (const auto& ep : p.params) params.push_back({{"name", ep.name}, {"entity", ep.entity}});
    j["params"] = params;
    j["inherited_consts"] = consts_json(p.inherited_consts);
    j["consts"] = consts_json(p.consts);
    auto eqs = nlohmann::ordered_json::array();
    for (const auto& eq : p.equations) {
        eqs.push_back({{"target", eq.target_owner + "." + eq.target_var}, {"rhs", expr_to_json(eq.rhs)}});
    }
    j["equations"] = eqs;
    auto children = nlohmann::ordered_json::array();
    for (const auto& c : p.children) {
        if (const ProcessTemplate* child = lib.find_process(c)) children.push_back(process_json(lib, *child));
    }
    j["children"] = children;
    return j;
}

}  // namespace

std::string to_infix(const Expr& e) { return infix(e, 0, true); }

std::string print_library(const Library& lib) {
    std::ostringstream out;
    bool first = true;
    for (const auto& e : lib.entities) {
        if (!first) out << "\n";
        first = false;
        out << "template entity " << e.name << " {\n";
        if (!e.vars.empty()) {
            out << "  vars: ";
            for (size_t i = 0; i < e.vars.size(); ++i) {
                const auto& v = e.vars[i];
                if (i) out << ", ";
                out << v.name << " {aggregation: sum";
                if (v.range) out << ", range: " << range_text(*v.range);
                out << "}";
            }
            out << ";\n";
        }
        if (!e.consts.empty()) out << "  consts: " << const_decls(e.consts) << ";\n";
        out << "}\n";
    }
    for (const auto& p : lib.processes) {
        if (!first) out << "\n";
        first = false;
        out << "template process " << p.name;
        if (p.is_root()) {
            out << "(";
            for (size_t i = 0; i < p.params.size(); ++i) {
                if (i) out << ", ";
                out << p.params[i].name << ": " << p.params[i].entity;
            }
            out << ")";
        } else {
            out << " : " << p.parent;
        }
        out << " {\n";
        if (!p.consts.empty()) out << "  consts: " << const_decls(p.consts) << ";\n";
        if (!p.equations.empty()) {
            out << "  equations:";
            for (size_t i = 0; i < p.equations.size(); ++i) {
                const auto& eq = p.equations[i];
                out << (i ? ",\n    " : "\n    ") << "td(" << eq.target_owner << "." << eq.target_var
                    << ") = " << to_infix(eq.rhs);
            }
            out << ";\n";
        }
        out << "}\n";
    }
    return out.str();
}

std::string print_scenario(const Scenario& sc) {
    std::ostringstream out;
    bool first = true;
    for (const auto& e : sc.entities) {
        if (!first) out << "\n";
        first = false;
        out << "entity " << e.name << " : " << e.template_name << " {\n";
        if (!e.vars.empty()) {
            out << "  vars: ";
            for (size_t i = 0; i < e.vars.size(); ++i) {
                const auto& v = e.vars[i];
                if (i) out << ", ";
                out << v.name << " {role: " << (v.role == Role::Endogenous ? "endogenous" : "exogenous");
                if (v.initial) out << ", initial: " << format_number(*v.initial);
                out << "}";
            }
            out << ";\n";
        }
        if (!e.consts.empty()) out << "  consts: " << const_bindings(e.consts) << ";\n";
        out << "}\n";
    }
    for (const auto& p : sc.processes) {
        if (!first) out << "\n";
        first = false;
        out << "process " << p.name << "(";
        for (size_t i = 0; i < p.entities.size(); ++i) out << (i ? ", " : "") << p.entities[i];
        out << ") : " << (p.template_name.empty() ? "@" + p.template_placeholder : p.template_name) << " {";
        if (!p.consts.empty()) out << "\n  consts: " << const_bindings(p.consts) << ";\n";
        out << "}\n";
    }
    return out.str();
}

nlohmann::ordered_json expr_to_json(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number: return {{"num", e.value}};
        case Expr::Kind::Ref: return {{"ref", ref_text(e)}};
        default: break;
    }
    static const char* names[] = {"num", "ref", "neg", "add", "sub", "mul", "div", "pow", "exp"};
    nlohmann::ordered_json j;
    j["op"] = names[static_cast<int>(e.kind)];
    auto args = nlohmann::ordered_json::array();
    for (const auto& a : e.args) args.push_back(expr_to_json(a));
    j["args"] = args;
    return j;
}

nlohmann::ordered_json library_to_json(const Library& lib) {
    nlohmann::ordered_json j;
    auto entities = nlohmann::ordered_json::array();
    for (const auto& e : lib.entities) {
        nlohmann::ordered_json ej;
        ej["name"] = e.name;
        auto vars = nlohmann::ordered_json::array();
        for (const auto& v : e.vars) {
            vars.push_back({{"name", v.name},
                            {"aggregation", "sum"},
                            {"range", v.range ? range_json(*v.range) : nlohmann::ordered_json(nullptr)}});
        }
        ej["vars"] = vars;
        ej["consts"] = consts_json(e.consts);
        entities.push_back(ej);
    }
    j["entities"] = entities;
    auto hierarchies = nlohmann::ordered_json::array();
    for (const auto* root : lib.roots()) hierarchies.push_back(process_json(lib, *root));
    j["processes"] = hierarchies;
    return j;
}

nlohmann::ordered_json scenario_to_json(const Scenario& sc) {
    nlohmann::ordered_json j;
    auto entities = nlohmann::ordered_json::array();
    for (const auto& e : sc.entities) {
        nlohmann::ordered_json ej;
        ej["name"] = e.name;
        ej["template"] = e.template_name;
        auto vars = nlohmann::ordered_json::array();
        for (const auto& v : e.vars) {
            vars.push_back({{"name", v.name},
                            {"role", v.role == Role::Endogenous ? "endogenous" : "exogenous"},
                            {"initial", v.initial ? nlohmann::ordered_json(*v.initial) : nlohmann::ordered_json(nullptr)}});
        }
        ej["vars"] = vars;
        auto consts = nlohmann::ordered_json::object();
        for (const auto& c : e.consts) consts[c.name] = const_value_json(c.value);
        ej["consts"] = consts;
        entities.push_back(ej);
    }
    j["entities"] = entities;
    auto procs = nlohmann::ordered_json::array();
    for (const auto& p : sc.processes) {
        nlohmann::ordered_json pj;
        pj["name"] = p.name;
        pj["entities"] = p.entities;
        pj["template"] = p.template_name.empty() ? "@" + p.template_placeholder : p.template_name;
        pj["partial"] = p.partial;
        auto consts = nlohmann::ordered_json::object();
        for (const auto& c : p.consts) consts[c.name] = const_value_json(c.value);
        pj["consts"] = consts;
        procs.push_back(pj);
    }
    j["processes"] = procs;
    return j;
}

}  // namespace pbm::dsl
