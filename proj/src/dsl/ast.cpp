#include "pbm/dsl/ast.hpp"

#include <algorithm>

#include "pbm/dsl/error.hpp"

namespace pbm::dsl {

Expr Expr::number(double v, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Number;
    e.value = v;
    e.loc = loc;
    return e;
}

Expr Expr::ref(std::string owner, std::string name, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Ref;
    e.owner = std::move(owner);
    e.name = std::move(name);
    e.loc = loc;
    return e;
}

Expr Expr::unary(Kind kind, Expr arg, SourceLoc loc) {
    Expr e;
    e.kind = kind;
    e.loc = loc;
    e.args.push_back(std::move(arg));
    return e;
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs, SourceLoc loc) {
    Expr e;
    e.kind = kind;
    e.loc = loc;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Number: return a.value == b.value;
        case Expr::Kind::Ref: return a.owner == b.owner && a.name == b.name;
        default: return a.args == b.args;
    }
}

const VarDecl* EntityTemplate::find_var(std::string_view n) const {
    auto it = std::find_if(vars.begin(), vars.end(), [&](const VarDecl& v) { return v.name == n; });
    return it == vars.end() ? nullptr : &*it;
}

const ConstDecl* EntityTemplate::find_const(std::string_view n) const {
    auto it = std::find_if(consts.begin(), consts.end(), [&](const ConstDecl& c) { return c.name == n; });
    return it == consts.end() ? nullptr : &*it;
}

std::vector<ConstDecl> ProcessTemplate::all_consts() const {
    std::vector<ConstDecl> out = inherited_consts;
    out.insert(out.end(), consts.begin(), consts.end());
    return out;
}

const ConstDecl* ProcessTemplate::find_const(std::string_view n) const {
    for (const auto* list : {&inherited_consts, &consts}) {
        for (const auto& c : *list) {
            if (c.name == n) return &c;
        }
    }
    return nullptr;
}

const EntityTemplate* Library::find_entity(std::string_view name) const {
    auto it = std::find_if(entities.begin(), entities.end(), [&](const EntityTemplate& e) { return e.name == name; });
    return it == entities.end() ? nullptr : &*it;
}

int Library::count_process_matches(std::string_view name) const {
    int exact = 0;
    int shorts = 0;
    for (const auto& p : processes) {
        if (p.qualified_name == name) ++exact;
        if (p.name == name) ++shorts;
    }
    return exact > 0 ? exact : shorts;
}

const ProcessTemplate* Library::find_process(std::string_view name) const {
    for (const auto& p : processes) {
        if (p.qualified_name == name) return &p;
    }
    const ProcessTemplate* found = nullptr;
    for (const auto& p : processes) {
        if (p.name == name) {
            if (found) return nullptr;
            found = &p;
        }
    }
    return found;
}

std::vector<const ProcessTemplate*> Library::roots() const {
    std::vector<const ProcessTemplate*> out;
    for (const auto& p : processes) {
        if (p.is_root()) out.push_back(&p);
    }
    return out;
}

std::vector<const ProcessTemplate*> Library::leaves_under(const ProcessTemplate& t) const {
    std::vector<const ProcessTemplate*> out;
    if (t.is_leaf()) {
        out.push_back(&t);
        return out;
    }
    for (const auto& child : t.children) {
        const ProcessTemplate* c = find_process(child);
        if (!c) continue;
        auto sub = leaves_under(*c);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

const ProcessTemplate& Library::root_of(const ProcessTemplate& t) const {
    const ProcessTemplate* cur = &t;
    while (!cur->is_root()) {
        const ProcessTemplate* p = find_process(cur->parent);
        if (!p) break;
        cur = p;
    }
    return *cur;
}

namespace {

bool same_consts(const std::vector<ConstDecl>& a, const std::vector<ConstDecl>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const ConstDecl& x, const ConstDecl& y) {
        return x.name == y.name && x.range == y.range;
    });
}

}  // namespace

bool same_structure(const Library& a, const Library& b) {
    auto same_entity = [](const EntityTemplate& x, const EntityTemplate& y) {
        return x.name == y.name && same_consts(x.consts, y.consts) &&
               std::equal(x.vars.begin(), x.vars.end(), y.vars.begin(), y.vars.end(),
                          [](const VarDecl& u, const VarDecl& v) {
                              return u.name == v.name && u.aggregation == v.aggregation && u.range == v.range;
                          });
    };
    auto same_process = [](const ProcessTemplate& x, const ProcessTemplate& y) {
        return x.name == y.name && x.qualified_name == y.qualified_name && x.parent == y.parent &&
               x.children == y.children && same_consts(x.consts, y.consts) &&
               same_consts(x.inherited_consts, y.inherited_consts) &&
               std::equal(x.params.begin(), x.params.end(), y.params.begin(), y.params.end(),
                          [](const EntityParam& u, const EntityParam& v) {
                              return u.name == v.name && u.entity == v.entity;
                          }) &&
               std::equal(x.equations.begin(), x.equations.end(), y.equations.begin(), y.equations.end(),
                          [](const Equation& u, const Equation& v) {
                              return u.target_owner == v.target_owner && u.target_var == v.target_var &&
                                     u.rhs == v.rhs;
                          });
    };
    return std::equal(a.entities.begin(), a.entities.end(), b.entities.begin(), b.entities.end(), same_entity) &&
           std::equal(a.processes.begin(), a.processes.end(), b.processes.begin(), b.processes.end(),
                      same_process);
}

const VarBinding* EntityInstance::find_var(std::string_view n) const {
    auto it = std::find_if(vars.begin(), vars.end(), [&](const VarBinding& v) { return v.name == n; });
    return it == vars.end() ? nullptr : &*it;
}

const ConstBinding* EntityInstance::find_const(std::string_view n) const {
    auto it = std::find_if(consts.begin(), consts.end(), [&](const ConstBinding& c) { return c.name == n; });
    return it == consts.end() ? nullptr : &*it;
}

const ConstBinding* ProcessSkeleton::find_const(std::string_view n) const {
    auto it = std::find_if(consts.begin(), consts.end(), [&](const ConstBinding& c) { return c.name == n; });
    return it == consts.end() ? nullptr : &*it;
}

const EntityInstance* Scenario::find_entity(std::string_view name) const {
    auto it = std::find_if(entities.begin(), entities.end(), [&](const EntityInstance& e) { return e.name == name; });
    return it == entities.end() ? nullptr : &*it;
}

const ProcessSkeleton* Scenario::find_process(std::string_view name) const {
    auto it = std::find_if(processes.begin(), processes.end(), [&](const ProcessSkeleton& p) { return p.name == name; });
    return it == processes.end() ? nullptr : &*it;
}

std::vector<std::string> Scenario::placeholders() const {
    std::vector<std::string> out;
    auto add = [&](const std::string& n) {
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    };
    for (const auto& e : entities) {
        for (const auto& c : e.consts) {
            if (c.value.kind == ConstValue::Kind::Placeholder) add(c.value.placeholder);
        }
    }
    for (const auto& p : processes) {
        if (!p.template_placeholder.empty() && p.template_name.empty()) add(p.template_placeholder);
        for (const auto& c : p.consts) {
            if (c.value.kind == ConstValue::Kind::Placeholder) add(c.value.placeholder);
        }
    }
    return out;
}

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Syntax: return "syntax";
        case ErrorKind::Duplicate: return "duplicate";
        case ErrorKind::UnknownParent: return "unknown parent";
        case ErrorKind::AmbiguousName: return "ambiguous name";
        case ErrorKind::CyclicHierarchy: return "cyclic hierarchy";
        case ErrorKind::InvalidInheritance: return "invalid inheritance";
        case ErrorKind::UnknownEntity: return "unknown entity";
        case ErrorKind::UnresolvedSymbol: return "unresolved symbol";
        case ErrorKind::MalformedRange: return "malformed range";
        case ErrorKind::UnsupportedAggregation: return "unsupported aggregation";
        case ErrorKind::UnknownTemplate: return "unknown template";
        case ErrorKind::MissingRole: return "missing role";
        case ErrorKind::MissingInitial: return "missing initial value";
        case ErrorKind::UnknownVar: return "unknown var";
        case ErrorKind::UnknownConst: return "unknown const";
        case ErrorKind::TypeMismatch: return "type mismatch";
        case ErrorKind::Arity: return "arity";
        case ErrorKind::Placeholder: return "placeholder";
    }
    return "error";
}

Error::Error(ErrorKind kind, SourceLoc loc, std::string message, std::string symbol)
    : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + to_string(kind) +
                         " error: " + message + (symbol.empty() ? std::string{} : " '" + symbol + "'")),
      kind_(kind),
      loc_(loc),
      message_(std::move(message)),
      symbol_(std::move(symbol)) {}

}  // namespace pbm::dsl
