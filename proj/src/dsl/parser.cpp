#include "pbm/dsl/parser.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>

#include "lexer.hpp"

namespace pbm::dsl {

using detail::Token;
using T = Token::Type;

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : toks_(detail::tokenize(text)) {}

    const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    bool at(T t) const { return peek().type == t; }
    bool at_keyword(std::string_view kw) const { return at(T::Ident) && peek().text == kw; }

    Token take() {
        Token t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }

    bool accept(T t) {
        if (!at(t)) return false;
        take();
        return true;
    }

    Token expect(T t, const char* what = nullptr) {
        if (!at(t)) {
            bool closer = t == T::RBrace || t == T::RParen || t == T::Semi || t == T::Greater;
            fail(std::string("expected ") + (what ? what : detail::describe(t)), closer);
        }
        return take();
    }

    Token expect_keyword(std::string_view kw) {
        if (!at_keyword(kw)) fail("expected '" + std::string(kw) + "'");
        return take();
    }

    /// `after_prev`: report a token missing at a line end where it was expected.
    [[noreturn]] void fail(const std::string& msg, bool after_prev = false) const {
        const Token& t = peek();
        std::string found = t.type == T::End ? std::string("end of input") : t.text;
        SourceLoc loc = t.loc;
        if (after_prev && pos_ > 0 && toks_[pos_ - 1].loc.line < t.loc.line) {
            const Token& prev = toks_[pos_ - 1];
            loc = {prev.loc.line, prev.loc.column + int(prev.text.size())};
        }
        throw Error(ErrorKind::Syntax, loc, msg + ", found '" + found + "'");
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
};

double parse_signed_number(Cursor& cur) {
    double sign = 1.0;
    if (cur.accept(T::Minus)) sign = -1.0;
    else cur.accept(T::Plus);
    return sign * cur.expect(T::Number, "number").number;
}

// `a.b.c` for parent and template references.
std::string parse_qualified(Cursor& cur) {
    std::string out = cur.expect(T::Ident, "template name").text;
    while (cur.at(T::Dot)) {
        cur.take();
        out += "." + cur.expect(T::Ident, "identifier").text;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Expressions

Expr parse_expr(Cursor& cur);

Expr parse_primary(Cursor& cur) {
    const Token& t = cur.peek();
    if (t.type == T::Number) {
        Token n = cur.take();
        return Expr::number(n.number, n.loc);
    }
    if (t.type == T::LParen) {
        cur.take();
        Expr e = parse_expr(cur);
        cur.expect(T::RParen);
        return e;
    }
    if (t.type == T::Ident) {
        Token id = cur.take();
        if (cur.at(T::LParen)) {
            cur.take();
            std::vector<Expr> args;
            args.push_back(parse_expr(cur));
            while (cur.accept(T::Comma)) args.push_back(parse_expr(cur));
            cur.expect(T::RParen);
            if (id.text == "pow") {
                if (args.size() != 2) throw Error(ErrorKind::Syntax, id.loc, "pow takes two arguments", id.text);
                return Expr::binary(Expr::Kind::Pow, std::move(args[0]), std::move(args[1]), id.loc);
            }
            if (id.text == "exp") {
                if (args.size() != 1) throw Error(ErrorKind::Syntax, id.loc, "exp takes one argument", id.text);
                return Expr::unary(Expr::Kind::Exp, std::move(args[0]), id.loc);
            }
            throw Error(ErrorKind::Syntax, id.loc, "unknown function", id.text);
        }
        if (cur.accept(T::Dot)) {
            Token prop = cur.expect(T::Ident, "property name");
            return Expr::ref(id.text, prop.text, id.loc);
        }
        return Expr::ref("", id.text, id.loc);
    }
    cur.fail("expected expression");
}

Expr parse_factor(Cursor& cur) {
    if (cur.at(T::Minus)) {
        Token m = cur.take();
        return Expr::unary(Expr::Kind::Neg, parse_factor(cur), m.loc);
    }
    return parse_primary(cur);
}

Expr parse_term(Cursor& cur) {
    Expr lhs = parse_factor(cur);
    while (cur.at(T::Star) || cur.at(T::Slash)) {
        Token op = cur.take();
        Expr rhs = parse_factor(cur);
        lhs = Expr::binary(op.type == T::Star ? Expr::Kind::Mul : Expr::Kind::Div, std::move(lhs), std::move(rhs),
                           op.loc);
    }
    return lhs;
}

// A leading minus negates the whole first term: `-G*x` is -(G*x).
Expr parse_expr(Cursor& cur) {
    Expr lhs;
    if (cur.at(T::Minus)) {
        Token m = cur.take();
        lhs = Expr::unary(Expr::Kind::Neg, parse_term(cur), m.loc);
    } else {
        lhs = parse_term(cur);
    }
    while (cur.at(T::Plus) || cur.at(T::Minus)) {
        Token op = cur.take();
        Expr rhs = parse_term(cur);
        lhs = Expr::binary(op.type == T::Plus ? Expr::Kind::Add : Expr::Kind::Sub, std::move(lhs), std::move(rhs),
                           op.loc);
    }
    return lhs;
}

// ---------------------------------------------------------------------------
// Shared pieces

// Property lists: `{key: value, key: value}` with ',' or ';' separators.
template <typename OnProp>
void parse_props(Cursor& cur, OnProp on_prop) {
    cur.expect(T::LBrace);
    while (!cur.at(T::RBrace)) {
        Token key = cur.expect(T::Ident, "property name");
        cur.expect(T::Colon);
        on_prop(key);
        if (!cur.accept(T::Comma) && !cur.accept(T::Semi) && !cur.at(T::RBrace)) cur.fail("expected ',' or '}'", true);
    }
    cur.expect(T::RBrace);
}

Range parse_range(Cursor& cur) {
    Token open = cur.expect(T::Less, "'<'");
    Range r;
    r.lo = parse_signed_number(cur);
    cur.expect(T::Comma);
    r.hi = parse_signed_number(cur);
    cur.expect(T::Greater, "'>'");
    if (!(r.lo < r.hi)) {
        throw Error(ErrorKind::MalformedRange, open.loc, "range lower bound must be below upper bound");
    }
    return r;
}

// A section ends with ';' or directly before the closing brace.
void end_section(Cursor& cur) {
    if (!cur.accept(T::Semi) && !cur.at(T::RBrace)) cur.fail("expected ';'", true);
}

void end_block(Cursor& cur) {
    cur.expect(T::RBrace);
    cur.accept(T::Semi);
}

ConstDecl parse_const_decl(Cursor& cur) {
    ConstDecl c;
    Token id = cur.expect(T::Ident, "constant name");
    c.name = id.text;
    c.loc = id.loc;
    bool has_range = false;
    if (cur.at(T::LBrace)) {
        parse_props(cur, [&](const Token& key) {
            if (key.text == "range") {
                c.range = parse_range(cur);
                has_range = true;
            } else {
                throw Error(ErrorKind::Syntax, key.loc, "unknown constant property", key.text);
            }
        });
    }
    if (!has_range) throw Error(ErrorKind::MalformedRange, id.loc, "constant needs a range", id.text);
    return c;
}

VarDecl parse_var_decl(Cursor& cur) {
    VarDecl v;
    Token id = cur.expect(T::Ident, "variable name");
    v.name = id.text;
    v.loc = id.loc;
    if (cur.at(T::LBrace)) {
        parse_props(cur, [&](const Token& key) {
            if (key.text == "aggregation") {
                Token agg = cur.expect(T::Ident, "aggregation function");
                if (agg.text != "sum") {
                    throw Error(ErrorKind::UnsupportedAggregation, agg.loc, "only 'sum' aggregation is supported",
                                agg.text);
                }
                v.aggregation = Aggregation::Sum;
            } else if (key.text == "range") {
                v.range = parse_range(cur);
            } else {
                throw Error(ErrorKind::Syntax, key.loc, "unknown variable property", key.text);
            }
        });
    }
    return v;
}

template <typename Item, typename ParseOne>
void parse_list(Cursor& cur, std::vector<Item>& out, ParseOne one) {
    out.push_back(one(cur));
    while (cur.accept(T::Comma)) out.push_back(one(cur));
}

Equation parse_equation(Cursor& cur) {
    Equation eq;
    Token td = cur.expect_keyword("td");
    eq.loc = td.loc;
    cur.expect(T::LParen);
    eq.target_owner = cur.expect(T::Ident, "entity parameter").text;
    cur.expect(T::Dot);
    eq.target_var = cur.expect(T::Ident, "variable name").text;
    cur.expect(T::RParen);
    cur.expect(T::Assign);
    eq.rhs = parse_expr(cur);
    return eq;
}

// ---------------------------------------------------------------------------
// Library syntax

EntityTemplate parse_entity_template(Cursor& cur) {
    EntityTemplate e;
    Token id = cur.expect(T::Ident, "entity template name");
    e.name = id.text;
    e.loc = id.loc;
    cur.expect(T::LBrace);
    while (!cur.at(T::RBrace)) {
        if (cur.at_keyword("vars")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, e.vars, parse_var_decl);
        } else if (cur.at_keyword("consts")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, e.consts, parse_const_decl);
        } else {
            cur.fail("expected 'vars' or 'consts' or '}'", true);
        }
        end_section(cur);
    }
    end_block(cur);
    return e;
}

struct RawProcess {
    ProcessTemplate tmpl;
    bool declared_params = false;
    SourceLoc parent_loc;
};

RawProcess parse_process_template(Cursor& cur) {
    RawProcess raw;
    ProcessTemplate& p = raw.tmpl;
    Token id = cur.expect(T::Ident, "process template name");
    p.name = id.text;
    p.loc = id.loc;
    if (cur.accept(T::LParen)) {
        raw.declared_params = true;
        if (!cur.at(T::RParen)) {
            auto one = [](Cursor& c) {
                EntityParam ep;
                Token n = c.expect(T::Ident, "parameter name");
                ep.name = n.text;
                ep.loc = n.loc;
                c.expect(T::Colon);
                ep.entity = c.expect(T::Ident, "entity template name").text;
                return ep;
            };
            parse_list(cur, p.params, one);
        }
        cur.expect(T::RParen);
    }
    if (cur.accept(T::Colon)) {
        raw.parent_loc = cur.peek().loc;
        p.parent_ref = parse_qualified(cur);
    }
    cur.expect(T::LBrace);
    while (!cur.at(T::RBrace)) {
        if (cur.at_keyword("consts")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, p.consts, parse_const_decl);
        } else if (cur.at_keyword("equations")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, p.equations, parse_equation);
        } else {
            cur.fail("expected 'consts' or 'equations' or '}'", true);
        }
        end_section(cur);
    }
    end_block(cur);
    return raw;
}

// ---------------------------------------------------------------------------
// Library validation

void check_unique_members(const EntityTemplate& e) {
    std::set<std::string> seen;
    for (const auto& v : e.vars) {
        if (!seen.insert(v.name).second) throw Error(ErrorKind::Duplicate, v.loc, "duplicate member", v.name);
    }
    for (const auto& c : e.consts) {
        if (!seen.insert(c.name).second) throw Error(ErrorKind::Duplicate, c.loc, "duplicate member", c.name);
    }
}

class HierarchyResolver {
public:
    HierarchyResolver(std::vector<RawProcess>& raws) : raws_(raws), state_(raws.size(), 0) {}

    void resolve_all() {
        for (size_t i = 0; i < raws_.size(); ++i) resolve(i);
    }

private:
    std::vector<RawProcess>& raws_;
    std::vector<int> state_;  // 0 = new, 1 = visiting, 2 = done

    void resolve(size_t i) {
        if (state_[i] == 2) return;
        ProcessTemplate& p = raws_[i].tmpl;
        if (state_[i] == 1) {
            throw Error(ErrorKind::CyclicHierarchy, p.loc, "template hierarchy contains a cycle", p.name);
        }
        state_[i] = 1;
        if (p.parent_ref.empty()) {
            p.qualified_name = p.name;
        } else {
            size_t parent = find_parent(i);
            resolve(parent);
            p.parent = raws_[parent].tmpl.qualified_name;
            p.qualified_name = p.parent + "." + p.name;
        }
        state_[i] = 2;
    }

    size_t find_parent(size_t i) {
        const RawProcess& raw = raws_[i];
        const std::string& ref = raw.tmpl.parent_ref;
        std::string last = ref.substr(ref.rfind('.') == std::string::npos ? 0 : ref.rfind('.') + 1);
        std::vector<size_t> candidates;
        for (size_t j = 0; j < raws_.size(); ++j) {
            if (raws_[j].tmpl.name == last) candidates.push_back(j);
        }
        if (ref.find('.') != std::string::npos) {
            std::vector<size_t> exact;
            for (size_t j : candidates) {
                resolve(j);
                if (raws_[j].tmpl.qualified_name == ref) exact.push_back(j);
            }
            candidates = std::move(exact);
        }
        if (candidates.empty()) {
            throw Error(ErrorKind::UnknownParent, raw.parent_loc, "unknown parent template", ref);
        }
        if (candidates.size() > 1) {
            throw Error(ErrorKind::AmbiguousName, raw.parent_loc,
                        "parent name matches several templates; use the qualified name", ref);
        }
        return candidates.front();
    }
};

void check_expr_symbols(const Expr& e, const ProcessTemplate& p, const Library& lib) {
    if (e.kind == Expr::Kind::Ref) {
        if (e.owner.empty()) {
            if (!p.find_const(e.name)) {
                throw Error(ErrorKind::UnresolvedSymbol, e.loc, "symbol is not a constant of this process", e.name);
            }
            return;
        }
        auto param = std::find_if(p.params.begin(), p.params.end(),
                                  [&](const EntityParam& ep) { return ep.name == e.owner; });
        std::string sym = e.owner + "." + e.name;
        if (param == p.params.end()) {
            throw Error(ErrorKind::UnresolvedSymbol, e.loc, "unknown entity parameter", sym);
        }
        const EntityTemplate* ent = lib.find_entity(param->entity);
        if (!ent || (!ent->find_var(e.name) && !ent->find_const(e.name))) {
            throw Error(ErrorKind::UnresolvedSymbol, e.loc, "entity has no such property", sym);
        }
        return;
    }
    for (const auto& a : e.args) check_expr_symbols(a, p, lib);
}

Library validate_library(std::vector<EntityTemplate> entities, std::vector<RawProcess> raws) {
    Library lib;

    std::set<std::string> entity_names;
    for (auto& e : entities) {
        if (!entity_names.insert(e.name).second) {
            throw Error(ErrorKind::Duplicate, e.loc, "duplicate entity template", e.name);
        }
        check_unique_members(e);
    }
    lib.entities = std::move(entities);

    HierarchyResolver(raws).resolve_all();

    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < raws.size(); ++i) {
        const auto& p = raws[i].tmpl;
        if (!index.emplace(p.qualified_name, i).second) {
            throw Error(ErrorKind::Duplicate, p.loc, "duplicate process template", p.qualified_name);
        }
    }
    for (auto& raw : raws) {
        if (!raw.tmpl.parent.empty()) raws[index.at(raw.tmpl.parent)].tmpl.children.push_back(raw.tmpl.qualified_name);
    }

    // Roots own the parameter lists; descendants inherit them along with the
    // ancestors' constants.
    std::function<void(size_t)> materialize = [&](size_t i) {
        ProcessTemplate& p = raws[i].tmpl;
        if (p.is_root()) {
            std::set<std::string> names;
            for (const auto& ep : p.params) {
                if (!names.insert(ep.name).second) {
                    throw Error(ErrorKind::Duplicate, ep.loc, "duplicate entity parameter", ep.name);
                }
                if (!lib.find_entity(ep.entity)) {
                    throw Error(ErrorKind::UnknownEntity, ep.loc, "unknown entity template", ep.entity);
                }
            }
        }
        std::set<std::string> seen;
        for (const auto& c : p.inherited_consts) seen.insert(c.name);
        for (const auto& c : p.consts) {
            if (!seen.insert(c.name).second) {
                throw Error(ErrorKind::Duplicate, c.loc, "constant redeclares an inherited or sibling constant",
                            c.name);
            }
        }
        for (const auto& child : p.children) {
            size_t ci = index.at(child);
            ProcessTemplate& c = raws[ci].tmpl;
            c.params = p.params;
            c.inherited_consts = p.all_consts();
            materialize(ci);
        }
    };

    for (size_t i = 0; i < raws.size(); ++i) {
        const RawProcess& raw = raws[i];
        if (!raw.tmpl.is_root() && raw.declared_params) {
            throw Error(ErrorKind::InvalidInheritance, raw.tmpl.loc,
                        "only hierarchy roots declare entity parameters", raw.tmpl.name);
        }
        if (raw.tmpl.is_root() && !raw.declared_params) {
            throw Error(ErrorKind::InvalidInheritance, raw.tmpl.loc, "root template needs an entity parameter list",
                        raw.tmpl.name);
        }
    }
    for (size_t i = 0; i < raws.size(); ++i) {
        if (raws[i].tmpl.is_root()) materialize(i);
    }

    for (auto& raw : raws) lib.processes.push_back(std::move(raw.tmpl));

    for (const auto& p : lib.processes) {
        if (!p.is_leaf() && !p.equations.empty()) {
            throw Error(ErrorKind::InvalidInheritance, p.equations.front().loc,
                        "equations belong on leaf templates only", p.name);
        }
        for (const auto& eq : p.equations) {
            auto param = std::find_if(p.params.begin(), p.params.end(),
                                      [&](const EntityParam& ep) { return ep.name == eq.target_owner; });
            std::string sym = eq.target_owner + "." + eq.target_var;
            if (param == p.params.end()) {
                throw Error(ErrorKind::UnresolvedSymbol, eq.loc, "equation target is not an entity parameter", sym);
            }
            const EntityTemplate* ent = lib.find_entity(param->entity);
            if (!ent->find_var(eq.target_var)) {
                throw Error(ErrorKind::UnresolvedSymbol, eq.loc, "equation target is not a variable", sym);
            }
            check_expr_symbols(eq.rhs, p, lib);
        }
    }
    return lib;
}

// ---------------------------------------------------------------------------
// Scenario syntax

ConstBinding parse_const_binding(Cursor& cur) {
    ConstBinding b;
    Token id = cur.expect(T::Ident, "constant name");
    b.name = id.text;
    b.loc = id.loc;
    cur.expect(T::Assign);
    if (cur.at_keyword("null")) {
        cur.take();
        b.value = ConstValue::free();
    } else if (cur.accept(T::At)) {
        b.value = ConstValue::hole(cur.expect(T::Ident, "placeholder name").text);
    } else {
        b.value = ConstValue::fixed(parse_signed_number(cur));
    }
    return b;
}

struct RawVarBinding {
    VarBinding binding;
    bool has_role = false;
};

RawVarBinding parse_var_binding(Cursor& cur) {
    RawVarBinding raw;
    Token id = cur.expect(T::Ident, "variable name");
    raw.binding.name = id.text;
    raw.binding.loc = id.loc;
    if (cur.at(T::LBrace)) {
        parse_props(cur, [&](const Token& key) {
            if (key.text == "role") {
                Token r = cur.expect(T::Ident, "role");
                if (r.text == "endogenous") raw.binding.role = Role::Endogenous;
                else if (r.text == "exogenous") raw.binding.role = Role::Exogenous;
                else throw Error(ErrorKind::Syntax, r.loc, "role must be endogenous or exogenous", r.text);
                raw.has_role = true;
            } else if (key.text == "initial") {
                raw.binding.initial = parse_signed_number(cur);
            } else {
                throw Error(ErrorKind::Syntax, key.loc, "unknown variable property", key.text);
            }
        });
    }
    return raw;
}

struct RawEntity {
    EntityInstance inst;
    std::vector<RawVarBinding> vars;
    SourceLoc template_loc;
};

RawEntity parse_entity_instance(Cursor& cur) {
    RawEntity raw;
    Token id = cur.expect(T::Ident, "entity name");
    raw.inst.name = id.text;
    raw.inst.loc = id.loc;
    cur.expect(T::Colon);
    Token tmpl = cur.expect(T::Ident, "entity template name");
    raw.inst.template_name = tmpl.text;
    raw.template_loc = tmpl.loc;
    cur.expect(T::LBrace);
    while (!cur.at(T::RBrace)) {
        if (cur.at_keyword("vars")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, raw.vars, parse_var_binding);
        } else if (cur.at_keyword("consts")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, raw.inst.consts, parse_const_binding);
        } else {
            cur.fail("expected 'vars' or 'consts' or '}'", true);
        }
        end_section(cur);
    }
    end_block(cur);
    return raw;
}

struct RawSkeleton {
    ProcessSkeleton skel;
    std::vector<SourceLoc> entity_locs;
    std::string template_ref;
    SourceLoc template_loc;
};

RawSkeleton parse_skeleton(Cursor& cur) {
    RawSkeleton raw;
    Token id = cur.expect(T::Ident, "process name");
    raw.skel.name = id.text;
    raw.skel.loc = id.loc;
    cur.expect(T::LParen);
    if (!cur.at(T::RParen)) {
        do {
            Token e = cur.expect(T::Ident, "entity name");
            raw.skel.entities.push_back(e.text);
            raw.entity_locs.push_back(e.loc);
        } while (cur.accept(T::Comma));
    }
    cur.expect(T::RParen);
    cur.expect(T::Colon);
    raw.template_loc = cur.peek().loc;
    if (cur.accept(T::At)) {
        raw.skel.template_placeholder = cur.expect(T::Ident, "placeholder name").text;
    } else {
        raw.template_ref = parse_qualified(cur);
    }
    cur.expect(T::LBrace);
    while (!cur.at(T::RBrace)) {
        if (cur.at_keyword("consts")) {
            cur.take();
            cur.expect(T::Colon);
            parse_list(cur, raw.skel.consts, parse_const_binding);
        } else {
            cur.fail("expected 'consts' or '}'", true);
        }
        end_section(cur);
    }
    end_block(cur);
    return raw;
}

// Checks entity bindings and constant bindings of a skeleton against `tmpl`.
void bind_skeleton(ProcessSkeleton& skel, const ProcessTemplate& tmpl, const Scenario& sc, const Library& lib,
                   const std::vector<SourceLoc>& entity_locs) {
    const auto& params = lib.root_of(tmpl).params;
    if (skel.entities.size() > params.size()) {
        throw Error(ErrorKind::Arity, skel.loc,
                    "process binds " + std::to_string(skel.entities.size()) + " entities but template takes " +
                        std::to_string(params.size()),
                    skel.name);
    }
    for (size_t i = 0; i < skel.entities.size(); ++i) {
        SourceLoc loc = i < entity_locs.size() ? entity_locs[i] : skel.loc;
        const EntityInstance* inst = sc.find_entity(skel.entities[i]);
        if (!inst) throw Error(ErrorKind::UnknownEntity, loc, "unknown entity instance", skel.entities[i]);
        if (inst->template_name != params[i].entity) {
            throw Error(ErrorKind::TypeMismatch, loc,
                        "parameter '" + params[i].name + "' expects " + params[i].entity + " but entity is " +
                            inst->template_name,
                        skel.entities[i]);
        }
    }
    skel.partial = skel.entities.size() < params.size();
    skel.template_name = tmpl.qualified_name;
    std::set<std::string> seen;
    for (const auto& c : skel.consts) {
        if (!seen.insert(c.name).second) throw Error(ErrorKind::Duplicate, c.loc, "constant bound twice", c.name);
        if (!tmpl.find_const(c.name)) {
            throw Error(ErrorKind::UnknownConst, c.loc, "template " + tmpl.qualified_name + " declares no such constant",
                        c.name);
        }
    }
}

const ProcessTemplate& lookup_template(const Library& lib, const std::string& ref, SourceLoc loc) {
    int matches = lib.count_process_matches(ref);
    if (matches > 1) {
        throw Error(ErrorKind::AmbiguousName, loc, "template name matches several templates; qualify it", ref);
    }
    const ProcessTemplate* t = lib.find_process(ref);
    if (!t) throw Error(ErrorKind::UnknownTemplate, loc, "unknown process template", ref);
    return *t;
}

}  // namespace

Library parse_library(std::string_view text) {
    Cursor cur(text);
    std::vector<EntityTemplate> entities;
    std::vector<RawProcess> processes;
    if (cur.at(T::End)) cur.fail("expected 'template'");
    while (!cur.at(T::End)) {
        cur.expect_keyword("template");
        if (cur.at_keyword("entity")) {
            cur.take();
            entities.push_back(parse_entity_template(cur));
        } else if (cur.at_keyword("process")) {
            cur.take();
            processes.push_back(parse_process_template(cur));
        } else {
            cur.fail("expected 'entity' or 'process'");
        }
    }
    return validate_library(std::move(entities), std::move(processes));
}

Scenario parse_scenario(std::string_view text, const Library& lib) {
    Cursor cur(text);
    std::vector<RawEntity> entities;
    std::vector<RawSkeleton> skeletons;
    if (cur.at(T::End)) cur.fail("expected 'entity' or 'process'");
    while (!cur.at(T::End)) {
        if (cur.at_keyword("entity")) {
            cur.take();
            entities.push_back(parse_entity_instance(cur));
        } else if (cur.at_keyword("process")) {
            cur.take();
            skeletons.push_back(parse_skeleton(cur));
        } else {
            cur.fail("expected 'entity' or 'process'");
        }
    }

    Scenario sc;
    std::set<std::string> names;
    for (auto& raw : entities) {
        EntityInstance& inst = raw.inst;
        if (!names.insert(inst.name).second) throw Error(ErrorKind::Duplicate, inst.loc, "duplicate name", inst.name);
        const EntityTemplate* tmpl = lib.find_entity(inst.template_name);
        if (!tmpl) throw Error(ErrorKind::UnknownTemplate, raw.template_loc, "unknown entity template", inst.template_name);

        std::vector<VarBinding> vars;
        for (const auto& decl : tmpl->vars) {
            auto it = std::find_if(raw.vars.begin(), raw.vars.end(),
                                   [&](const RawVarBinding& v) { return v.binding.name == decl.name; });
            if (it == raw.vars.end() || !it->has_role) {
                SourceLoc loc = it == raw.vars.end() ? inst.loc : it->binding.loc;
                throw Error(ErrorKind::MissingRole, loc, "variable needs a role in entity " + inst.name, decl.name);
            }
            if (it->binding.role == Role::Endogenous && !it->binding.initial) {
                throw Error(ErrorKind::MissingInitial, it->binding.loc, "endogenous variable needs an initial value",
                            decl.name);
            }
            vars.push_back(it->binding);
        }
        std::set<std::string> seen;
        for (const auto& v : raw.vars) {
            if (!tmpl->find_var(v.binding.name)) {
                throw Error(ErrorKind::UnknownVar, v.binding.loc, "template " + tmpl->name + " has no such variable",
                            v.binding.name);
            }
            if (!seen.insert(v.binding.name).second) {
                throw Error(ErrorKind::Duplicate, v.binding.loc, "variable bound twice", v.binding.name);
            }
        }
        seen.clear();
        for (const auto& c : inst.consts) {
            if (!tmpl->find_const(c.name)) {
                throw Error(ErrorKind::UnknownConst, c.loc, "template " + tmpl->name + " has no such constant", c.name);
            }
            if (!seen.insert(c.name).second) throw Error(ErrorKind::Duplicate, c.loc, "constant bound twice", c.name);
        }
        std::vector<ConstBinding> consts;
        for (const auto& decl : tmpl->consts) {
            const ConstBinding* b = inst.find_const(decl.name);
            consts.push_back(b ? *b : ConstBinding{decl.name, ConstValue::free(), inst.loc});
        }
        inst.vars = std::move(vars);
        inst.consts = std::move(consts);
        sc.entities.push_back(std::move(inst));
    }

    for (auto& raw : skeletons) {
        ProcessSkeleton& skel = raw.skel;
        if (!names.insert(skel.name).second) throw Error(ErrorKind::Duplicate, skel.loc, "duplicate name", skel.name);
        if (skel.template_placeholder.empty()) {
            const ProcessTemplate& tmpl = lookup_template(lib, raw.template_ref, raw.template_loc);
            bind_skeleton(skel, tmpl, sc, lib, raw.entity_locs);
        } else {
            for (size_t i = 0; i < skel.entities.size(); ++i) {
                if (!sc.find_entity(skel.entities[i])) {
                    throw Error(ErrorKind::UnknownEntity, raw.entity_locs[i], "unknown entity instance",
                                skel.entities[i]);
                }
            }
        }
        sc.processes.push_back(std::move(skel));
    }
    return sc;
}

Scenario substitute(const Scenario& scenario, const std::map<std::string, PlaceholderValue>& values,
                    const Library& lib) {
    Scenario out = scenario;
    std::set<std::string> used;

    auto fill_const = [&](ConstBinding& c) {
        if (c.value.kind != ConstValue::Kind::Placeholder) return;
        auto it = values.find(c.value.placeholder);
        if (it == values.end()) {
            throw Error(ErrorKind::Placeholder, c.loc, "no value supplied for placeholder", c.value.placeholder);
        }
        const double* v = std::get_if<double>(&it->second);
        if (!v) throw Error(ErrorKind::Placeholder, c.loc, "placeholder expects a number", c.value.placeholder);
        used.insert(c.value.placeholder);
        c.value = ConstValue::fixed(*v);
    };

    for (auto& e : out.entities) {
        for (auto& c : e.consts) fill_const(c);
    }
    for (auto& p : out.processes) {
        if (!p.template_placeholder.empty() && p.template_name.empty()) {
            auto it = values.find(p.template_placeholder);
            if (it == values.end()) {
                throw Error(ErrorKind::Placeholder, p.loc, "no template supplied for placeholder",
                            p.template_placeholder);
            }
            const std::string* name = std::get_if<std::string>(&it->second);
            if (!name) {
                throw Error(ErrorKind::Placeholder, p.loc, "placeholder expects a template name",
                            p.template_placeholder);
            }
            used.insert(p.template_placeholder);
            const ProcessTemplate& tmpl = lookup_template(lib, *name, p.loc);
            bind_skeleton(p, tmpl, out, lib, {});
            p.promoted = true;
        }
        for (auto& c : p.consts) fill_const(c);
    }
    for (const auto& [name, _] : values) {
        if (!used.count(name)) {
            throw Error(ErrorKind::Placeholder, SourceLoc{}, "value supplied for a placeholder the scenario lacks",
                        name);
        }
    }
    return out;
}

}  // namespace pbm::dsl
