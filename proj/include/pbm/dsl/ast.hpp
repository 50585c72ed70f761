#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pbm::dsl {

struct SourceLoc {
    int line = 1;
    int column = 1;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    friend bool operator==(const Range&, const Range&) = default;
};

enum class Aggregation { Sum };

struct VarDecl {
    std::string name;
    Aggregation aggregation = Aggregation::Sum;
    std::optional<Range> range;
    SourceLoc loc;
};

struct ConstDecl {
    std::string name;
    Range range;
    SourceLoc loc;
};

/// Expression tree shared by library templates and bound process instances.
///
/// A `Ref` with an empty owner names a process constant; otherwise `owner`
/// is an entity parameter (in a template) or an entity instance (once bound)
/// and `name` is one of its vars or consts.
struct Expr {
    enum class Kind { Number, Ref, Neg, Add, Sub, Mul, Div, Pow, Exp };

    Kind kind = Kind::Number;
    double value = 0.0;
    std::string owner;
    std::string name;
    std::vector<Expr> args;
    SourceLoc loc;

    static Expr number(double v, SourceLoc loc = {});
    static Expr ref(std::string owner, std::string name, SourceLoc loc = {});
    static Expr unary(Kind kind, Expr arg, SourceLoc loc = {});
    static Expr binary(Kind kind, Expr lhs, Expr rhs, SourceLoc loc = {});

    bool is_ref() const { return kind == Kind::Ref; }
};

/// Structural equality; source locations are ignored.
bool operator==(const Expr& a, const Expr& b);

struct EntityTemplate {
    std::string name;
    std::vector<VarDecl> vars;
    std::vector<ConstDecl> consts;
    SourceLoc loc;

    const VarDecl* find_var(std::string_view n) const;
    const ConstDecl* find_const(std::string_view n) const;
};

struct EntityParam {
    std::string name;
    std::string entity;
    SourceLoc loc;
};

struct Equation {
    std::string target_owner;  // entity parameter (or bound instance)
    std::string target_var;
    Expr rhs;
    SourceLoc loc;
};

struct ProcessTemplate {
    std::string name;            // as declared, e.g. "SquareRoot"
    std::string qualified_name;  // path from the hierarchy root, e.g. "ValveTransmission.SquareRoot"
    std::string parent_ref;      // parent as written in the source; empty for roots
    std::string parent;          // qualified name of the parent once resolved
    std::vector<std::string> children;  // qualified names, declaration order

    /// Entity parameters; for descendants these are copied from the root.
    std::vector<EntityParam> params;
    /// Constants declared by ancestors, root first.
    std::vector<ConstDecl> inherited_consts;
    std::vector<ConstDecl> consts;
    std::vector<Equation> equations;
    SourceLoc loc;

    bool is_root() const { return parent.empty(); }
    bool is_leaf() const { return children.empty(); }

    /// Inherited then own constants: everything usable in this template's equations.
    std::vector<ConstDecl> all_consts() const;
    const ConstDecl* find_const(std::string_view n) const;
};

struct Library {
    std::vector<EntityTemplate> entities;
    std::vector<ProcessTemplate> processes;

    const EntityTemplate* find_entity(std::string_view name) const;

    /// Looks up a process template by qualified name, or by short name when
    /// that name is unique in the library. Returns nullptr otherwise.
    const ProcessTemplate* find_process(std::string_view name) const;

    /// Number of templates whose short or qualified name matches.
    int count_process_matches(std::string_view name) const;

    std::vector<const ProcessTemplate*> roots() const;

    /// Leaf descendants-or-self of `t` in declaration order (depth first).
    std::vector<const ProcessTemplate*> leaves_under(const ProcessTemplate& t) const;

    const ProcessTemplate& root_of(const ProcessTemplate& t) const;
};

/// Structural equality used by the round-trip property.
bool same_structure(const Library& a, const Library& b);

// ---------------------------------------------------------------------------
// Scenarios

enum class Role { Endogenous, Exogenous };

/// A constant binding in a scenario: a fixed value, `null` (free), or a
/// placeholder `@name` filled in by a previous identification stage.
struct ConstValue {
    enum class Kind { Fixed, Free, Placeholder };

    Kind kind = Kind::Free;
    double value = 0.0;
    std::string placeholder;

    static ConstValue fixed(double v) { return {Kind::Fixed, v, {}}; }
    static ConstValue free() { return {Kind::Free, 0.0, {}}; }
    static ConstValue hole(std::string name) { return {Kind::Placeholder, 0.0, std::move(name)}; }
};

struct ConstBinding {
    std::string name;
    ConstValue value;
    SourceLoc loc;
};

struct VarBinding {
    std::string name;
    Role role = Role::Endogenous;
    std::optional<double> initial;
    SourceLoc loc;
};

struct EntityInstance {
    std::string name;
    std::string template_name;
    std::vector<VarBinding> vars;      // one per template var, template order
    std::vector<ConstBinding> consts;  // one per template const, template order
    SourceLoc loc;

    const VarBinding* find_var(std::string_view n) const;
    const ConstBinding* find_const(std::string_view n) const;
};

struct ProcessSkeleton {
    std::string name;
    std::vector<std::string> entities;  // bound instances, template-param order
    std::string template_name;          // qualified; empty while a placeholder is pending
    std::string template_placeholder;   // set for `: @name`
    bool promoted = false;              // template was filled in from a placeholder
    std::vector<ConstBinding> consts;   // explicitly bound constants
    SourceLoc loc;

    /// True when fewer entities are bound than the template declares.
    bool partial = false;

    const ConstBinding* find_const(std::string_view n) const;
};

struct Scenario {
    std::vector<EntityInstance> entities;
    std::vector<ProcessSkeleton> processes;

    const EntityInstance* find_entity(std::string_view name) const;
    const ProcessSkeleton* find_process(std::string_view name) const;

    /// Placeholder names still waiting for a value, in declaration order.
    std::vector<std::string> placeholders() const;
    bool is_resolved() const { return placeholders().empty(); }
};

}  // namespace pbm::dsl
