#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "pbm/dsl/ast.hpp"

namespace pbm::model {

/// Flat register program for a set of expressions. Each instruction writes
/// one register; operands always refer to earlier registers.
class Tape {
public:
    enum class Op : unsigned char { Literal, State, Input, Param, Neg, Add, Sub, Mul, Div, Pow, Sqrt, Exp };

    struct Instr {
        Op op;
        int a = 0;
        int b = 0;
        double value = 0.0;
    };

    enum class SlotKind { State, Input, Param };
    struct Slot {
        SlotKind kind;
        int index;
    };
    /// Maps a reference to its slot; returns false when it does not resolve.
    using Resolver = std::function<bool(const dsl::Expr& ref, Slot& out)>;

    Tape() = default;
    Tape(const std::vector<dsl::Expr>& outputs, const Resolver& resolve);

    size_t registers() const { return code_.size(); }
    size_t outputs() const { return out_.size(); }

    /// `scratch` must hold registers() doubles.
    void eval(const double* state, const double* inputs, const double* params, double* out,
              double* scratch) const;

private:
    std::vector<Instr> code_;
    std::vector<int> out_;
};

}  // namespace pbm::model
