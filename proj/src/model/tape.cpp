#include "pbm/model/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace pbm::model {

namespace {

using Op = Tape::Op;

struct Builder {
    std::vector<Tape::Instr>& code;
    const Tape::Resolver& resolve;

    int emit(Op op, int a = 0, int b = 0, double v = 0.0) {
        code.push_back({op, a, b, v});
        return static_cast<int>(code.size()) - 1;
    }

    int build(const dsl::Expr& e) {
        using K = dsl::Expr::Kind;
        switch (e.kind) {
            case K::Number: return emit(Op::Literal, 0, 0, e.value);
            case K::Ref: {
                Tape::Slot slot{};
                if (!resolve(e, slot)) {
                    throw std::invalid_argument("unresolved reference '" +
                                                (e.owner.empty() ? e.name : e.owner + "." + e.name) + "'");
                }
                Op op = slot.kind == Tape::SlotKind::State   ? Op::State
                        : slot.kind == Tape::SlotKind::Input ? Op::Input
                                                             : Op::Param;
                return emit(op, slot.index);
            }
            case K::Neg: return emit(Op::Neg, build(e.args[0]));
            case K::Exp: return emit(Op::Exp, build(e.args[0]));
            case K::Pow:
                if (e.args[1].kind == K::Number && e.args[1].value == 0.5) return emit(Op::Sqrt, build(e.args[0]));
                break;
            default: break;
        }
        int a = build(e.args[0]);
        int b = build(e.args[1]);
        switch (e.kind) {
            case K::Add: return emit(Op::Add, a, b);
            case K::Sub: return emit(Op::Sub, a, b);
            case K::Mul: return emit(Op::Mul, a, b);
            case K::Div: return emit(Op::Div, a, b);
            default: return emit(Op::Pow, a, b);
        }
    }
};

}  // namespace

Tape::Tape(const std::vector<dsl::Expr>& outputs, const Resolver& resolve) {
    Builder b{code_, resolve};
    for (const auto& e : outputs) out_.push_back(b.build(e));
}

void Tape::eval(const double* x, const double* u, const double* p, double* out, double* r) const {
    const size_t n = code_.size();
    for (size_t i = 0; i < n; ++i) {
        const Instr& in = code_[i];
        switch (in.op) {
            case Op::Literal: r[i] = in.value; break;
            case Op::State: r[i] = x[in.a]; break;
            case Op::Input: r[i] = u[in.a]; break;
            case Op::Param: r[i] = p[in.a]; break;
            case Op::Neg: r[i] = -r[in.a]; break;
            case Op::Add: r[i] = r[in.a] + r[in.b]; break;
            case Op::Sub: r[i] = r[in.a] - r[in.b]; break;
            case Op::Mul: r[i] = r[in.a] * r[in.b]; break;
            case Op::Div: r[i] = r[in.a] / r[in.b]; break;
            case Op::Pow: r[i] = std::pow(r[in.a], r[in.b]); break;
            case Op::Sqrt: r[i] = std::sqrt(r[in.a]); break;
            case Op::Exp: r[i] = std::exp(r[in.a]); break;
        }
    }
    for (size_t k = 0; k < out_.size(); ++k) out[k] = r[out_[k]];
}

}  // namespace pbm::model
