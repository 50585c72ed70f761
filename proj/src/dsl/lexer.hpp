#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pbm/dsl/ast.hpp"

namespace pbm::dsl::detail {

struct Token {
    enum class Type {
        End,
        Ident,
        Number,
        LBrace,
        RBrace,
        LParen,
        RParen,
        Colon,
        Semi,
        Comma,
        Dot,
        Assign,
        Less,
        Greater,
        Plus,
        Minus,
        Star,
        Slash,
        At,
    };

    Type type = Type::End;
    std::string text;
    double number = 0.0;
    SourceLoc loc;
};

const char* describe(Token::Type t);

/// Splits the whole input up front. `//` comments and whitespace are dropped.
std::vector<Token> tokenize(std::string_view src);

}  // namespace pbm::dsl::detail
