#include "lexer.hpp"

#include <cctype>
#include <charconv>

#include "pbm/dsl/error.hpp"

namespace pbm::dsl::detail {

const char* describe(Token::Type t) {
    using T = Token::Type;
    switch (t) {
        case T::End: return "end of input";
        case T::Ident: return "identifier";
        case T::Number: return "number";
        case T::LBrace: return "'{'";
        case T::RBrace: return "'}'";
        case T::LParen: return "'('";
        case T::RParen: return "')'";
        case T::Colon: return "':'";
        case T::Semi: return "';'";
        case T::Comma: return "','";
        case T::Dot: return "'.'";
        case T::Assign: return "'='";
        case T::Less: return "'<'";
        case T::Greater: return "'>'";
        case T::Plus: return "'+'";
        case T::Minus: return "'-'";
        case T::Star: return "'*'";
        case T::Slash: return "'/'";
        case T::At: return "'@'";
    }
    return "token";
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1;
    int col = 1;

    auto bump = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };

    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            bump(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') bump(1);
            continue;
        }

        Token tok;
        tok.loc = {line, col};

        if (ident_start(c)) {
            size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            tok.type = Token::Type::Ident;
            tok.text = std::string(src.substr(i, j - i));
            bump(j - i);
            out.push_back(std::move(tok));
            continue;
        }

        if (digit(c) || (c == '.' && i + 1 < src.size() && digit(src[i + 1]))) {
            size_t j = i;
            while (j < src.size() && digit(src[j])) ++j;
            if (j < src.size() && src[j] == '.') {
                ++j;
                while (j < src.size() && digit(src[j])) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && digit(src[k])) {
                    while (k < src.size() && digit(src[k])) ++k;
                    j = k;
                } else {
                    throw Error(ErrorKind::Syntax, tok.loc, "malformed exponent in number literal",
                                std::string(src.substr(i, k - i)));
                }
            }
            tok.type = Token::Type::Number;
            tok.text = std::string(src.substr(i, j - i));
            auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
            if (res.ec != std::errc{}) {
                throw Error(ErrorKind::Syntax, tok.loc, "number literal out of range", tok.text);
            }
            bump(j - i);
            out.push_back(std::move(tok));
            continue;
        }

        using T = Token::Type;
        T type;
        switch (c) {
            case '{': type = T::LBrace; break;
            case '}': type = T::RBrace; break;
            case '(': type = T::LParen; break;
            case ')': type = T::RParen; break;
            case ':': type = T::Colon; break;
            case ';': type = T::Semi; break;
            case ',': type = T::Comma; break;
            case '.': type = T::Dot; break;
            case '=': type = T::Assign; break;
            case '<': type = T::Less; break;
            case '>': type = T::Greater; break;
            case '+': type = T::Plus; break;
            case '-': type = T::Minus; break;
            case '*': type = T::Star; break;
            case '/': type = T::Slash; break;
            case '@': type = T::At; break;
            default: {
                // Report the whole UTF-8 sequence, not a lone byte.
                size_t len = 1;
                auto uc = static_cast<unsigned char>(c);
                if (uc >= 0xF0) len = 4;
                else if (uc >= 0xE0) len = 3;
                else if (uc >= 0xC0) len = 2;
                len = std::min(len, src.size() - i);
                throw Error(ErrorKind::Syntax, tok.loc, "unexpected character",
                            std::string(src.substr(i, len)));
            }
        }
        tok.type = type;
        tok.text = std::string(1, c);
        bump(1);
        out.push_back(std::move(tok));
    }

    Token end;
    end.type = Token::Type::End;
    end.loc = {line, col};
    out.push_back(std::move(end));
    return out;
}

}  // namespace pbm::dsl::detail
