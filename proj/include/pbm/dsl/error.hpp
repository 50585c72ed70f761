#pragma once

#include <stdexcept>
#include <string>

#include "pbm/dsl/ast.hpp"

namespace pbm::dsl {

enum class ErrorKind {
    Syntax,
    Duplicate,
    UnknownParent,
    AmbiguousName,
    CyclicHierarchy,
    InvalidInheritance,
    UnknownEntity,
    UnresolvedSymbol,
    MalformedRange,
    UnsupportedAggregation,
    UnknownTemplate,
    MissingRole,
    MissingInitial,
    UnknownVar,
    UnknownConst,
    TypeMismatch,
    Arity,
    Placeholder,
};

const char* to_string(ErrorKind kind);

/// Raised by the lexer, parser, and validators. `is_syntax()` separates
/// ParseError-class failures from ValidationError-class ones.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, SourceLoc loc, std::string message, std::string symbol = {});

    ErrorKind kind() const { return kind_; }
    SourceLoc loc() const { return loc_; }
    const std::string& symbol() const { return symbol_; }
    const std::string& message() const { return message_; }
    bool is_syntax() const { return kind_ == ErrorKind::Syntax; }

private:
    ErrorKind kind_;
    SourceLoc loc_;
    std::string message_;
    std::string symbol_;
};

}  // namespace pbm::dsl
