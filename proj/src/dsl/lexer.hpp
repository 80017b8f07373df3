#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace labelforge::dsl::detail {

enum class Tok {
    Ident,
    String,
    Number,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Colon,
    Arrow,
    Assign,
    Less,
    LessEqual,
    Greater,
    GreaterEqual,
    AndOp,
    OrOp,
    NotOp,
    End
};

struct Token {
    Tok kind = Tok::End;
    std::string text;   // raw lexeme
    std::string value;  // decoded string literal
    int line = 1;
    int column = 1;
};

/// Throws ParseError on a lexical error.
std::vector<Token> tokenize(std::string_view source);

std::string_view describe(Tok t);

}  // namespace labelforge::dsl::detail
