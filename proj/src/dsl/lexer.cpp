#include "lexer.hpp"

#include "labelforge/dsl/parser.hpp"

namespace labelforge::dsl::detail {

namespace {

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_trivia();
            Token t;
            t.line = line_;
            t.column = column_;
            if (pos_ >= src_.size()) {
                t.kind = Tok::End;
                out.push_back(std::move(t));
                return out;
            }
            std::size_t start = pos_;
            char c = src_[pos_];
            if (ident_start(c)) {
                while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
                t.kind = Tok::Ident;
            } else if (digit(c) || ((c == '-' || c == '+' || c == '.') && number_follows())) {
                lex_number(t);
            } else if (c == '"' || c == '\'') {
                lex_string(t, c);
            } else {
                lex_punct(t);
            }
            t.text = std::string(src_.substr(start, pos_ - start));
            out.push_back(std::move(t));
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;

    [[noreturn]] void fail(const std::string& msg, int line, int col, std::string tok) const {
        throw ParseError(ParseError::Kind::Syntax, msg, line, col, std::move(tok));
    }

    char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

    void advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
            ++column_;
        }
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '#' || (c == '/' && peek(1) == '/')) {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    bool number_follows() const {
        char c = peek();
        if (c == '.') return digit(peek(1));
        char n = peek(1);
        return digit(n) || (n == '.' && digit(peek(2)));
    }

    void lex_number(Token& t) {
        t.kind = Tok::Number;
        if (peek() == '-' || peek() == '+') advance();
        while (digit(peek())) advance();
        if (peek() == '.') {
            advance();
            while (digit(peek())) advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t save = pos_;
            int sl = line_, sc = column_;
            advance();
            if (peek() == '-' || peek() == '+') advance();
            if (!digit(peek())) {
                pos_ = save;
                line_ = sl;
                column_ = sc;
            } else {
                while (digit(peek())) advance();
            }
        }
    }

    int hex_value(char h) const {
        if (digit(h)) return h - '0';
        if (h >= 'a' && h <= 'f') return h - 'a' + 10;
        if (h >= 'A' && h <= 'F') return h - 'A' + 10;
        return -1;
    }

    void lex_string(Token& t, char quote) {
        t.kind = Tok::String;
        advance();
        std::string value;
        while (true) {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                fail("unterminated string literal", t.line, t.column, std::string(1, quote));
            char c = src_[pos_];
            if (c == quote) {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size()) fail("unterminated string literal", t.line, t.column, std::string(1, quote));
                char e = src_[pos_];
                switch (e) {
                    case '"': value.push_back('"'); advance(); break;
                    case '\'': value.push_back('\''); advance(); break;
                    case '\\': value.push_back('\\'); advance(); break;
                    case 'n': value.push_back('\n'); advance(); break;
                    case 't': value.push_back('\t'); advance(); break;
                    case 'r': value.push_back('\r'); advance(); break;
                    case 'u': {
                        int l = line_, col = column_;
                        advance();
                        char32_t cp = 0;
                        for (int k = 0; k < 4; ++k) {
                            int v = hex_value(peek());
                            if (v < 0) fail("invalid \\u escape", l, col, "\\u");
                            cp = cp * 16 + static_cast<char32_t>(v);
                            advance();
                        }
                        if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate code point in \\u escape", l, col, "\\u");
                        append_utf8(value, cp);
                        break;
                    }
                    default:
                        // Unknown escapes are kept verbatim so regex escapes like \d survive.
                        value.push_back('\\');
                        break;
                }
                continue;
            }
            value.push_back(c);
            advance();
        }
        t.value = std::move(value);
    }

    void lex_punct(Token& t) {
        char c = peek();
        char n = peek(1);
        auto one = [&](Tok k) {
            t.kind = k;
            advance();
        };
        auto two = [&](Tok k) {
            t.kind = k;
            advance();
            advance();
        };
        switch (c) {
            case '(': one(Tok::LParen); return;
            case ')': one(Tok::RParen); return;
            case '[': one(Tok::LBracket); return;
            case ']': one(Tok::RBracket); return;
            case ',': one(Tok::Comma); return;
            case ';': one(Tok::Semicolon); return;
            case ':': one(Tok::Colon); return;
            case '-':
                if (n == '>') { two(Tok::Arrow); return; }
                break;
            case '=':
                if (n == '>') { two(Tok::Arrow); return; }
                one(Tok::Assign);
                return;
            case '<':
                if (n == '=') { two(Tok::LessEqual); return; }
                one(Tok::Less);
                return;
            case '>':
                if (n == '=') { two(Tok::GreaterEqual); return; }
                one(Tok::Greater);
                return;
            case '&':
                if (n == '&') { two(Tok::AndOp); return; }
                break;
            case '|':
                if (n == '|') { two(Tok::OrOp); return; }
                break;
            case '!': one(Tok::NotOp); return;
            default: break;
        }
        std::string shown;
        auto b = static_cast<unsigned char>(c);
        if (b >= 0x20 && b < 0x7F) {
            shown = std::string(1, c);
        } else {
            static const char* hex = "0123456789abcdef";
            shown = std::string("\\x") + hex[b >> 4] + hex[b & 15];
        }
        fail("unexpected character", line_, column_, shown);
    }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::string_view describe(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::String: return "string";
        case Tok::Number: return "number";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Comma: return "','";
        case Tok::Semicolon: return "';'";
        case Tok::Colon: return "':'";
        case Tok::Arrow: return "'->'";
        case Tok::Assign: return "'='";
        case Tok::Less: return "'<'";
        case Tok::LessEqual: return "'<='";
        case Tok::Greater: return "'>'";
        case Tok::GreaterEqual: return "'>='";
        case Tok::AndOp: return "'&&'";
        case Tok::OrOp: return "'||'";
        case Tok::NotOp: return "'!'";
        case Tok::End: return "end of input";
    }
    return "token";
}

}  // namespace labelforge::dsl::detail
