#include "labelforge/dsl/parser.hpp"

#include <charconv>
#include <cmath>
#include <optional>

#include <spdlog/spdlog.h>

#include "lexer.hpp"

namespace labelforge::dsl {

ParseError::ParseError(Kind kind, std::string message, int line, int column, std::string token, std::string file)
    : Error((file.empty() ? std::string() : file + ":") + std::to_string(line) + ":" + std::to_string(column) +
            (kind == Kind::Syntax ? ": syntax error: " : ": validation error: ") + message +
            (token.empty() ? std::string() : " (at '" + token + "')")),
      kind_(kind),
      message_(std::move(message)),
      line_(line),
      column_(column),
      token_(std::move(token)),
      file_(std::move(file)) {}

namespace {

using detail::Tok;
using detail::Token;

constexpr int kMaxDepth = 200;

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        char x = a[i], y = b[i];
        if (x >= 'A' && x <= 'Z') x = static_cast<char>(x + 32);
        if (y >= 'A' && y <= 'Z') y = static_cast<char>(y + 32);
        if (x != y) return false;
    }
    return true;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const ClassSpace& classes, const ConceptSet* concepts)
        : toks_(std::move(tokens)), classes_(classes), concepts_(concepts) {}

    LabelingProgram program() {
        LabelingProgram p;
        bool saw_default = false;
        while (cur().kind != Tok::End) {
            if (accept(Tok::Semicolon)) continue;
            if (saw_default) syntax("statements after 'default'", cur());
            if (is_keyword(cur(), "rule")) {
                next();
                expect(Tok::Colon, "':' after 'rule'");
                Rule r;
                r.guard = expr(0);
                expect(Tok::Arrow, "'->' after rule condition");
                r.emit = target();
                p.rules.push_back(std::move(r));
            } else if (is_keyword(cur(), "default")) {
                next();
                expect(Tok::Arrow, "'->' after 'default'");
                p.default_emit = target();
                saw_default = true;
            } else {
                syntax("expected 'rule' or 'default'", cur());
            }
        }
        if (p.rules.empty()) syntax("a program needs at least one rule", cur());
        p.modality = infer_modality(p);
        return p;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const ClassSpace& classes_;
    const ConceptSet* concepts_;
    bool saw_text_ = false;
    bool saw_score_ = false;
    Token first_text_tok_;
    Token first_score_tok_;

    const Token& cur() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool accept(Tok k) {
        if (cur().kind != k) return false;
        next();
        return true;
    }
    static std::string shown(const Token& t) { return t.kind == Tok::End ? std::string() : t.text; }

    [[noreturn]] void syntax(const std::string& msg, const Token& at) const {
        throw ParseError(ParseError::Kind::Syntax, msg, at.line, at.column, shown(at));
    }
    [[noreturn]] void invalid(const std::string& msg, const Token& at) const {
        throw ParseError(ParseError::Kind::Validation, msg, at.line, at.column, shown(at));
    }

    const Token& expect(Tok k, const std::string& what) {
        if (cur().kind != k)
            syntax("expected " + what + ", found " + std::string(detail::describe(cur().kind)), cur());
        return next();
    }

    static bool is_keyword(const Token& t, std::string_view kw) { return t.kind == Tok::Ident && t.text == kw; }

    int target() {
        const Token& t = cur();
        if (t.kind == Tok::Ident) {
            next();
            if (iequals(t.text, "abstain")) return kAbstain;
            if (auto idx = classes_.resolve(t.text)) return *idx;
            invalid("unknown class '" + t.text + "'", t);
        }
        if (t.kind == Tok::String) {
            next();
            if (auto idx = classes_.resolve(t.value)) return *idx;
            invalid("unknown class '" + t.value + "'", t);
        }
        if (t.kind == Tok::Number) {
            next();
            long long v = 0;
            auto [ptr, ec] = std::from_chars(t.text.data() + (t.text[0] == '+' ? 1 : 0), t.text.data() + t.text.size(), v);
            if (ec != std::errc() || ptr != t.text.data() + t.text.size()) invalid("class index must be an integer", t);
            if (v == kAbstain) return kAbstain;
            if (v < 0 || v >= classes_.size()) invalid("class index out of range", t);
            return static_cast<int>(v);
        }
        syntax("expected a class name, class index or ABSTAIN", t);
    }

    Predicate expr(int depth) { return or_expr(depth); }

    void check_depth(int depth) const {
        if (depth > kMaxDepth) syntax("expression nested too deeply", cur());
    }

    bool at_or() const { return cur().kind == Tok::OrOp || is_keyword(cur(), "or"); }
    bool at_and() const { return cur().kind == Tok::AndOp || is_keyword(cur(), "and"); }
    bool at_not() const { return cur().kind == Tok::NotOp || is_keyword(cur(), "not"); }

    Predicate or_expr(int depth) {
        check_depth(depth);
        Predicate first = and_expr(depth + 1);
        if (!at_or()) return first;
        Or node;
        node.children.push_back(std::move(first));
        while (at_or()) {
            next();
            node.children.push_back(and_expr(depth + 1));
        }
        return Predicate{std::move(node)};
    }

    Predicate and_expr(int depth) {
        check_depth(depth);
        Predicate first = unary(depth + 1);
        if (!at_and()) return first;
        And node;
        node.children.push_back(std::move(first));
        while (at_and()) {
            next();
            node.children.push_back(unary(depth + 1));
        }
        return Predicate{std::move(node)};
    }

    Predicate unary(int depth) {
        check_depth(depth);
        if (at_not()) {
            next();
            return Predicate{Not{unary(depth + 1)}};
        }
        if (accept(Tok::LParen)) {
            Predicate inner = expr(depth + 1);
            expect(Tok::RParen, "')'");
            return inner;
        }
        return call();
    }

    std::string string_arg(const char* what) {
        const Token& t = expect(Tok::String, what);
        return t.value;
    }

    bool case_flag(bool fallback) {
        if (!accept(Tok::Comma)) return fallback;
        const Token& name = cur();
        if (!is_keyword(name, "case_sensitive")) syntax("expected 'case_sensitive='", name);
        next();
        expect(Tok::Assign, "'='");
        const Token& v = cur();
        if (v.kind == Tok::Ident && (iequals(v.text, "true") || iequals(v.text, "false"))) {
            next();
            return iequals(v.text, "true");
        }
        syntax("expected true or false", v);
    }

    double number_arg(const Token& t) {
        if (t.kind != Tok::Number) syntax("expected a number", t);
        double v = 0.0;
        const char* first = t.text.data() + (t.text[0] == '+' ? 1 : 0);
        auto [ptr, ec] = std::from_chars(first, t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v))
            invalid("number is not finite", t);
        return v;
    }

    void note_text(const Token& t) {
        if (!saw_text_) first_text_tok_ = t;
        saw_text_ = true;
    }

    Predicate call() {
        const Token name = cur();
        if (name.kind != Tok::Ident) syntax("expected a predicate", name);
        next();
        expect(Tok::LParen, "'(' after '" + name.text + "'");
        Predicate out;
        if (name.text == "contains") {
            note_text(name);
            const Token& arg = cur();
            Contains c;
            c.term = string_arg("a string argument");
            if (c.term.empty()) invalid("empty search term", arg);
            c.case_sensitive = case_flag(false);
            out.node = std::move(c);
        } else if (name.text == "contains_any") {
            note_text(name);
            ContainsAny c;
            const Token open = cur();
            expect(Tok::LBracket, "'[' starting the term list");
            if (cur().kind != Tok::RBracket) {
                do {
                    const Token& arg = cur();
                    c.terms.push_back(string_arg("a string term"));
                    if (c.terms.back().empty()) invalid("empty search term", arg);
                } while (accept(Tok::Comma) && cur().kind != Tok::RBracket);
            }
            expect(Tok::RBracket, "']' closing the term list");
            if (c.terms.empty()) invalid("contains_any needs at least one term", open);
            c.case_sensitive = case_flag(false);
            out.node = std::move(c);
        } else if (name.text == "matches") {
            note_text(name);
            const Token arg = cur();
            Matches m;
            m.pattern = string_arg("a regex string");
            m.case_sensitive = case_flag(true);
            try {
                m.regex = std::make_shared<const Regex>(Regex::compile(m.pattern, !m.case_sensitive));
            } catch (const RegexError& e) {
                invalid(std::string("invalid regex: ") + e.what(), arg);
            }
            out.node = std::move(m);
        } else if (name.text == "length_at_least") {
            note_text(name);
            const Token& t = cur();
            double v = number_arg(t);
            next();
            if (v < 0 || v != std::floor(v) || v > 1e12) invalid("length must be a nonnegative integer", t);
            out.node = LengthAtLeast{static_cast<std::size_t>(v)};
        } else if (name.text == "uppercase_ratio_at_least") {
            note_text(name);
            const Token& t = cur();
            double v = number_arg(t);
            next();
            if (v < 0.0 || v > 1.0) invalid("ratio must be within [0, 1]", t);
            out.node = UppercaseRatioAtLeast{v};
        } else if (name.text == "score") {
            if (!saw_score_) first_score_tok_ = name;
            saw_score_ = true;
            const Token arg = cur();
            ScoreCmp s;
            s.concept_name = string_arg("a concept description");
            if (!concepts_ || concepts_->empty()) invalid("score() used but no concepts are declared", arg);
            auto idx = concepts_->index_of(s.concept_name);
            if (!idx) invalid("unknown concept '" + s.concept_name + "'", arg);
            s.concept_index = *idx;
            expect(Tok::RParen, "')'");
            const Token& op = cur();
            switch (op.kind) {
                case Tok::Less: s.op = CmpOp::Less; break;
                case Tok::LessEqual: s.op = CmpOp::LessEqual; break;
                case Tok::Greater: s.op = CmpOp::Greater; break;
                case Tok::GreaterEqual: s.op = CmpOp::GreaterEqual; break;
                default: syntax("expected a comparison (<, <=, >, >=) after score()", op);
            }
            next();
            const Token& t = cur();
            s.threshold = number_arg(t);
            next();
            return Predicate{std::move(s)};
        } else {
            syntax("unknown predicate '" + name.text + "'", name);
        }
        expect(Tok::RParen, "')' closing the argument list");
        return out;
    }

    Modality infer_modality(const LabelingProgram&) const {
        if (saw_text_ && saw_score_)
            invalid("program mixes text and score predicates", first_score_tok_);
        return saw_score_ ? Modality::Scores : Modality::Text;
    }
};

}  // namespace

LabelingProgram parse(std::string_view source, const ClassSpace& classes, const ConceptSet* concepts,
                      std::string id) {
    Parser parser(detail::tokenize(source), classes, concepts);
    LabelingProgram p = parser.program();
    p.id = std::move(id);
    if (p.rules.size() > kSoftRuleCap)
        spdlog::warn("program '{}' has {} rules (soft cap {})", p.id, p.rules.size(), kSoftRuleCap);
    return p;
}

}  // namespace labelforge::dsl
