#include <charconv>
#include <string>

#include "labelforge/dsl/parser.hpp"

namespace labelforge::dsl {

namespace {

const char* const kKeywords[] = {"rule", "default", "and", "or", "not", "true", "false",
                                 "contains", "contains_any", "matches", "score", "length_at_least",
                                 "uppercase_ratio_at_least", "case_sensitive"};

void quote(std::string& out, std::string_view s) {
    static const char* hex = "0123456789abcdef";
    out.push_back('"');
    for (char c : s) {
        auto b = static_cast<unsigned char>(c);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (b < 0x20 || b == 0x7F) {
                    out += "\\u00";
                    out.push_back(hex[b >> 4]);
                    out.push_back(hex[b & 15]);
                } else {
                    out.push_back(c);
                }
        }
    }
    out.push_back('"');
}

bool plain_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!start(s[0])) return false;
    for (char c : s)
        if (!start(c) && !(c >= '0' && c <= '9')) return false;
    for (const char* kw : kKeywords)
        if (s == kw) return false;
    std::string lower(s);
    for (auto& c : lower)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    return lower != "abstain";
}

void number(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

void target(std::string& out, int emit, const ClassSpace& classes) {
    if (emit == kAbstain) {
        out += "ABSTAIN";
        return;
    }
    const auto& name = classes.name(emit);
    // An identifier must resolve back to the same index, not to an earlier lenient match.
    if (plain_identifier(name) && classes.resolve(name) == emit) out += name;
    else if (classes.resolve(name) == emit) quote(out, name);
    else out += std::to_string(emit);
}

bool compound(const Predicate& p) {
    return std::holds_alternative<And>(p.node) || std::holds_alternative<Or>(p.node);
}

void predicate(std::string& out, const Predicate& p);

void child(std::string& out, const Predicate& p) {
    if (compound(p)) {
        out.push_back('(');
        predicate(out, p);
        out.push_back(')');
    } else {
        predicate(out, p);
    }
}

void predicate(std::string& out, const Predicate& p) {
    struct Visitor {
        std::string& out;
        void operator()(const Contains& c) const {
            out += "contains(";
            quote(out, c.term);
            if (c.case_sensitive) out += ", case_sensitive=true";
            out += ")";
        }
        void operator()(const ContainsAny& c) const {
            out += "contains_any([";
            for (std::size_t i = 0; i < c.terms.size(); ++i) {
                if (i) out += ", ";
                quote(out, c.terms[i]);
            }
            out += "]";
            if (c.case_sensitive) out += ", case_sensitive=true";
            out += ")";
        }
        void operator()(const Matches& m) const {
            out += "matches(";
            quote(out, m.pattern);
            if (!m.case_sensitive) out += ", case_sensitive=false";
            out += ")";
        }
        void operator()(const LengthAtLeast& l) const { out += "length_at_least(" + std::to_string(l.n_chars) + ")"; }
        void operator()(const UppercaseRatioAtLeast& u) const {
            out += "uppercase_ratio_at_least(";
            number(out, u.ratio);
            out += ")";
        }
        void operator()(const ScoreCmp& s) const {
            out += "score(";
            quote(out, s.concept_name);
            out += ") ";
            switch (s.op) {
                case CmpOp::Less: out += "<"; break;
                case CmpOp::LessEqual: out += "<="; break;
                case CmpOp::Greater: out += ">"; break;
                case CmpOp::GreaterEqual: out += ">="; break;
            }
            out += " ";
            number(out, s.threshold);
        }
        void operator()(const And& a) const {
            for (std::size_t i = 0; i < a.children.size(); ++i) {
                if (i) out += " and ";
                child(out, a.children[i]);
            }
        }
        void operator()(const Or& o) const {
            for (std::size_t i = 0; i < o.children.size(); ++i) {
                if (i) out += " or ";
                child(out, o.children[i]);
            }
        }
        void operator()(const Not& n) const {
            out += "not ";
            child(out, *n.child);
        }
    };
    std::visit(Visitor{out}, p.node);
}

}  // namespace

std::string pretty_print(const LabelingProgram& program, const ClassSpace& classes) {
    std::string out;
    for (const auto& r : program.rules) {
        out += "rule: ";
        predicate(out, r.guard);
        out += " -> ";
        target(out, r.emit, classes);
        out += ";\n";
    }
    out += "default -> ";
    target(out, program.default_emit, classes);
    out += ";\n";
    return out;
}

}  // namespace labelforge::dsl
