#include "labelforge/dsl/regex.hpp"

#include <algorithm>

namespace labelforge::dsl {

namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr std::size_t kMaxProgram = 20000;
constexpr int kMaxRepeat = 1000;

struct Decoded {
    std::vector<char32_t> cps;
    std::vector<std::size_t> offsets;  // byte offset of each code point, plus end
};

Decoded decode_with_offsets(std::string_view s) {
    Decoded d;
    d.cps.reserve(s.size());
    d.offsets.reserve(s.size() + 1);
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    while (i < s.size()) {
        d.offsets.push_back(i);
        unsigned char b = byte(i);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b < 0x80) {
            len = 1;
            cp = b;
        } else if ((b & 0xE0) == 0xC0) {
            len = 2;
            cp = b & 0x1F;
        } else if ((b & 0xF0) == 0xE0) {
            len = 3;
            cp = b & 0x0F;
        } else if ((b & 0xF8) == 0xF0) {
            len = 4;
            cp = b & 0x07;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            if ((byte(i + k) & 0xC0) != 0x80) ok = false;
            else cp = (cp << 6) | (byte(i + k) & 0x3F);
        }
        if (ok && len > 1) {
            static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
            if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) ok = false;
        }
        if (!ok) {
            d.cps.push_back(kReplacement);
            i += 1;
        } else {
            d.cps.push_back(cp);
            i += len;
        }
    }
    d.offsets.push_back(s.size());
    return d;
}

char32_t fold(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    return c;
}

char32_t unfold(char32_t c) {
    if (c >= 'a' && c <= 'z') return c - 32;
    if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 32;
    return c;
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }
bool is_space(char32_t c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_word(char32_t c) {
    if (c < 0x80) return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    return c >= 0xC0 && c != 0xD7 && c != 0xF7 && c != kReplacement;
}

enum class Named : std::uint8_t { Digit, Word, Space };

bool named_match(Named n, char32_t c) {
    switch (n) {
        case Named::Digit: return is_digit(c);
        case Named::Word: return is_word(c);
        case Named::Space: return is_space(c);
    }
    return false;
}

struct CharClass {
    std::vector<std::pair<char32_t, char32_t>> ranges;
    std::vector<std::pair<Named, bool>> named;  // (kind, negated)
    bool negated = false;

    bool raw_match(char32_t c) const {
        for (auto [lo, hi] : ranges)
            if (c >= lo && c <= hi) return true;
        for (auto [n, neg] : named)
            if (named_match(n, c) != neg) return true;
        return false;
    }
    bool match(char32_t c, bool ci) const {
        bool hit = raw_match(c);
        if (!hit && ci) hit = raw_match(fold(c)) || raw_match(unfold(c));
        return hit != negated;
    }
};

enum class AssertKind : std::uint8_t { Bol, Eol, WordBoundary, NotWordBoundary };

struct Node {
    enum Kind : std::uint8_t { Empty, Lit, Any, Cls, Assert, Cat, Alt, Rep } kind = Empty;
    char32_t c = 0;
    int cls = -1;
    AssertKind assert_kind = AssertKind::Bol;
    int min = 0;
    int max = -1;  // -1: unbounded
    std::vector<Node> kids;
};

enum class Op : std::uint8_t { Char, Any, Class, Split, Jmp, Assert, Match };

struct Inst {
    Op op = Op::Match;
    char32_t c = 0;
    int x = 0;
    int y = 0;
    int cls = -1;
    AssertKind assert_kind = AssertKind::Bol;
};

class Parser {
public:
    Parser(std::string_view pattern, bool& ci, std::vector<CharClass>& classes)
        : d_(decode_with_offsets(pattern)), ci_(ci), classes_(classes) {}

    Node parse() {
        if (lookahead("(?i)")) {
            ci_ = true;
            pos_ += 4;
        }
        Node n = parse_alt();
        if (pos_ < d_.cps.size()) fail(peek() == ')' ? "unmatched ')'" : "unexpected character");
        return n;
    }

private:
    Decoded d_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    bool& ci_;
    std::vector<CharClass>& classes_;

    [[noreturn]] void fail(const std::string& msg) const {
        throw RegexError(msg, d_.offsets[std::min(pos_, d_.cps.size())]);
    }
    bool at_end() const { return pos_ >= d_.cps.size(); }
    char32_t peek(std::size_t ahead = 0) const {
        return pos_ + ahead < d_.cps.size() ? d_.cps[pos_ + ahead] : 0;
    }
    bool lookahead(std::string_view s) const {
        for (std::size_t k = 0; k < s.size(); ++k)
            if (pos_ + k >= d_.cps.size() || d_.cps[pos_ + k] != static_cast<char32_t>(s[k])) return false;
        return true;
    }

    Node parse_alt() {
        Node first = parse_concat();
        if (at_end() || peek() != '|') return first;
        Node alt;
        alt.kind = Node::Alt;
        alt.kids.push_back(std::move(first));
        while (!at_end() && peek() == '|') {
            ++pos_;
            alt.kids.push_back(parse_concat());
        }
        return alt;
    }

    Node parse_concat() {
        Node cat;
        cat.kind = Node::Cat;
        while (!at_end() && peek() != '|' && peek() != ')') cat.kids.push_back(parse_repeat());
        if (cat.kids.empty()) return Node{};
        if (cat.kids.size() == 1) return std::move(cat.kids.front());
        return cat;
    }

    bool parse_int(int& out) {
        std::size_t start = pos_;
        long long v = 0;
        while (!at_end() && is_digit(peek())) {
            v = v * 10 + (peek() - '0');
            if (v > 100000) v = 100000;
            ++pos_;
        }
        out = static_cast<int>(v);
        return pos_ > start;
    }

    // Parses {n}, {n,}, {n,m}; restores position and returns false if the
    // brace does not start a valid quantifier (it is then a literal).
    bool parse_braces(int& lo, int& hi) {
        std::size_t save = pos_;
        ++pos_;
        if (!parse_int(lo)) {
            pos_ = save;
            return false;
        }
        hi = lo;
        if (!at_end() && peek() == ',') {
            ++pos_;
            if (!parse_int(hi)) hi = -1;
        }
        if (at_end() || peek() != '}') {
            pos_ = save;
            return false;
        }
        ++pos_;
        if (lo > kMaxRepeat || hi > kMaxRepeat) fail("repetition count exceeds 1000");
        if (hi != -1 && hi < lo) fail("repetition range is reversed");
        return true;
    }

    Node parse_repeat() {
        Node atom = parse_atom();
        while (!at_end()) {
            int lo = 0, hi = -1;
            char32_t c = peek();
            if (c == '*') {
                ++pos_;
            } else if (c == '+') {
                lo = 1;
                ++pos_;
            } else if (c == '?') {
                hi = 1;
                ++pos_;
            } else if (c == '{' && parse_braces(lo, hi)) {
            } else {
                break;
            }
            if (!at_end() && (peek() == '?' || peek() == '+')) ++pos_;
            Node rep;
            rep.kind = Node::Rep;
            rep.min = lo;
            rep.max = hi;
            rep.kids.push_back(std::move(atom));
            atom = std::move(rep);
        }
        return atom;
    }

    Node literal(char32_t c) {
        Node n;
        n.kind = Node::Lit;
        n.c = c;
        return n;
    }

    Node class_node(CharClass cc) {
        Node n;
        n.kind = Node::Cls;
        n.cls = static_cast<int>(classes_.size());
        classes_.push_back(std::move(cc));
        return n;
    }

    Node assertion(AssertKind k) {
        Node n;
        n.kind = Node::Assert;
        n.assert_kind = k;
        return n;
    }

    Node parse_atom() {
        char32_t c = peek();
        switch (c) {
            case '(': return parse_group();
            case '[': return parse_class();
            case '.': ++pos_; { Node n; n.kind = Node::Any; return n; }
            case '^': ++pos_; return assertion(AssertKind::Bol);
            case '$': ++pos_; return assertion(AssertKind::Eol);
            case '\\': return parse_escape();
            case '*': case '+': case '?': fail("nothing to repeat");
            default: ++pos_; return literal(c);
        }
    }

    Node parse_group() {
        ++pos_;
        if (peek() == '?') {
            if (peek(1) == ':') {
                pos_ += 2;
            } else if (peek(1) == '=' || peek(1) == '!' || (peek(1) == '<' && (peek(2) == '=' || peek(2) == '!'))) {
                fail("lookaround is not supported");
            } else if (peek(1) == 'P' && peek(2) == '<') {
                pos_ += 3;
                skip_group_name();
            } else if (peek(1) == '<') {
                pos_ += 2;
                skip_group_name();
            } else {
                fail("unsupported group flag");
            }
        }
        if (++depth_ > 200) fail("groups nested too deeply");
        Node inner = parse_alt();
        --depth_;
        if (at_end() || peek() != ')') fail("missing ')'");
        ++pos_;
        return inner;
    }

    void skip_group_name() {
        while (!at_end() && peek() != '>') {
            if (!is_word(peek())) fail("invalid group name");
            ++pos_;
        }
        if (at_end()) fail("unterminated group name");
        ++pos_;
    }

    int hex_digits(int count) {
        int v = 0;
        for (int k = 0; k < count; ++k) {
            char32_t h = peek();
            int dv;
            if (is_digit(h)) dv = static_cast<int>(h - '0');
            else if (h >= 'a' && h <= 'f') dv = static_cast<int>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') dv = static_cast<int>(h - 'A' + 10);
            else fail("invalid hex escape");
            v = v * 16 + dv;
            ++pos_;
        }
        return v;
    }

    // Escape shared by atoms and classes. Returns either a code point or a
    // named class in *named.
    char32_t escape_value(std::optional<std::pair<Named, bool>>* named, bool in_class, AssertKind* assertion_out,
                          bool* is_assertion) {
        ++pos_;  // backslash
        if (at_end()) fail("trailing backslash");
        char32_t c = peek();
        ++pos_;
        switch (c) {
            case 'd': *named = std::pair{Named::Digit, false}; return 0;
            case 'D': *named = std::pair{Named::Digit, true}; return 0;
            case 'w': *named = std::pair{Named::Word, false}; return 0;
            case 'W': *named = std::pair{Named::Word, true}; return 0;
            case 's': *named = std::pair{Named::Space, false}; return 0;
            case 'S': *named = std::pair{Named::Space, true}; return 0;
            case 'n': return '\n';
            case 't': return '\t';
            case 'r': return '\r';
            case 'f': return '\f';
            case 'v': return '\v';
            case '0': return 0;
            case 'x':
                if (peek() == '{') {
                    ++pos_;
                    int v = 0, digits = 0;
                    while (!at_end() && peek() != '}') {
                        v = v * 16 + hex_digits(1);
                        if (++digits > 6 || v > 0x10FFFF) fail("hex escape out of range");
                    }
                    if (at_end() || digits == 0) fail("invalid hex escape");
                    ++pos_;
                    return static_cast<char32_t>(v);
                }
                return static_cast<char32_t>(hex_digits(2));
            case 'u': return static_cast<char32_t>(hex_digits(4));
            case 'b':
                if (in_class) return '\b';
                *is_assertion = true;
                *assertion_out = AssertKind::WordBoundary;
                return 0;
            case 'B':
                if (in_class) fail("\\B inside a class");
                *is_assertion = true;
                *assertion_out = AssertKind::NotWordBoundary;
                return 0;
            case 'A':
                if (in_class) fail("\\A inside a class");
                *is_assertion = true;
                *assertion_out = AssertKind::Bol;
                return 0;
            case 'z': case 'Z':
                if (in_class) fail("\\z inside a class");
                *is_assertion = true;
                *assertion_out = AssertKind::Eol;
                return 0;
            default: break;
        }
        if (c >= '1' && c <= '9') {
            --pos_;
            fail("backreferences are not supported");
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            --pos_;
            fail("unsupported escape");
        }
        return c;
    }

    Node parse_escape() {
        std::optional<std::pair<Named, bool>> named;
        AssertKind ak{};
        bool is_assert = false;
        char32_t c = escape_value(&named, false, &ak, &is_assert);
        if (is_assert) return assertion(ak);
        if (named) {
            CharClass cc;
            cc.named.push_back(*named);
            return class_node(std::move(cc));
        }
        return literal(c);
    }

    Node parse_class() {
        ++pos_;
        CharClass cc;
        if (peek() == '^') {
            cc.negated = true;
            ++pos_;
        }
        bool first = true;
        while (true) {
            if (at_end()) fail("missing ']'");
            char32_t c = peek();
            if (c == ']' && !first) {
                ++pos_;
                break;
            }
            first = false;
            char32_t lo;
            if (c == '\\') {
                std::optional<std::pair<Named, bool>> named;
                AssertKind ak{};
                bool is_assert = false;
                lo = escape_value(&named, true, &ak, &is_assert);
                if (named) {
                    cc.named.push_back(*named);
                    continue;
                }
            } else {
                lo = c;
                ++pos_;
            }
            char32_t hi = lo;
            if (peek() == '-' && pos_ + 1 < d_.cps.size() && peek(1) != ']') {
                ++pos_;
                if (peek() == '\\') {
                    std::optional<std::pair<Named, bool>> named;
                    AssertKind ak{};
                    bool is_assert = false;
                    hi = escape_value(&named, true, &ak, &is_assert);
                    if (named) fail("class range ends in a class escape");
                } else {
                    hi = peek();
                    ++pos_;
                }
                if (hi < lo) fail("class range is reversed");
            }
            cc.ranges.emplace_back(lo, hi);
        }
        return class_node(std::move(cc));
    }
};

class Emitter {
public:
    explicit Emitter(std::vector<Inst>& code, bool ci) : code_(code), ci_(ci) {}

    void emit(const Node& n) {
        switch (n.kind) {
            case Node::Empty: break;
            case Node::Lit: push({Op::Char, ci_ ? fold(n.c) : n.c}); break;
            case Node::Any: push({Op::Any}); break;
            case Node::Cls: { Inst i{Op::Class}; i.cls = n.cls; push(i); break; }
            case Node::Assert: { Inst i{Op::Assert}; i.assert_kind = n.assert_kind; push(i); break; }
            case Node::Cat:
                for (const auto& k : n.kids) emit(k);
                break;
            case Node::Alt: emit_alt(n, 0); break;
            case Node::Rep: emit_rep(n); break;
        }
    }

private:
    std::vector<Inst>& code_;
    bool ci_;

    int push(Inst i) {
        if (code_.size() >= kMaxProgram) throw RegexError("pattern is too large", 0);
        code_.push_back(i);
        return static_cast<int>(code_.size()) - 1;
    }
    int here() const { return static_cast<int>(code_.size()); }

    void emit_alt(const Node& n, std::size_t k) {
        if (k + 1 == n.kids.size()) {
            emit(n.kids[k]);
            return;
        }
        int split = push({Op::Split});
        code_[split].x = here();
        emit(n.kids[k]);
        int jmp = push({Op::Jmp});
        code_[split].y = here();
        emit_alt(n, k + 1);
        code_[jmp].x = here();
    }

    void emit_star(const Node& child) {
        int split = push({Op::Split});
        code_[split].x = here();
        emit(child);
        Inst j{Op::Jmp};
        j.x = split;
        push(j);
        code_[split].y = here();
    }

    void emit_quest_chain(const Node& child, int count) {
        // (e(e(e)?)?)? with all skips landing at the end
        std::vector<int> splits;
        for (int k = 0; k < count; ++k) {
            int split = push({Op::Split});
            code_[split].x = here();
            splits.push_back(split);
            emit(child);
        }
        for (int s : splits) code_[s].y = here();
    }

    void emit_rep(const Node& n) {
        const Node& child = n.kids.front();
        if (n.max == -1) {
            if (n.min == 0) {
                emit_star(child);
                return;
            }
            for (int k = 0; k + 1 < n.min; ++k) emit(child);
            int start = here();
            emit(child);
            Inst s{Op::Split};
            s.x = start;
            int split = push(s);
            code_[split].y = here();
            return;
        }
        for (int k = 0; k < n.min; ++k) emit(child);
        emit_quest_chain(child, n.max - n.min);
    }
};

struct ThreadList {
    std::vector<int> pcs;
    std::vector<std::uint32_t> mark;
    std::uint32_t gen = 1;

    explicit ThreadList(std::size_t size) : mark(size, 0) { pcs.reserve(size); }
    void clear() {
        pcs.clear();
        if (++gen == 0) {
            std::fill(mark.begin(), mark.end(), 0);
            gen = 1;
        }
    }
    bool insert(int pc) {
        if (mark[static_cast<std::size_t>(pc)] == gen) return false;
        mark[static_cast<std::size_t>(pc)] = gen;
        return true;
    }
};

}  // namespace

struct Regex::Program {
    std::vector<Inst> code;
    std::vector<CharClass> classes;
    bool anchored_start = false;
};

std::vector<char32_t> decode_utf8(std::string_view s) { return decode_with_offsets(s).cps; }

std::size_t count_code_points(std::string_view s) {
    std::size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

Regex Regex::compile(std::string_view pattern, bool case_insensitive) {
    auto prog = std::make_shared<Program>();
    bool ci = case_insensitive;
    Parser parser(pattern, ci, prog->classes);
    Node root = parser.parse();
    Emitter emitter(prog->code, ci);
    emitter.emit(root);
    prog->code.push_back(Inst{Op::Match});
    prog->anchored_start = !prog->code.empty() && prog->code.front().op == Op::Assert &&
                           prog->code.front().assert_kind == AssertKind::Bol;
    Regex r;
    r.pattern_ = std::string(pattern);
    r.case_insensitive_ = ci;
    r.prog_ = std::move(prog);
    return r;
}

std::size_t Regex::program_size() const { return prog_ ? prog_->code.size() : 0; }

bool Regex::search(std::string_view text, std::optional<std::chrono::steady_clock::time_point> deadline) const {
    const Program& p = *prog_;
    std::vector<char32_t> input = decode_utf8(text);
    if (case_insensitive_)
        for (auto& c : input) c = fold(c);
    const std::size_t n = input.size();
    const bool ci = case_insensitive_;

    ThreadList clist(p.code.size()), nlist(p.code.size());
    std::vector<int> stack;
    bool matched = false;

    auto add = [&](ThreadList& list, int start_pc, std::size_t pos) {
        stack.clear();
        stack.push_back(start_pc);
        while (!stack.empty()) {
            int pc = stack.back();
            stack.pop_back();
            if (!list.insert(pc)) continue;
            const Inst& in = p.code[static_cast<std::size_t>(pc)];
            switch (in.op) {
                case Op::Jmp: stack.push_back(in.x); break;
                case Op::Split:
                    stack.push_back(in.y);
                    stack.push_back(in.x);
                    break;
                case Op::Assert: {
                    const bool prev_word = pos > 0 && is_word(input[pos - 1]);
                    const bool next_word = pos < n && is_word(input[pos]);
                    bool ok = false;
                    switch (in.assert_kind) {
                        case AssertKind::Bol: ok = pos == 0; break;
                        case AssertKind::Eol: ok = pos == n; break;
                        case AssertKind::WordBoundary: ok = prev_word != next_word; break;
                        case AssertKind::NotWordBoundary: ok = prev_word == next_word; break;
                    }
                    if (ok) stack.push_back(pc + 1);
                    break;
                }
                case Op::Match: matched = true; break;
                default: list.pcs.push_back(pc); break;
            }
        }
    };

    clist.clear();
    for (std::size_t i = 0;; ++i) {
        if (i == 0 || !p.anchored_start) add(clist, 0, i);
        if (matched) return true;
        if (i == n || clist.pcs.empty()) {
            if (i == n || p.anchored_start) return false;
        }
        if ((i & 255) == 255 && deadline && std::chrono::steady_clock::now() > *deadline) throw RegexTimeout();
        const char32_t c = input[i];
        nlist.clear();
        for (int pc : clist.pcs) {
            const Inst& in = p.code[static_cast<std::size_t>(pc)];
            bool ok = false;
            switch (in.op) {
                case Op::Char: ok = in.c == c; break;
                case Op::Any: ok = c != '\n'; break;
                case Op::Class: ok = p.classes[static_cast<std::size_t>(in.cls)].match(c, ci); break;
                default: break;
            }
            if (ok) add(nlist, pc + 1, i + 1);
            if (matched) return true;
        }
        std::swap(clist, nlist);
    }
}

}  // namespace labelforge::dsl
