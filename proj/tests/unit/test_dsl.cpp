#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "labelforge/dsl/evaluate.hpp"
#include "labelforge/dsl/extract.hpp"
#include "labelforge/dsl/parser.hpp"
#include "labelforge/dsl/program_io.hpp"
#include "support/support.hpp"

using namespace labelforge;
using namespace labelforge::dsl;

namespace {

const ClassSpace kSpam({"spam", "ham"});
const ClassSpace kBirds({"landbird", "waterbird"});

Record text_record(std::string id, std::string text) { return Record{std::move(id), std::move(text), {}, {}}; }

Record score_record(std::string id, std::vector<double> v) {
    return Record{std::move(id), ScoreVector{std::move(v)}, {}, {}};
}

ConceptSet bird_concepts() {
    ConceptSet cs;
    cs.task = "waterbirds";
    cs.concepts = {"foot type is paddling, swimming", "beak shape is hooked", "habitat is forest"};
    return cs;
}

// Independent reference semantics used to check the evaluator.
std::string lower_ascii(std::string s) {
    for (auto& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

std::size_t code_points(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

bool oracle_pred(const Predicate& p, const Record& r) {
    if (auto* c = std::get_if<Contains>(&p.node)) {
        if (c->case_sensitive) return r.text().find(c->term) != std::string::npos;
        return lower_ascii(r.text()).find(lower_ascii(c->term)) != std::string::npos;
    }
    if (auto* c = std::get_if<ContainsAny>(&p.node)) {
        for (const auto& t : c->terms) {
            Predicate one{Contains{t, c->case_sensitive}};
            if (oracle_pred(one, r)) return true;
        }
        return false;
    }
    if (auto* m = std::get_if<Matches>(&p.node)) {
        auto flags = std::regex::ECMAScript;
        if (!m->case_sensitive) flags |= std::regex::icase;
        return std::regex_search(r.text(), std::regex(m->pattern, flags));
    }
    if (auto* l = std::get_if<LengthAtLeast>(&p.node)) return code_points(r.text()) >= l->n_chars;
    if (auto* u = std::get_if<UppercaseRatioAtLeast>(&p.node)) {
        double up = 0, letters = 0;
        for (char c : r.text()) {
            if (std::isupper(static_cast<unsigned char>(c))) up += 1, letters += 1;
            else if (std::islower(static_cast<unsigned char>(c))) letters += 1;
        }
        return (letters == 0 ? 0.0 : up / letters) >= u->ratio;
    }
    if (auto* s = std::get_if<ScoreCmp>(&p.node)) {
        double v = r.scores().values.at(s->concept_index);
        switch (s->op) {
            case CmpOp::Less: return v < s->threshold;
            case CmpOp::LessEqual: return v <= s->threshold;
            case CmpOp::Greater: return v > s->threshold;
            case CmpOp::GreaterEqual: return v >= s->threshold;
        }
    }
    if (auto* a = std::get_if<And>(&p.node)) {
        for (const auto& c : a->children)
            if (!oracle_pred(c, r)) return false;
        return true;
    }
    if (auto* o = std::get_if<Or>(&p.node)) {
        for (const auto& c : o->children)
            if (oracle_pred(c, r)) return true;
        return false;
    }
    if (auto* n = std::get_if<Not>(&p.node)) return !oracle_pred(*n->child, r);
    throw std::logic_error("unhandled node");
}

int oracle_eval(const LabelingProgram& p, const Record& r) {
    for (const auto& rule : p.rules)
        if (oracle_pred(rule.guard, r)) return rule.emit;
    return p.default_emit;
}

// Random program generation over a small alphabet so that guards fire on
// random records often enough to be informative.
struct AstGen {
    std::mt19937_64 rng;
    Modality modality;
    const ConceptSet* concepts;
    int n_classes;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

    std::string term() {
        static const std::vector<std::string> pool = {"a",   "ab",    "B",     "free", "Click", "\"q\"",
                                                      "x\\y", "caf\xC3\xA9", "tab\t", "ba",   "zz"};
        return pool[static_cast<std::size_t>(pick(static_cast<int>(pool.size())))];
    }

    std::string pattern() {
        static const std::vector<std::string> pool = {"a+b", "^ab", "b$", "[a-c]{2}", "(ab|ba)", "x?y*z", "\\d+"};
        return pool[static_cast<std::size_t>(pick(static_cast<int>(pool.size())))];
    }

    Predicate leaf() {
        if (modality == Modality::Scores) {
            ScoreCmp s;
            s.concept_index = static_cast<std::size_t>(pick(static_cast<int>(concepts->concepts.size())));
            s.concept_name = concepts->concepts[s.concept_index];
            s.op = static_cast<CmpOp>(pick(4));
            s.threshold = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            if (pick(4) == 0) s.threshold = 0.5;
            return Predicate{s};
        }
        switch (pick(5)) {
            case 0: return Predicate{Contains{term(), pick(2) == 0}};
            case 1: {
                ContainsAny c;
                int k = 1 + pick(3);
                for (int i = 0; i < k; ++i) c.terms.push_back(term());
                c.case_sensitive = pick(2) == 0;
                return Predicate{c};
            }
            case 2: {
                Matches m;
                m.pattern = pattern();
                m.case_sensitive = pick(2) == 0;
                return Predicate{m};
            }
            case 3: return Predicate{LengthAtLeast{static_cast<std::size_t>(pick(12))}};
            default: return Predicate{UppercaseRatioAtLeast{pick(5) * 0.25}};
        }
    }

    Predicate tree(int depth) {
        if (depth <= 1 || pick(3) == 0) return leaf();
        switch (pick(3)) {
            case 0: {
                And a;
                int k = 2 + pick(2);
                for (int i = 0; i < k; ++i) a.children.push_back(tree(depth - 1));
                return Predicate{std::move(a)};
            }
            case 1: {
                Or o;
                int k = 2 + pick(2);
                for (int i = 0; i < k; ++i) o.children.push_back(tree(depth - 1));
                return Predicate{std::move(o)};
            }
            default: return Predicate{Not{tree(depth - 1)}};
        }
    }

    int target() { return pick(n_classes + 1) - 1; }

    LabelingProgram program(int max_depth) {
        LabelingProgram p;
        p.modality = modality;
        int rules = 1 + pick(4);
        for (int i = 0; i < rules; ++i) p.rules.push_back(Rule{tree(1 + pick(max_depth)), target()});
        p.default_emit = target();
        return p;
    }

    std::string random_text() {
        static const std::string alphabet = "abABxyz 019\"\\Cc";
        std::string s;
        int len = pick(14);
        for (int i = 0; i < len; ++i) s.push_back(alphabet[static_cast<std::size_t>(pick(static_cast<int>(alphabet.size())))]);
        if (pick(5) == 0) s += "free Click";
        if (pick(7) == 0) s += "caf\xC3\xA9";
        return s;
    }
};

int depth_of(const Predicate& p) {
    int d = 0;
    if (auto* a = std::get_if<And>(&p.node))
        for (const auto& c : a->children) d = std::max(d, depth_of(c));
    if (auto* o = std::get_if<Or>(&p.node))
        for (const auto& c : o->children) d = std::max(d, depth_of(c));
    if (auto* n = std::get_if<Not>(&p.node)) d = depth_of(*n->child);
    return d + 1;
}

}  // namespace

TEST_CASE("keyword spam program votes spam on a promotional comment and ham otherwise") {
    auto p = parse(R"(rule: contains_any(["free","click","subscribe"]) -> SPAM; default -> HAM)", kSpam);
    CHECK(evaluate(p, text_record("a", "Click here for FREE prizes")) == 0);
    CHECK(evaluate(p, text_record("b", "great song, love it")) == 1);
}

TEST_CASE("score program thresholds a concept score") {
    auto cs = bird_concepts();
    auto p = parse(R"(rule: score("foot type is paddling, swimming") >= 0.5 -> WATERBIRD; default -> ABSTAIN)", kBirds,
                   &cs);
    CHECK(p.modality == Modality::Scores);
    CHECK(evaluate(p, score_record("w", {0.7, 0.1, 0.2})) == 1);
    CHECK(evaluate(p, score_record("l", {0.3, 0.1, 0.2})) == kAbstain);
    CHECK(evaluate(p, score_record("e", {0.5, 0.0, 0.0})) == 1);
}

TEST_CASE("unterminated call is a syntax error with a position") {
    try {
        parse("rule: contains( -> SPAM", kSpam);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::Syntax);
        CHECK(e.line() == 1);
        CHECK(e.column() == 17);
        CHECK_FALSE(e.message().empty());
    }
}

TEST_CASE("line and column are reported on later lines in code points") {
    try {
        parse("# caf\xC3\xA9\nrule: contains(\"\xC3\xA9\") -> spam\n  default -> nowhere", kSpam);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::Validation);
        CHECK(e.line() == 3);
        CHECK(e.column() == 14);
        CHECK(e.token() == "nowhere");
    }
}

TEST_CASE("validation errors") {
    auto cs = bird_concepts();
    auto kind_of = [](auto&& fn) {
        try {
            fn();
        } catch (const ParseError& e) {
            return e.kind();
        }
        FAIL("expected a parse error");
        return ParseError::Kind::Syntax;
    };
    using K = ParseError::Kind;
    CHECK(kind_of([&] { parse("rule: contains(\"x\") -> eggs", kSpam); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: contains(\"x\") -> 2", kSpam); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: matches(\"(ab\") -> spam", kSpam); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: contains(\"\") -> spam", kSpam); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: uppercase_ratio_at_least(1.5) -> spam", kSpam); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: score(\"wings\") > 0.1 -> waterbird", kBirds, &cs); }) == K::Validation);
    CHECK(kind_of([&] { parse("rule: score(\"habitat is forest\") > 0.1 -> waterbird", kBirds); }) == K::Validation);
    CHECK(kind_of([&] {
              parse("rule: score(\"habitat is forest\") > 0.1 and contains(\"x\") -> waterbird", kBirds, &cs);
          }) == K::Validation);
    CHECK(kind_of([&] { parse("default -> spam", kSpam); }) == K::Syntax);
    CHECK(kind_of([&] { parse("rule: contains(\"x\") -> spam; default -> ham; rule: length_at_least(2) -> spam",
                              kSpam); }) == K::Syntax);
    CHECK(kind_of([&] { parse("rule: frobnicate(\"x\") -> spam", kSpam); }) == K::Syntax);
}

TEST_CASE("defaults: contains folds case, matches does not, missing default abstains") {
    auto p = parse("rule: contains(\"FREE\") -> spam", kSpam);
    CHECK(p.default_emit == kAbstain);
    CHECK(evaluate(p, text_record("a", "totally free")) == 0);
    CHECK(evaluate(p, text_record("b", "nothing")) == kAbstain);

    auto m = parse("rule: matches(\"FREE\") -> spam", kSpam);
    CHECK(evaluate(m, text_record("a", "totally free")) == kAbstain);
    CHECK(evaluate(m, text_record("a", "totally FREE")) == 0);
    auto mi = parse("rule: matches(\"FREE\", case_sensitive=false) -> spam", kSpam);
    CHECK(evaluate(mi, text_record("a", "totally free")) == 0);

    auto cs = parse("rule: contains(\"FREE\", case_sensitive=true) -> spam", kSpam);
    CHECK(evaluate(cs, text_record("a", "totally free")) == kAbstain);
}

TEST_CASE("first matching rule wins") {
    auto p = parse("rule: contains(\"a\") -> spam\nrule: contains(\"b\") -> ham\ndefault -> ABSTAIN", kSpam);
    CHECK(evaluate(p, text_record("1", "ab")) == 0);
    CHECK(evaluate(p, text_record("2", "b")) == 1);
    CHECK(evaluate(p, text_record("3", "c")) == kAbstain);
}

TEST_CASE("boolean operators, precedence and other predicates") {
    auto p = parse("rule: not contains(\"x\") and length_at_least(3) or uppercase_ratio_at_least(0.5) -> spam\n"
                   "default -> ham",
                   kSpam);
    CHECK(evaluate(p, text_record("1", "abc")) == 0);
    CHECK(evaluate(p, text_record("2", "xbc")) == 1);
    CHECK(evaluate(p, text_record("3", "XBc")) == 0);
    CHECK(evaluate(p, text_record("4", "ab")) == 1);
    CHECK(evaluate(p, text_record("5", "\xC3\xA9\xC3\xA9\xC3\xA9")) == 0);
}

TEST_CASE("modality mismatch names the program") {
    auto p = parse("rule: contains(\"a\") -> spam", kSpam, nullptr, "kw1");
    try {
        evaluate(p, score_record("r1", {0.1}));
        FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("kw1") != std::string::npos);
    }
}

TEST_CASE("an exhausted budget abstains instead of failing") {
    auto p = parse("rule: matches(\"(a|aa)*b\") -> spam\ndefault -> ham", kSpam);
    EvalOptions opts;
    opts.budget = std::chrono::microseconds(0);
    CHECK(evaluate(p, text_record("1", std::string(20000, 'a')), opts) == kAbstain);
}

TEST_CASE("pretty print is canonical and round trips the examples") {
    auto cs = bird_concepts();
    auto p = parse(R"(rule: contains_any(["free","click","subscribe"]) -> SPAM; default -> HAM)", kSpam);
    auto text = pretty_print(p, kSpam);
    CHECK(parse(text, kSpam) == p);
    CHECK(pretty_print(parse(text, kSpam), kSpam) == text);

    auto q = parse(R"(rule: score("foot type is paddling, swimming") >= 0.5 -> WATERBIRD; default -> ABSTAIN)", kBirds,
                   &cs);
    CHECK(parse(pretty_print(q, kBirds), kBirds, &cs) == q);
}

TEST_CASE("class names that are not identifiers print quoted or by index") {
    ClassSpace odd({"not spam", "rule", "Ham", "ham"});
    auto p = parse("rule: contains(\"a\") -> 0\nrule: contains(\"b\") -> 1\nrule: contains(\"c\") -> 2\n"
                   "default -> 3",
                   odd);
    CHECK(parse(pretty_print(p, odd), odd) == p);
}

TEST_CASE("property: parse(pretty_print(p)) == p for random text ASTs up to depth 6") {
    AstGen gen{std::mt19937_64(101), Modality::Text, nullptr, 3};
    ClassSpace classes({"a", "b", "c"});
    for (int trial = 0; trial < 1000; ++trial) {
        auto p = gen.program(6);
        for (const auto& r : p.rules) REQUIRE(depth_of(r.guard) <= 6);
        auto src = pretty_print(p, classes);
        LabelingProgram back;
        REQUIRE_NOTHROW(back = parse(src, classes));
        REQUIRE_MESSAGE(back == p, src);
    }
}

TEST_CASE("property: parse(pretty_print(p)) == p for random score ASTs") {
    auto cs = bird_concepts();
    AstGen gen{std::mt19937_64(202), Modality::Scores, &cs, 2};
    for (int trial = 0; trial < 1000; ++trial) {
        auto p = gen.program(6);
        auto src = pretty_print(p, kBirds);
        LabelingProgram back;
        REQUIRE_NOTHROW(back = parse(src, kBirds, &cs));
        REQUIRE_MESSAGE(back == p, src);
    }
}

TEST_CASE("property: evaluation is total and agrees with a reference interpreter") {
    ClassSpace classes({"a", "b", "c"});
    AstGen gen{std::mt19937_64(303), Modality::Text, nullptr, 3};
    int fired = 0;
    for (int trial = 0; trial < 400; ++trial) {
        auto p = parse(pretty_print(gen.program(5), classes), classes);
        for (int k = 0; k < 10; ++k) {
            auto r = text_record("r", gen.random_text());
            int got = 0;
            REQUIRE_NOTHROW(got = evaluate(p, r));
            REQUIRE(got >= kAbstain);
            REQUIRE(got < 3);
            REQUIRE_MESSAGE(got == oracle_eval(p, r), pretty_print(p, classes) << " on '" << r.text() << "'");
            if (got != p.default_emit) ++fired;
        }
    }
    CHECK(fired > 200);

    auto cs = bird_concepts();
    AstGen sgen{std::mt19937_64(304), Modality::Scores, &cs, 2};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 400; ++trial) {
        auto p = parse(pretty_print(sgen.program(5), kBirds), kBirds, &cs);
        for (int k = 0; k < 10; ++k) {
            auto r = score_record("s", {u(sgen.rng), u(sgen.rng), u(sgen.rng)});
            REQUIRE(evaluate(p, r) == oracle_eval(p, r));
        }
    }
}

TEST_CASE("property: appending rules never changes votes decided by earlier rules") {
    ClassSpace classes({"a", "b", "c"});
    AstGen gen{std::mt19937_64(404), Modality::Text, nullptr, 3};
    for (int trial = 0; trial < 300; ++trial) {
        auto p = parse(pretty_print(gen.program(4), classes), classes);
        auto extended = p;
        auto extra = parse(pretty_print(gen.program(4), classes), classes);
        for (auto& r : extra.rules) extended.rules.push_back(std::move(r));
        for (int k = 0; k < 10; ++k) {
            auto r = text_record("r", gen.random_text());
            bool decided = std::any_of(p.rules.begin(), p.rules.end(),
                                       [&](const Rule& rule) { return oracle_pred(rule.guard, r); });
            if (decided) REQUIRE(evaluate(extended, r) == evaluate(p, r));
        }
    }
}

TEST_CASE("fuzz: arbitrary input either parses or raises ParseError") {
    std::mt19937_64 rng(505);
    const std::vector<std::string> fragments = {"rule", ":", "contains", "(", ")", "\"x\"", "->", "spam", "ham",
                                                "default", ";", "and", "or", "not", "[", "]", ",", "matches",
                                                "\"(a\"", "0.5", "-1", "ABSTAIN", "\n", "#c", "score", ">=",
                                                "case_sensitive", "=", "true", "\"\\u00e9\"", "\"\\q\"", "\""};
    const std::string base = R"(rule: contains_any(["free","click"]) and not matches("^a+$") -> spam; default -> ham)";
    int parsed = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::string src;
        switch (trial % 3) {
            case 0: {
                int len = static_cast<int>(rng() % 64);
                for (int i = 0; i < len; ++i) src.push_back(static_cast<char>(rng() % 256));
                break;
            }
            case 1: {
                int len = 1 + static_cast<int>(rng() % 16);
                for (int i = 0; i < len; ++i) src += fragments[rng() % fragments.size()] + " ";
                break;
            }
            default: {
                src = base;
                int edits = 1 + static_cast<int>(rng() % 4);
                for (int e = 0; e < edits; ++e) {
                    std::size_t pos = rng() % (src.size() + 1);
                    switch (rng() % 3) {
                        case 0: if (pos < src.size()) src.erase(pos, 1); break;
                        case 1: src.insert(pos, 1, static_cast<char>(rng() % 128)); break;
                        default: if (pos < src.size()) src[pos] = static_cast<char>(rng() % 256);
                    }
                }
            }
        }
        try {
            auto p = parse(src, kSpam);
            ++parsed;
            auto again = parse(pretty_print(p, kSpam), kSpam);
            REQUIRE(again == p);
        } catch (const ParseError& e) {
            REQUIRE(e.line() >= 1);
            REQUIRE(e.column() >= 1);
        }
    }
    CHECK(parsed > 0);
}

TEST_CASE("extraction takes the first fenced block that parses") {
    auto ok = extract_program("Here you go:\n```python\nrule: contains(\"free\") -> spam\ndefault -> ham\n```\n", kSpam,
                              nullptr, "gen_000");
    REQUIRE(ok.ok());
    CHECK(ok.program->id == "gen_000");
    CHECK(ok.program->rules.size() == 1);

    auto second = extract_program("```\ndef label(x): return 1\n```\ntry this\n```lf\nrule: contains(\"x\") -> ham\n```",
                                  kSpam);
    REQUIRE(second.ok());
    CHECK(second.errors.size() == 1);
    CHECK(second.errors[0].rfind("block 1:", 0) == 0);
    CHECK(second.source.find("contains(\"x\")") != std::string::npos);

    auto prose = extract_program("I think spam messages often mention prizes.", kSpam);
    CHECK_FALSE(prose.ok());
    CHECK(prose.rejection == "no program found");

    auto bad = extract_program("```\nrule: contains( -> spam\n```", kSpam);
    CHECK_FALSE(bad.ok());
    CHECK(bad.rejection == "no block parsed as a program");
    CHECK(bad.errors.size() == 1);
}

TEST_CASE("assemble_votes equals sequential evaluation and ignores the thread count") {
    ClassSpace classes({"a", "b", "c"});
    AstGen gen{std::mt19937_64(606), Modality::Text, nullptr, 3};
    std::vector<LabelingProgram> programs;
    for (int j = 0; j < 7; ++j) {
        auto p = parse(pretty_print(gen.program(4), classes), classes, nullptr, "p" + std::to_string(j));
        programs.push_back(std::move(p));
    }
    std::vector<Record> records;
    for (int i = 0; i < 257; ++i) records.push_back(text_record("r" + std::to_string(i), gen.random_text()));

    AssembleOptions one;
    one.threads = 1;
    auto base = assemble_votes(records, programs, one);
    REQUIRE(base.n() == records.size());
    REQUIRE(base.m() == programs.size());
    CHECK(base.program_ids()[3] == "p3");
    CHECK(base.record_ids()[5] == "r5");
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = 0; j < programs.size(); ++j) REQUIRE(base.at(i, j) == oracle_eval(programs[j], records[i]));
    for (unsigned t : {2u, 3u, 8u, 0u}) {
        AssembleOptions opts;
        opts.threads = t;
        CHECK(assemble_votes(records, programs, opts) == base);
    }
}

TEST_CASE("assemble_votes surfaces a modality mismatch") {
    auto p = parse("rule: contains(\"a\") -> spam", kSpam, nullptr, "txt");
    std::vector<Record> recs = {score_record("s", {0.2})};
    CHECK_THROWS_AS(assemble_votes(recs, {p}), EvaluationError);
}

TEST_CASE("program files load in name order with the stem as id") {
    lf_test::TempDir dir;
    lf_test::write_file(dir.path() / "b.lf", "rule: contains(\"b\") -> ham\n");
    lf_test::write_file(dir.path() / "a.lf", "rule: contains(\"a\") -> spam\n");
    lf_test::write_file(dir.path() / "notes.txt", "ignored");
    auto progs = load_programs(dir.path(), kSpam);
    REQUIRE(progs.size() == 2);
    CHECK(progs[0].id == "a");
    CHECK(progs[1].id == "b");

    lf_test::write_file(dir.path() / "c.lf", "rule: -> ham\n");
    try {
        load_programs(dir.path(), kSpam);
        FAIL("expected failure");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("c.lf") != std::string::npos);
    }
}
