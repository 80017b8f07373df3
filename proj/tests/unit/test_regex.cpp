#include <doctest.h>

#include <chrono>
#include <random>
#include <regex>

#include "labelforge/dsl/regex.hpp"

using labelforge::dsl::Regex;
using labelforge::dsl::RegexError;

namespace {

bool rx(const char* p, const char* t, bool ci = false) { return Regex::compile(p, ci).search(t); }

// Small random patterns over {a, b, c}; std::regex is the oracle.
std::string gen_pattern(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 4);
    switch (pick(rng)) {
        case 0: return std::string(1, "abc"[rng() % 3]);
        case 1: return ".";
        case 2: return "[ab]";
        case 3: return "[^a]";
        case 4: return std::string(1, "abc"[rng() % 3]) + std::string(1, "abc"[rng() % 3]);
        case 5: return "(" + gen_pattern(rng, depth - 1) + ")*";
        case 6: return "(" + gen_pattern(rng, depth - 1) + "|" + gen_pattern(rng, depth - 1) + ")";
        case 7: return gen_pattern(rng, depth - 1) + gen_pattern(rng, depth - 1);
        case 8: return "(" + gen_pattern(rng, depth - 1) + ")" + (rng() % 2 ? "+" : "?");
        default: return "(" + gen_pattern(rng, depth - 1) + "){1,2}";
    }
}

}  // namespace

TEST_CASE("basic matching") {
    CHECK(rx("free", "get it FREE now", true));
    CHECK_FALSE(rx("free", "get it FREE now"));
    CHECK(rx("(?i)free", "FREE"));
    CHECK(rx("^ab+c$", "abbbc"));
    CHECK_FALSE(rx("^ab+c$", "xabbbc"));
    CHECK(rx("\\d{3}-\\d{4}", "call 555-1234"));
    CHECK_FALSE(rx("\\d{3}-\\d{4}", "call 55-1234"));
    CHECK(rx("\\bwin\\b", "you win!"));
    CHECK_FALSE(rx("\\bwin\\b", "winner"));
    CHECK(rx("https?://\\S+", "see http://x.co"));
    CHECK(rx("colou?r", "color"));
    CHECK(rx("[A-Z]{2,}", "hello WORLD"));
    CHECK_FALSE(rx("[A-Z]{3,}", "hello WO rld"));
    CHECK(rx("a{2}", "caab"));
    CHECK(rx("", "anything"));
    CHECK(rx("caf.", "café"));  // '.' consumes one code point
    CHECK(rx("^.{4}$", "café"));
    CHECK(rx("É", "é", true));
    CHECK(rx("\\s", "a b"));
    CHECK(rx("[^\\d]", "1a"));
}

TEST_CASE("unsupported or malformed patterns are compile errors") {
    CHECK_THROWS_AS(Regex::compile("(a)\\1"), RegexError);
    CHECK_THROWS_AS(Regex::compile("(?=a)"), RegexError);
    CHECK_THROWS_AS(Regex::compile("(?<=a)b"), RegexError);
    CHECK_THROWS_AS(Regex::compile("(ab"), RegexError);
    CHECK_THROWS_AS(Regex::compile("[ab"), RegexError);
    CHECK_THROWS_AS(Regex::compile("*a"), RegexError);
    CHECK_THROWS_AS(Regex::compile("a{5,2}"), RegexError);
    CHECK_THROWS_AS(Regex::compile("a{100000}"), RegexError);
    try {
        Regex::compile("ab)");
        FAIL("expected error");
    } catch (const RegexError& e) {
        CHECK(e.offset() == 2);
    }
}

TEST_CASE("agrees with std::regex on random small patterns") {
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const std::string p = gen_pattern(rng, 3);
        std::string t;
        const int len = static_cast<int>(rng() % 9);
        for (int i = 0; i < len; ++i) t.push_back("abc"[rng() % 3]);
        const bool ours = Regex::compile(p).search(t);
        const bool oracle = std::regex_search(t, std::regex(p, std::regex::ECMAScript));
        CHECK_MESSAGE(ours == oracle, "pattern " << p << " text " << t);
        ++checked;
    }
    CHECK(checked == 3000);
}

TEST_CASE("pathological patterns stay linear") {
    const std::string text(20000, 'a');
    auto start = std::chrono::steady_clock::now();
    CHECK_FALSE(Regex::compile("(a*)*b").search(text));
    CHECK_FALSE(Regex::compile("(a|aa)+$x").search(text));
    CHECK_FALSE(Regex::compile("(a?){30}a{30}b").search(text));
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed < std::chrono::seconds(5));
}

TEST_CASE("deadline raises a timeout") {
    const std::string text(200000, 'a');
    auto re = Regex::compile("(a?){50}b");
    CHECK_THROWS_AS((void)re.search(text, std::chrono::steady_clock::now()), labelforge::dsl::RegexTimeout);
}
