#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "labelforge/concepts/concepts.hpp"
#include "labelforge/core/error.hpp"
#include "support/support.hpp"

using namespace labelforge;
using namespace labelforge::concepts;
namespace fs = std::filesystem;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

EmbeddingTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t C, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    EmbeddingTable t;
    t.n = n;
    t.C = C;
    t.d = d;
    t.records.resize(n * d);
    t.concepts.resize(C * d);
    for (auto& x : t.records) x = g(rng);
    for (auto& x : t.concepts) x = g(rng);
    for (std::size_t c = 0; c < C; ++c) t.concept_names.push_back("concept " + std::to_string(c));
    for (std::size_t i = 0; i < n; ++i) t.record_ids.push_back("r" + std::to_string(i));
    return t;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) x = g(rng);
    return v;
}

prompt::ChatSettings fast() {
    prompt::ChatSettings s;
    s.api_key = "k";
    s.retry.initial_backoff = std::chrono::milliseconds(1);
    return s;
}

}  // namespace

TEST_CASE("attribute lists become '<attribute> is <value>' concepts") {
    auto r = parse_concepts(R"({"foot type": ["toed, grasping","paddling, swimming"]})", "waterbirds");
    REQUIRE(r.concepts);
    CHECK(r.concepts->concepts ==
          std::vector<std::string>{"foot type is toed, grasping", "foot type is paddling, swimming"});
    CHECK(r.concepts->task == "waterbirds");
}

TEST_CASE("concept parsing accepts fences, nesting, wrappers and plain lists") {
    auto fenced = parse_concepts("Sure:\n```json\n{\"beak\": \"hooked\", \"wing\": {\"shape\": [\"long\"]}}\n```", "t");
    REQUIRE(fenced.concepts);
    CHECK(fenced.concepts->concepts == std::vector<std::string>{"beak is hooked", "wing shape is long"});

    auto wrapped = parse_concepts(R"({"concepts": ["has webbed feet", "lives near water"]})", "t");
    REQUIRE(wrapped.concepts);
    CHECK(wrapped.concepts->concepts.size() == 2);

    auto list = parse_concepts(R"(["a", "b"])", "t");
    REQUIRE(list.concepts);
    CHECK(list.concepts->concepts == std::vector<std::string>{"a", "b"});

    auto prose_wrapped = parse_concepts("Here you go: {\"color\": [\"white\"]} hope it helps", "t");
    REQUIRE(prose_wrapped.concepts);
    CHECK(prose_wrapped.concepts->concepts == std::vector<std::string>{"color is white"});
}

TEST_CASE("invalid JSON is a rejection") {
    auto r = parse_concepts("{\"foot type\": [\"toed\",", "t");
    CHECK_FALSE(r.concepts);
    CHECK_FALSE(r.rejection.empty());
    auto empty = parse_concepts("{}", "t");
    CHECK_FALSE(empty.concepts);
}

TEST_CASE("duplicate concepts are dropped") {
    auto r = parse_concepts(R"({"beak": ["hooked", "hooked", "flat"]})", "t");
    REQUIRE(r.concepts);
    CHECK(r.concepts->concepts == std::vector<std::string>{"beak is hooked", "beak is flat"});
    CHECK(r.duplicates_dropped == 1);
    std::vector<std::string> v = {"a", "b", "a", "a", "c"};
    CHECK(deduplicate(v) == 2);
    CHECK(v == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("elicitation persists the raw reply before parsing") {
    lf_test::TempDir dir;
    prompt::MockTransport good({prompt::HttpResponse{
        200, prompt::chat_completion_body(R"({"foot type": ["toed, grasping","paddling, swimming"]})"), ""}});
    auto r = elicit_concepts(good, fast(), "list concepts", "waterbirds", dir.path());
    REQUIRE(r.concepts);
    CHECK(fs::exists(dir / "raw/concepts.json"));
    auto saved = load_concept_set(dir / "concepts.json");
    CHECK(saved == *r.concepts);

    lf_test::TempDir dir2;
    prompt::MockTransport bad({prompt::HttpResponse{200, prompt::chat_completion_body("not json at all"), ""}});
    auto b = elicit_concepts(bad, fast(), "list concepts", "waterbirds", dir2.path());
    CHECK_FALSE(b.concepts);
    CHECK(fs::exists(dir2 / "raw/concepts.json"));
    CHECK(lf_test::read_file(dir2 / "raw/concepts.json").find("not json at all") != std::string::npos);
    CHECK_FALSE(fs::exists(dir2 / "concepts.json"));
}

TEST_CASE("concept set validation and round trip") {
    lf_test::TempDir dir;
    ConceptSet cs{"t", {"a", "b"}, {"b"}};
    save_concept_set(cs, dir / "c.json");
    CHECK(load_concept_set(dir / "c.json") == cs);
    CHECK(cs.features() == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(validate(ConceptSet{"t", {"a", "a"}, {}}), ValidationError);
    CHECK_THROWS_AS(validate(ConceptSet{"t", {"a"}, {"z"}}), ValidationError);
}

TEST_CASE("score examples: parallel, orthogonal, zero record") {
    EmbeddingTable t;
    t.n = 3;
    t.C = 2;
    t.d = 3;
    t.records = {2, 0, 0, 0, 5, 0, 0, 0, 0};
    t.concepts = {1, 0, 0, 0, 0, 1};
    t.concept_names = {"x", "z"};
    t.record_ids = {"a", "b", "c"};
    auto s = scores_from_embeddings(t);
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(0.5));
    CHECK(s[2] == doctest::Approx(0.5));
    CHECK(s[3] == doctest::Approx(0.5));
    CHECK(s[4] == 0.5);
    CHECK(s[5] == 0.5);
    std::vector<std::size_t> cols = {1};
    auto sub = scores_from_embeddings(t, cols);
    REQUIRE(sub.size() == 3);
    CHECK(sub[0] == doctest::Approx(0.5));
}

TEST_CASE("scores match a naive cosine oracle within 1e-12 and stay in [0, 1]") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = random_table(rng, 20, 8, 1 + rng() % 40);
        auto s = scores_from_embeddings(t);
        for (std::size_t i = 0; i < t.n; ++i)
            for (std::size_t c = 0; c < t.C; ++c) {
                double cos = dot(t.record(i), t.concept_row(c)) / (norm(t.record(i)) * norm(t.concept_row(c)));
                double got = s[i * t.C + c];
                REQUIRE(std::abs(got - (cos + 1) / 2) <= 1e-12);
                REQUIRE(got >= 0.0);
                REQUIRE(got <= 1.0);
            }
    }
}

TEST_CASE("rejection examples") {
    std::vector<double> s = {1, 2, 2};
    auto dirs = orthonormalize({s});
    std::vector<double> v = s;
    subtract_directions(v, dirs);
    for (double x : v) CHECK(std::abs(x) < 1e-12);

    std::vector<double> w = {2, -1, 0};
    auto before = w;
    subtract_directions(w, dirs);
    for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(before[i]));

    CHECK_THROWS_AS(orthonormalize({{0, 0, 0}}), ValidationError);
    auto dep = orthonormalize({{1, 0, 0}, {2, 0, 0}, {0, 1, 0}});
    CHECK(dep.size() == 2);
}

TEST_CASE("rejection on 1000 random vectors: residual, norm, idempotence, order") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 3 + rng() % 62;
        auto a = random_vec(rng, d), b = random_vec(rng, d);
        auto dirs = orthonormalize({a, b});
        REQUIRE(dirs.size() == 2);
        REQUIRE(std::abs(dot(dirs[0], dirs[1])) < 1e-12);
        auto v = random_vec(rng, d);
        auto once = v;
        subtract_directions(once, dirs);
        REQUIRE(std::abs(dot(once, a)) < 1e-10);
        REQUIRE(std::abs(dot(once, b)) < 1e-10);
        REQUIRE(norm(once) <= norm(v) + 1e-12);
        auto twice = once;
        subtract_directions(twice, dirs);
        for (std::size_t i = 0; i < d; ++i) REQUIRE(std::abs(twice[i] - once[i]) <= 1e-10);
        auto swapped = v;
        subtract_directions(swapped, orthonormalize({b, a}));
        for (std::size_t i = 0; i < d; ++i) REQUIRE(std::abs(swapped[i] - once[i]) <= 1e-10);
    }
}

TEST_CASE("table rejection drops spurious components and score datasets skip spurious concepts") {
    std::mt19937_64 rng(21);
    auto t = random_table(rng, 30, 4, 16);
    t.spurious = {"concept 1", "concept 3"};
    t.gold.assign(30, std::nullopt);
    t.gold[0] = 1;
    t.groups.assign(30, std::string("g"));
    auto r = reject_spurious(t);
    for (std::size_t i = 0; i < t.n; ++i) {
        REQUIRE(std::abs(dot(r.record(i), t.concept_row(1))) < 1e-10);
        REQUIRE(std::abs(dot(r.record(i), t.concept_row(3))) < 1e-10);
        REQUIRE(norm(r.record(i)) <= norm(t.record(i)) + 1e-12);
    }
    auto again = reject_spurious(r);
    for (std::size_t k = 0; k < r.records.size(); ++k) REQUIRE(std::abs(again.records[k] - r.records[k]) <= 1e-10);

    ConceptSet cs;
    auto recs = score_records(r, &cs, "birds");
    CHECK(cs.concepts == std::vector<std::string>{"concept 0", "concept 2"});
    REQUIRE(recs.size() == 30);
    CHECK(recs[0].scores().values.size() == 2);
    CHECK(recs[0].gold == 1);
    CHECK(recs[0].group == "g");
    CHECK(recs[3].id == "r3");
}

TEST_CASE("embedding files round trip") {
    lf_test::TempDir dir;
    std::mt19937_64 rng(5);
    auto t = random_table(rng, 7, 3, 5);
    t.spurious = {"concept 2"};
    t.gold = {0, 1, std::nullopt, 0, 1, 1, 0};
    save_embeddings(t, dir / "emb");
    CHECK(fs::exists(dir / "emb.json"));
    CHECK(fs::file_size(dir / "emb.bin") == (7 + 3) * 5 * sizeof(double));
    auto back = load_embeddings(dir / "emb.json");
    CHECK(back.records == t.records);
    CHECK(back.concepts == t.concepts);
    CHECK(back.concept_names == t.concept_names);
    CHECK(back.gold == t.gold);
    CHECK(back.spurious == t.spurious);

    fs::resize_file(dir / "emb.bin", 8);
    CHECK_THROWS(load_embeddings(dir / "emb.json"));
}
