#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/distill/export.hpp"
#include "labelforge/distill/mlp.hpp"
#include "support/support.hpp"

using namespace labelforge;
using namespace labelforge::distill;
namespace fs = std::filesystem;

namespace {

std::vector<double> one_hot(int k, int K) {
    std::vector<double> v(static_cast<std::size_t>(K), 0.0);
    v[static_cast<std::size_t>(k)] = 1.0;
    return v;
}

struct Dense {
    std::vector<SparseRow> x;
    std::vector<int> y;
    std::vector<std::vector<double>> t;
};

Dense blobs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.4);
    Dense d;
    for (std::size_t i = 0; i < n; ++i) {
        int y = static_cast<int>(i % 2);
        double cx = y ? 1.5 : -1.5;
        d.x.push_back(dense_row({cx + g(rng), -cx + g(rng), g(rng)}));
        d.y.push_back(y);
        d.t.push_back(one_hot(y, 2));
    }
    return d;
}

Dense xor_data(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.1);
    Dense d;
    const double pts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (int rep = 0; rep < 100; ++rep)
        for (int p = 0; p < 4; ++p) {
            int y = (pts[p][0] > 0.5) != (pts[p][1] > 0.5);
            d.x.push_back(dense_row({pts[p][0] + g(rng), pts[p][1] + g(rng)}));
            d.y.push_back(y);
            d.t.push_back(one_hot(y, 2));
        }
    return d;
}

Record text_rec(std::string id, std::string text) { return Record{std::move(id), std::move(text), {}, {}}; }

}  // namespace

TEST_CASE("tokenizer and hashing") {
    FeatureSpec spec;
    CHECK(tokenize("Don't STOP, caf\xC3\xA9-2!", spec) == std::vector<std::string>{"don't", "stop", "caf\xC3\xA9", "2"});
    spec.lowercase = false;
    spec.token_pattern = "whitespace";
    CHECK(tokenize("  A b,c ", spec) == std::vector<std::string>{"A", "b,c"});
    CHECK(fnv1a("a", 0) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a", 1) != fnv1a("a", 0));
}

TEST_CASE("hashed features are sorted, bounded and unit norm") {
    FeatureSpec spec;
    spec.dims = 64;
    auto row = featurize(text_rec("a", "the cat the dog the end zebra"), spec);
    REQUIRE_FALSE(row.index.empty());
    double sq = 0;
    for (std::size_t k = 0; k < row.index.size(); ++k) {
        CHECK(row.index[k] < 64);
        if (k) CHECK(row.index[k - 1] < row.index[k]);
        sq += row.value[k] * row.value[k];
    }
    CHECK(sq == doctest::Approx(1.0));
    CHECK(featurize(text_rec("b", "   "), spec).index.empty());

    auto scores = FeatureSpec::for_modality(Modality::Scores, 3);
    CHECK(scores.mode == FeatureMode::RawScores);
    CHECK(scores.dims == 3);
    auto r = featurize(Record{"s", ScoreVector{{0.1, 0.0, 0.9}}, {}, {}}, scores);
    CHECK(r.value.size() == 3);
    CHECK(FeatureSpec::from_json(spec.to_json()) == spec);
    FeatureSpec bad;
    bad.dims = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("export drops uncovered rows and round trips") {
    lf_test::TempDir dir;
    ClassSpace classes({"spam", "ham"});
    std::vector<Record> recs;
    std::vector<PseudoLabel> pls;
    for (int i = 0; i < 10; ++i) {
        recs.push_back(text_rec("r" + std::to_string(i), "text " + std::to_string(i)));
        bool covered = i != 3 && i != 7;
        pls.push_back(make_pseudolabel(recs.back().id, {i % 2 ? 0.2 : 0.7, i % 2 ? 0.8 : 0.3}, covered));
    }
    auto rep = export_training_set(recs, pls, classes, {}, dir / "train.jsonl");
    CHECK(rep.exported == 8);
    CHECK(rep.dropped_uncovered == 2);
    auto set = load_training_set(dir / "train.jsonl", 2);
    REQUIRE(set.rows.size() == 8);
    CHECK_FALSE(set.probabilistic);
    std::size_t k = 0;
    for (int i = 0; i < 10; ++i) {
        if (i == 3 || i == 7) continue;
        CHECK(set.rows[k].record.id == recs[static_cast<std::size_t>(i)].id);
        CHECK(set.rows[k].label == pls[static_cast<std::size_t>(i)].hard);
        CHECK(set.rows[k].target == one_hot(pls[static_cast<std::size_t>(i)].hard, 2));
        ++k;
    }

    ExportOptions prob;
    prob.use_probabilistic = true;
    export_training_set(recs, pls, classes, prob, dir / "soft.jsonl");
    auto soft = load_training_set(dir / "soft.jsonl", 2);
    CHECK(soft.probabilistic);
    for (const auto& r : soft.rows) CHECK(std::accumulate(r.target.begin(), r.target.end(), 0.0) == doctest::Approx(1.0));
    CHECK(soft.rows[0].target[0] == doctest::Approx(0.7));

    ExportOptions keep;
    keep.drop_uncovered = false;
    CHECK(export_training_set(recs, pls, classes, keep, dir / "all.jsonl").exported == 10);
    CHECK_THROWS_AS(load_training_set(dir / "soft.jsonl", 5), DataError);
    CHECK_THROWS_AS(load_training_set(dir / "train.jsonl", 1), DataError);

    pls[2].record_id = "other";
    CHECK_THROWS(export_training_set(recs, pls, classes, {}, dir / "bad.jsonl"));
}

TEST_CASE("initial loss is close to ln K") {
    std::mt19937_64 rng(2);
    std::vector<SparseRow> xs;
    std::vector<std::vector<double>> ts;
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        xs.push_back(dense_row({g(rng), g(rng), g(rng), g(rng)}));
        ts.push_back(one_hot(i % 3, 3));
    }
    TrainConfig cfg;
    cfg.epochs = 1;
    auto res = train_mlp(xs, ts, {}, {}, 4, 3, cfg);
    CHECK(std::abs(res.initial_loss - std::log(3.0)) <= 0.1);
    CHECK(std::abs(res.history.at(0).train_loss - std::log(3.0)) <= 0.1);
}

TEST_CASE("gradient check on a fresh model") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Mlp model(20, 3, 11);
    CHECK(model.params().size() == model.b3() + 3);
    std::vector<SparseRow> xs;
    std::vector<std::vector<double>> ts;
    for (int i = 0; i < 16; ++i) {
        std::vector<double> v(20);
        for (auto& x : v) x = g(rng);
        xs.push_back(dense_row(v));
        ts.push_back(i % 4 == 0 ? std::vector<double>{0.2, 0.5, 0.3} : one_hot(i % 3, 3));
    }
    double err_small = gradient_check(model, xs, ts, 1e-5, 400);
    CHECK(err_small <= 1e-4);

    // Near initialization both step sizes sit at the rounding floor. Scaling
    // the output layer raises the curvature so truncation error dominates,
    // and then the smaller step must be more accurate.
    Mlp sharp = model;
    for (std::size_t k = sharp.w3(); k < sharp.params().size(); ++k) sharp.params()[k] *= 300.0;
    double sharp_big = gradient_check(sharp, xs, ts, 1e-3, 400);
    double sharp_small = gradient_check(sharp, xs, ts, 1e-5, 400);
    CHECK(sharp_small < sharp_big);
    CHECK(sharp_small <= 1e-4);

    // Sparse hashed inputs exercise the input-major first layer.
    FeatureSpec spec;
    spec.dims = 128;
    Mlp sparse(128, 2, 5);
    std::vector<SparseRow> sx = {featurize(text_rec("a", "free prize click now"), spec),
                                 featurize(text_rec("b", "lovely song"), spec)};
    std::vector<std::vector<double>> st = {one_hot(0, 2), one_hot(1, 2)};
    CHECK(gradient_check(sparse, sx, st, 1e-5, 300) <= 1e-4);
}

TEST_CASE("zero-input batch has finite gradients") {
    Mlp model(8, 2, 1);
    std::vector<SparseRow> xs(4, dense_row(std::vector<double>(8, 0.0)));
    std::vector<SparseRow> empty(4);
    std::vector<std::vector<double>> ts(4, one_hot(1, 2));
    for (auto* batch : {&xs, &empty}) {
        std::vector<double> grad;
        double loss = model.loss_and_gradient(*batch, ts, &grad);
        CHECK(std::isfinite(loss));
        REQUIRE(grad.size() == model.params().size());
        for (double gval : grad) REQUIRE(std::isfinite(gval));
    }
}

TEST_CASE("separable blobs reach 0.95 validation accuracy within 50 epochs") {
    auto train = blobs(500, 1), val = blobs(200, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 4;
    auto res = train_mlp(train.x, train.t, val.x, val.y, 3, 2, cfg);
    REQUIRE(res.history.size() == 50);
    bool reached = false;
    for (const auto& e : res.history) reached |= e.validation_accuracy.value_or(0) >= 0.95;
    CHECK(reached);
    CHECK(accuracy(res.model, val.x, val.y) >= 0.95);
}

TEST_CASE("XOR is learned") {
    auto d = xor_data(9);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 1e-2;
    cfg.seed = 1;
    auto res = train_mlp(d.x, d.t, {}, {}, 2, 2, cfg);
    CHECK(accuracy(res.model, d.x, d.y) >= 0.95);
}

TEST_CASE("same seed gives bitwise-identical weights") {
    auto d = blobs(200, 3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    auto a = train_mlp(d.x, d.t, {}, {}, 3, 2, cfg);
    auto b = train_mlp(d.x, d.t, {}, {}, 3, 2, cfg);
    CHECK(a.model.params() == b.model.params());
    cfg.seed = 78;
    auto c = train_mlp(d.x, d.t, {}, {}, 3, 2, cfg);
    CHECK(a.model.params() != c.model.params());
}

TEST_CASE("hard labels and one-hot posteriors train identically") {
    lf_test::TempDir dir;
    ClassSpace classes({"spam", "ham"});
    std::mt19937_64 rng(6);
    const char* words[] = {"free", "click", "song", "love", "channel", "great", "win", "video"};
    std::vector<Record> recs;
    std::vector<PseudoLabel> pls;
    for (int i = 0; i < 120; ++i) {
        std::string text;
        for (int w = 0; w < 5; ++w) text += std::string(words[rng() % 8]) + " ";
        recs.push_back(text_rec("r" + std::to_string(i), text));
        int y = text.find("free") != std::string::npos ? 0 : 1;
        pls.push_back(make_pseudolabel(recs.back().id, one_hot(y, 2), true));
    }
    ExportOptions soft;
    soft.use_probabilistic = true;
    export_training_set(recs, pls, classes, {}, dir / "hard.jsonl");
    export_training_set(recs, pls, classes, soft, dir / "soft.jsonl");
    auto hard_set = load_training_set(dir / "hard.jsonl", 2), soft_set = load_training_set(dir / "soft.jsonl", 2);
    FeatureSpec spec;
    auto run = [&](const TrainingSet& s) {
        std::vector<SparseRow> xs;
        std::vector<std::vector<double>> ts;
        for (const auto& r : s.rows) {
            xs.push_back(featurize(r.record, spec));
            ts.push_back(r.target);
        }
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.seed = 3;
        return train_mlp(xs, ts, {}, {}, spec.dims, 2, cfg);
    };
    auto a = run(hard_set), b = run(soft_set);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.model.params() == b.model.params());
}

TEST_CASE("a single observed class gives a constant predictor") {
    std::vector<SparseRow> xs = {dense_row({1, 0}), dense_row({0, 1}), dense_row({1, 1})};
    std::vector<std::vector<double>> ts(3, one_hot(2, 3));
    TrainConfig cfg;
    cfg.epochs = 3;
    auto res = train_mlp(xs, ts, xs, {2, 2, 2}, 2, 3, cfg);
    CHECK(res.constant_baseline);
    for (const auto& x : xs) CHECK(res.model.predict(x) == 2);
}

TEST_CASE("training validates targets") {
    std::vector<SparseRow> xs = {dense_row({1, 0})};
    CHECK_THROWS(train_mlp(xs, {{0.3, 0.3}}, {}, {}, 2, 2, TrainConfig{}));
    CHECK_THROWS(train_mlp(xs, {{0.5, 0.5}, {1, 0}}, {}, {}, 2, 2, TrainConfig{}));
}

TEST_CASE("models and metrics serialize") {
    lf_test::TempDir dir;
    auto d = blobs(100, 8);
    TrainConfig cfg;
    cfg.epochs = 3;
    auto res = train_mlp(d.x, d.t, d.x, d.y, 3, 2, cfg);
    SavedModel m{res.model, FeatureSpec::for_modality(Modality::Scores, 3), {"a", "b"}};
    save_model(m, dir / "model.json");
    auto back = load_model(dir / "model.json");
    CHECK(back.model.params() == m.model.params());
    CHECK(back.features == m.features);
    CHECK(back.class_names == m.class_names);
    auto j = nlohmann::json::parse(lf_test::read_file(dir / "model.json"));
    CHECK(j.contains("layers"));
    for (const auto& x : d.x) REQUIRE(back.model.predict_proba(x) == res.model.predict_proba(x));

    save_metrics_csv(res.history, dir / "metrics.csv");
    auto csv = lf_test::read_file(dir / "metrics.csv");
    CHECK(csv.rfind("epoch,train_loss,train_accuracy,validation_accuracy\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
