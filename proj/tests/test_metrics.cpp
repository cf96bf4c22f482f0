#include <cmath>
#include <random>

#include "doctest.h"
#include "ecpe/error.hpp"
#include "ecpe/metrics.hpp"

using namespace ecpe;
using namespace ecpe::eval;

namespace {

train::TrainConfig tiny_config() {
    train::TrainConfig cfg;
    cfg.model.d_w = 6;
    cfg.model.d_h = 4;
    cfg.model.d_l = 3;
    cfg.model.pn_layers = 0;
    cfg.model.pn_heads = 1;
    cfg.model.pn_d_m = 16;  // matches 4 * d_h, no projection
    cfg.model.pn_d_ff = 8;
    cfg.model.pn_d_r = 4;
    cfg.model.pn_d_p = 6;
    cfg.model.dropout_p = 0.0;
    cfg.epochs = 1;
    cfg.seed = 5;
    return cfg;
}

kg::TripleStore synth_store() {
    kg::TripleStore store;
    for (const auto& t : corpus::synth_triples()) store.add(t[0], t[1], t[2]);
    return store;
}

}  // namespace

TEST_CASE("counts to ratios, including the worked example") {
    auto t = MetricTriple::from_counts(2, 4, 3);
    CHECK(t.precision == doctest::Approx(0.5));
    CHECK(t.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
    CHECK(t.f1 == doctest::Approx(0.5714).epsilon(1e-4));

    auto empty = MetricTriple::from_counts(0, 0, 5);
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);
    CHECK(MetricTriple::from_counts(0, 3, 0).recall == 0.0);
    CHECK(MetricTriple::from_counts(0, 0, 0).f1 == 0.0);

    CHECK_THROWS_AS(MetricTriple::from_counts(4, 3, 5), ContractError);
    CHECK_THROWS_AS(MetricTriple::from_counts(-1, 3, 5), ContractError);
}

TEST_CASE("random count configurations match the direct formulas") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        long pred = static_cast<long>(rng() % 8);
        long ann = static_cast<long>(rng() % 8);
        long correct = std::min(pred, ann) > 0
                           ? static_cast<long>(rng() % (std::min(pred, ann) + 1))
                           : 0;
        auto t = MetricTriple::from_counts(correct, pred, ann);
        double p = pred ? double(correct) / pred : 0.0;
        double r = ann ? double(correct) / ann : 0.0;
        double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        CHECK(t.precision == doctest::Approx(p).epsilon(1e-12));
        CHECK(t.recall == doctest::Approx(r).epsilon(1e-12));
        CHECK(t.f1 == doctest::Approx(f).epsilon(1e-12));
    }
}

TEST_CASE("pair scoring: identity, empty, unknown doc, micro-averaging") {
    PairSets gold = {{"a", {{0, 1}, {2, 3}}}, {"b", {{1, 1}}}};
    CHECK(score_pairs(gold, gold).f1 == doctest::Approx(1.0));

    PairSets none = {{"a", {}}, {"b", {}}};
    auto t = score_pairs(none, gold);
    CHECK(t.precision == 0.0);
    CHECK(t.recall == 0.0);
    CHECK(t.f1 == 0.0);

    PairSets stranger = {{"zzz", {{0, 0}}}};
    CHECK_THROWS_AS(score_pairs(stranger, gold), ContractError);

    // micro vs macro counterexample: doc a scores 1/1 pred of 10 gold,
    // doc b scores 9/9 of 10; macro mean precision 1.0, micro 10/10 but
    // recall differs: micro 10/20 = 0.5, macro mean (0.1 + 0.9)/2 = 0.5;
    // use precision-side asymmetry instead
    PairSets g2, p2;
    for (int k = 0; k < 10; ++k) g2["a"].insert({k, k});
    g2["b"] = {{0, 0}};
    p2["a"] = {{0, 0}};                       // 1 correct of 1 predicted
    for (int k = 0; k < 9; ++k) p2["b"].insert({k, k + 1});  // 0 correct of 9
    auto micro = score_pairs(p2, g2);
    CHECK(micro.precision == doctest::Approx(0.1));  // 1/10 summed counts
    // mean of per-doc precisions would be (1.0 + 0.0)/2 = 0.5
    CHECK(std::abs(micro.precision - 0.5) > 0.3);
}

TEST_CASE("clause scoring and doc/pair order invariance") {
    ClauseSets gold = {{"a", {1, 4}}, {"b", {0}}};
    ClauseSets pred = {{"b", {0, 2}}, {"a", {4}}};
    auto t = score_clauses(pred, gold);
    CHECK(t.correct == 2);
    CHECK(t.predicted == 3);
    CHECK(t.annotated == 3);

    ClauseSets pred_reordered = {{"a", {4}}, {"b", {2, 0}}};
    auto t2 = score_clauses(pred_reordered, gold);
    CHECK(t2.f1 == t.f1);
}

TEST_CASE("fold mean is the arithmetic mean of fold ratios") {
    TaskMetrics f1, f2;
    f1.ecpe = MetricTriple::from_counts(2, 4, 3);
    f2.ecpe = MetricTriple::from_counts(1, 1, 2);
    auto m = mean_of({f1, f2});
    CHECK(m.ecpe.precision ==
          doctest::Approx((0.5 + 1.0) / 2.0).epsilon(1e-12));
    CHECK(m.ecpe.recall ==
          doctest::Approx((2.0 / 3.0 + 0.5) / 2.0).epsilon(1e-12));
    CHECK(m.ecpe.correct == 3);
}

TEST_CASE("cross validation: deterministic, no fold leak, schema-1 json") {
    auto docs = corpus::synth_corpus(10, 7);
    auto lex = corpus::synth_lexicon();
    auto store = synth_store();
    auto cfg = tiny_config();
    auto a = cross_validate(docs, lex, store, cfg, 5, 1);
    auto b = cross_validate(docs, lex, store, cfg, 5, 1);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.folds.size() == 5);
    CHECK(a.to_json().find("\"schema\": 1") != std::string::npos);
    CHECK(a.to_json().find("\"subset\": \"full\"") != std::string::npos);

    // mean recomputable from the folds
    auto m = mean_of(a.folds);
    CHECK(a.mean.ecpe.f1 == doctest::Approx(m.ecpe.f1).epsilon(1e-12));

    CHECK_THROWS_AS(cross_validate({docs[0]}, lex, store, cfg, 5, 1), ConfigError);
}

TEST_CASE("imbalanced evaluation equals direct evaluation of the subset") {
    auto docs = corpus::synth_corpus(12, 9);
    auto lex = corpus::synth_lexicon();
    auto store = synth_store();
    auto cfg = tiny_config();
    auto res = train::train(docs, lex, store, cfg);

    auto subset = kg::build_imbalanced_testset(docs);
    REQUIRE(!subset.empty());
    auto direct = evaluate(res.params, cfg, res.vocab, subset, store, lex);
    auto report = eval_imbalanced(res.params, cfg, res.vocab, docs, store, lex);
    CHECK(report.subset == "imbalance");
    CHECK(report.mean.ecpe.f1 == doctest::Approx(direct.ecpe.f1).epsilon(1e-12));
    CHECK(report.mean.ee.correct == direct.ee.correct);

    corpus::Document simple;
    simple.doc_id = "s";
    simple.clauses = {{"a"}, {"b"}};
    simple.emotion_ids = {1};
    simple.cause_ids = {0};
    simple.gold_pairs = {{1, 0}};
    auto empty = eval_imbalanced(res.params, cfg, res.vocab, {simple}, store, lex);
    CHECK(empty.mean.ecpe.predicted == 0);
    CHECK(empty.mean.ecpe.annotated == 0);
}
