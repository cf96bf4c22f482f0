#include "ecpe/metrics.hpp"

#include <algorithm>

#include "json.hpp"

#include "ecpe/error.hpp"

namespace ecpe::eval {

MetricTriple MetricTriple::from_counts(long correct, long predicted, long annotated) {
    if (correct < 0 || predicted < 0 || annotated < 0)
        throw ContractError("metric counts must be non-negative");
    if (correct > std::min(predicted, annotated))
        throw ContractError("correct count exceeds predicted or annotated");
    MetricTriple t;
    t.correct = correct;
    t.predicted = predicted;
    t.annotated = annotated;
    t.precision = predicted > 0 ? static_cast<double>(correct) / predicted : 0.0;
    t.recall = annotated > 0 ? static_cast<double>(correct) / annotated : 0.0;
    t.f1 = t.precision + t.recall > 0.0
               ? 2.0 * t.precision * t.recall / (t.precision + t.recall)
               : 0.0;
    return t;
}

namespace {

template <typename Sets>
MetricTriple score_sets(const Sets& predicted, const Sets& gold) {
    long correct = 0, n_pred = 0, n_gold = 0;
    for (const auto& [doc_id, pred] : predicted) {
        auto it = gold.find(doc_id);
        if (it == gold.end())
            throw ContractError("predictions for unknown document '" + doc_id + "'");
        n_pred += static_cast<long>(pred.size());
        for (const auto& item : pred) correct += it->second.count(item) ? 1 : 0;
    }
    for (const auto& [doc_id, g] : gold) n_gold += static_cast<long>(g.size());
    return MetricTriple::from_counts(correct, n_pred, n_gold);
}

}  // namespace

MetricTriple score_pairs(const PairSets& predicted, const PairSets& gold) {
    return score_sets(predicted, gold);
}

MetricTriple score_clauses(const ClauseSets& predicted, const ClauseSets& gold) {
    return score_sets(predicted, gold);
}

TaskMetrics mean_of(const std::vector<TaskMetrics>& folds) {
    TaskMetrics m;
    if (folds.empty()) return m;
    auto acc = [&](MetricTriple TaskMetrics::* task) {
        MetricTriple out;
        for (const auto& f : folds) {
            const MetricTriple& t = f.*task;
            out.precision += t.precision;
            out.recall += t.recall;
            out.f1 += t.f1;
            out.correct += t.correct;
            out.predicted += t.predicted;
            out.annotated += t.annotated;
        }
        out.precision /= folds.size();
        out.recall /= folds.size();
        out.f1 /= folds.size();
        return out;
    };
    m.ee = acc(&TaskMetrics::ee);
    m.ce = acc(&TaskMetrics::ce);
    m.ecpe = acc(&TaskMetrics::ecpe);
    return m;
}

TaskMetrics evaluate(ModelParams& params, const train::TrainConfig& cfg,
                     const corpus::Vocabulary& vocab, const std::vector<corpus::Document>& docs,
                     const kg::TripleStore& store, const corpus::SentimentLexicon& lex) {
    model::Model m = model::Model::bind(params, cfg.model, vocab.size());
    std::mt19937_64 rng(cfg.seed);
    ClauseSets pred_e, pred_c, gold_e, gold_c;
    PairSets pred_p, gold_p;
    for (const auto& doc : docs) {
        num::Tape tape;
        auto fwd = m.forward(tape, doc, vocab, store, lex, false, rng);
        auto& pe = pred_e[doc.doc_id];
        auto& pc = pred_c[doc.doc_id];
        for (std::size_t i = 0; i < fwd.y_e.size(); ++i) {
            if (enc::predicted_class(fwd.y_e[i]) == 1) pe.insert(static_cast<int>(i));
            if (enc::predicted_class(fwd.y_c[i]) == 1) pc.insert(static_cast<int>(i));
        }
        pred_p[doc.doc_id] = fwd.decoded();
        gold_e[doc.doc_id] = doc.emotion_ids;
        gold_c[doc.doc_id] = doc.cause_ids;
        gold_p[doc.doc_id] = doc.gold_pairs;
    }
    TaskMetrics out;
    out.ee = score_clauses(pred_e, gold_e);
    out.ce = score_clauses(pred_c, gold_c);
    out.ecpe = score_pairs(pred_p, gold_p);
    return out;
}

EvalReport cross_validate(const std::vector<corpus::Document>& docs,
                          const corpus::SentimentLexicon& lex, const kg::TripleStore& store,
                          const train::TrainConfig& cfg, int n_folds, int repeats) {
    if (static_cast<int>(docs.size()) < n_folds)
        throw ConfigError("cross_validate: need at least " + std::to_string(n_folds) + " docs");
    if (repeats < 1) throw ConfigError("cross_validate: repeats must be >= 1");
    auto split = corpus::make_folds(docs, cfg.seed, n_folds);
    std::map<std::string, const corpus::Document*> by_id;
    for (const auto& d : docs) by_id[d.doc_id] = &d;

    EvalReport report;
    for (const auto& held : split.folds) {
        std::set<std::string> held_ids(held.begin(), held.end());
        std::vector<corpus::Document> train_docs, eval_docs;
        for (const auto& d : docs)
            (held_ids.count(d.doc_id) ? eval_docs : train_docs).push_back(d);
        for (const auto& d : train_docs)
            if (held_ids.count(d.doc_id)) throw ContractError("fold leak: " + d.doc_id);

        std::vector<TaskMetrics> reps;
        for (int r = 0; r < repeats; ++r) {
            train::TrainConfig run = cfg;
            run.seed = cfg.seed + static_cast<unsigned>(r);
            auto res = train::train(train_docs, lex, store, run);
            reps.push_back(evaluate(res.params, run, res.vocab, eval_docs, store, lex));
        }
        report.folds.push_back(repeats == 1 ? reps[0] : mean_of(reps));
    }
    report.mean = mean_of(report.folds);
    return report;
}

EvalReport eval_imbalanced(ModelParams& params, const train::TrainConfig& cfg,
                           const corpus::Vocabulary& vocab,
                           const std::vector<corpus::Document>& docs,
                           const kg::TripleStore& store, const corpus::SentimentLexicon& lex) {
    EvalReport report;
    report.subset = "imbalance";
    auto subset = kg::build_imbalanced_testset(docs);
    if (subset.empty()) {
        report.mean = TaskMetrics{};
        return report;
    }
    report.folds.push_back(evaluate(params, cfg, vocab, subset, store, lex));
    report.mean = report.folds[0];
    return report;
}

namespace {

nlohmann::json triple_json(const MetricTriple& t) {
    return {{"precision", t.precision}, {"recall", t.recall},       {"f1", t.f1},
            {"correct", t.correct},     {"predicted", t.predicted}, {"annotated", t.annotated}};
}

nlohmann::json task_json(const TaskMetrics& t) {
    return {{"ee", triple_json(t.ee)}, {"ce", triple_json(t.ce)}, {"ecpe", triple_json(t.ecpe)}};
}

}  // namespace

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["subset"] = subset;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : folds) j["folds"].push_back(task_json(f));
    j["mean"] = task_json(mean);
    return j.dump(2);
}

}  // namespace ecpe::eval
