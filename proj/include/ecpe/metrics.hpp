#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ecpe/trainer.hpp"

namespace ecpe::eval {

using num::ModelParams;

struct MetricTriple {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    long correct = 0, predicted = 0, annotated = 0;

    // Ratios from counts; zero denominators yield zero by convention.
    static MetricTriple from_counts(long correct, long predicted, long annotated);
};

using ClauseSets = std::map<std::string, std::set<int>>;
using PairSets = std::map<std::string, std::set<corpus::Pair>>;

// Micro-averaged exact-match scores: counts are summed corpus-wide before
// any ratio is taken. A predicted doc_id absent from gold is an error;
// gold documents without predictions count as empty predictions.
MetricTriple score_pairs(const PairSets& predicted, const PairSets& gold);
MetricTriple score_clauses(const ClauseSets& predicted, const ClauseSets& gold);

struct TaskMetrics {
    MetricTriple ee, ce, ecpe;
};

struct EvalReport {
    int schema = 1;
    std::string subset = "full";
    std::vector<TaskMetrics> folds;
    TaskMetrics mean;  // arithmetic mean of fold ratios; counts summed

    std::string to_json() const;
};

TaskMetrics mean_of(const std::vector<TaskMetrics>& folds);

// Forward every document (eval mode) and score subtask heads + decoded pairs.
TaskMetrics evaluate(ModelParams& params, const train::TrainConfig& cfg,
                     const corpus::Vocabulary& vocab, const std::vector<corpus::Document>& docs,
                     const kg::TripleStore& store, const corpus::SentimentLexicon& lex);

// n-fold cross-validation; trains on the other folds, scores the held-out
// one. repeats > 1 averages over reseeded repetitions per fold.
EvalReport cross_validate(const std::vector<corpus::Document>& docs,
                          const corpus::SentimentLexicon& lex, const kg::TripleStore& store,
                          const train::TrainConfig& cfg, int n_folds = 10, int repeats = 1);

// Scores only the multi-pair / distant-pair documents; subset tag "imbalance".
EvalReport eval_imbalanced(ModelParams& params, const train::TrainConfig& cfg,
                           const corpus::Vocabulary& vocab,
                           const std::vector<corpus::Document>& docs,
                           const kg::TripleStore& store, const corpus::SentimentLexicon& lex);

}  // namespace ecpe::eval
