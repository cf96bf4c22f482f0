#pragma once

#include <string>
#include <vector>

#include "ecpe/model.hpp"

namespace ecpe::train {

using num::ModelParams;
using num::Tape;
using num::Tensor;

struct TrainConfig {
    model::ModelConfig model;
    double alpha = 1.0;    // pair loss weight
    double beta = 1.0;     // emotion loss weight
    double gamma = 1.0;    // cause loss weight
    double lambda = 1e-5;  // L2 coefficient
    double lr = 1e-3;      // 2e-5 matches the pretrained-encoder regime
    int batch_size = 4;    // documents per optimizer step
    int epochs = 20;
    unsigned seed = 1;

    double beta_eff() const { return model.ablate.no_aux ? 0.0 : beta; }
    double gamma_eff() const { return model.ablate.no_aux ? 0.0 : gamma; }
    void validate() const;  // throws ConfigError
};

// Summed binary cross-entropy over 2-class probability rows against 0/1
// gold labels, with probabilities clamped to [1e-12, 1 - 1e-12].
Tensor bce_loss(Tape& tape, const std::vector<Tensor>& pred_rows, const std::vector<int>& gold);

// alpha L_pair + beta L_emo + gamma L_cau + lambda * l2_penalty.
Tensor joint_loss(Tape& tape, const Tensor& l_pair, const Tensor& l_emo, const Tensor& l_cau,
                  const ModelParams& params, const TrainConfig& cfg);

struct LossParts {
    Tensor pair, emo, cau;
    int n_pairs = 0;  // candidate count across the batch
};

// Forward + the three cross-entropy losses over a batch of documents.
LossParts batch_loss(Tape& tape, const model::Model& m, const std::vector<corpus::Document>& docs,
                     const corpus::Vocabulary& vocab, const kg::TripleStore& store,
                     const corpus::SentimentLexicon& lex, bool training, std::mt19937_64& rng);

struct EpochLoss {
    double pair = 0.0, emo = 0.0, cau = 0.0, l2 = 0.0, total = 0.0;
};

struct TrainReport {
    std::vector<EpochLoss> epochs;
    double wall_seconds = 0.0;
    unsigned seed = 0;
};

struct TrainResult {
    ModelParams params;
    corpus::Vocabulary vocab;
    TrainReport report;
};

TrainResult train(const std::vector<corpus::Document>& docs, const corpus::SentimentLexicon& lex,
                  const kg::TripleStore& store, const TrainConfig& cfg);

}  // namespace ecpe::train
