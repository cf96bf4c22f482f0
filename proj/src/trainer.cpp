#include "ecpe/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ecpe/error.hpp"
#include "ecpe/ops.hpp"

namespace ecpe::train {

using namespace num;

void TrainConfig::validate() const {
    model.validate();
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw ConfigError("loss weights must be >= 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

Tensor bce_loss(Tape& tape, const std::vector<Tensor>& pred_rows, const std::vector<int>& gold) {
    if (pred_rows.size() != gold.size())
        throw ContractError("bce_loss: " + std::to_string(pred_rows.size()) +
                            " predictions vs " + std::to_string(gold.size()) + " labels");
    constexpr double kEps = 1e-12;
    static const Tensor kPosMask = Tensor::from({2}, {0.0, 1.0});
    Tensor loss = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < pred_rows.size(); ++i) {
        Tensor p = clamp(tape, sum(tape, mul(tape, pred_rows[i], kPosMask)), kEps, 1.0 - kEps);
        Tensor term = gold[i] == 1
                          ? log(tape, p)
                          : log(tape, add_scalar(tape, scale(tape, p, -1.0), 1.0));
        loss = sub(tape, loss, term);
    }
    return loss;
}

Tensor joint_loss(Tape& tape, const Tensor& l_pair, const Tensor& l_emo, const Tensor& l_cau,
                  const ModelParams& params, const TrainConfig& cfg) {
    Tensor total = scale(tape, l_pair, cfg.alpha);
    total = add(tape, total, scale(tape, l_emo, cfg.beta_eff()));
    total = add(tape, total, scale(tape, l_cau, cfg.gamma_eff()));
    return add(tape, total, scale(tape, l2_penalty(tape, params), cfg.lambda));
}

LossParts batch_loss(Tape& tape, const model::Model& m, const std::vector<corpus::Document>& docs,
                     const corpus::Vocabulary& vocab, const kg::TripleStore& store,
                     const corpus::SentimentLexicon& lex, bool training, std::mt19937_64& rng) {
    LossParts parts;
    parts.pair = Tensor::scalar(0.0);
    parts.emo = Tensor::scalar(0.0);
    parts.cau = Tensor::scalar(0.0);
    for (const auto& doc : docs) {
        auto fwd = m.forward(tape, doc, vocab, store, lex, training, rng);
        std::vector<int> pair_gold;
        for (const auto& cand : fwd.candidates)
            pair_gold.push_back(
                doc.gold_pairs.count({cand.emotion_idx, cand.cause_idx}) ? 1 : 0);
        parts.pair = add(tape, parts.pair, bce_loss(tape, fwd.pair_scores, pair_gold));
        parts.n_pairs += static_cast<int>(fwd.candidates.size());

        const int n = static_cast<int>(doc.clauses.size());
        std::vector<int> emo_gold(n, 0), cau_gold(n, 0);
        for (int i : doc.emotion_ids) emo_gold[i] = 1;
        for (int i : doc.cause_ids) cau_gold[i] = 1;
        parts.emo = add(tape, parts.emo, bce_loss(tape, fwd.y_e, emo_gold));
        parts.cau = add(tape, parts.cau, bce_loss(tape, fwd.y_c, cau_gold));
    }
    return parts;
}

TrainResult train(const std::vector<corpus::Document>& docs, const corpus::SentimentLexicon& lex,
                  const kg::TripleStore& store, const TrainConfig& cfg) {
    cfg.validate();
    if (docs.empty()) throw ConfigError("train: empty corpus");
    const auto start = std::chrono::steady_clock::now();

    TrainResult result;
    result.vocab = corpus::Vocabulary::build(docs);
    std::mt19937_64 rng(cfg.seed);
    model::Model m = model::Model::create(result.params, cfg.model, result.vocab, rng);
    AdamState adam;
    adam.lr = cfg.lr;
    result.report.seed = cfg.seed;

    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLoss ep;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            std::vector<corpus::Document> batch;
            for (std::size_t k = at; k < std::min(at + cfg.batch_size, order.size()); ++k)
                batch.push_back(docs[order[k]]);

            Tape tape;
            auto parts =
                batch_loss(tape, m, batch, result.vocab, store, lex, true, rng);
            Tensor l2 = l2_penalty(tape, result.params);
            Tensor loss = add(
                tape,
                add(tape, scale(tape, parts.pair, cfg.alpha),
                    add(tape, scale(tape, parts.emo, cfg.beta_eff()),
                        scale(tape, parts.cau, cfg.gamma_eff()))),
                scale(tape, l2, cfg.lambda));
            result.params.zero_grad();
            tape.backward(loss);
            clip_grad_norm(result.params, 5.0);
            adam_step(result.params, adam);

            ep.pair += parts.pair.item();
            ep.emo += parts.emo.item();
            ep.cau += parts.cau.item();
            ep.l2 += l2.item();
        }
        ep.total = cfg.alpha * ep.pair + cfg.beta_eff() * ep.emo + cfg.gamma_eff() * ep.cau +
                   cfg.lambda * ep.l2;
        result.report.epochs.push_back(ep);
    }

    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace ecpe::train
