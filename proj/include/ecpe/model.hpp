#pragma once

#include <random>
#include <string>
#include <vector>

#include "ecpe/corpus.hpp"
#include "ecpe/encoder.hpp"
#include "ecpe/kgfilter.hpp"
#include "ecpe/paim.hpp"
#include "ecpe/pairnet.hpp"

namespace ecpe::model {

using num::ModelParams;
using num::Tape;
using num::Tensor;

struct Ablations {
    bool no_kg = false;     // window-only candidate pairs
    bool no_inter = false;  // single round, zero label feedback
    bool no_pos = false;    // zero relative-position embedding in the scorer
    bool no_paim = false;   // force the gru variant
    bool no_lex = false;    // skip lexicon augmentation
    bool no_aux = false;    // drop the emotion/cause auxiliary losses
};

enum class Variant { gru, paim };

Variant parse_variant(const std::string& name);  // throws ConfigError
std::string variant_name(Variant v);

struct ModelConfig {
    Variant variant = Variant::gru;
    int d_w = 20;   // word embedding dim
    int d_h = 13;   // word/task GRU hidden dim (clause repr is 2 * d_h)
    int d_l = 8;    // label embedding dim
    int rounds = 2; // interaction rounds
    int window = 3; // candidate window W
    int max_hops = 3;

    int paim_layers = 2;
    int paim_heads = 2;
    int paim_window = 3;
    int paim_m = 1;

    int pn_layers = 1;
    int pn_heads = 2;
    int pn_d_m = 32;
    int pn_d_ff = 64;
    int pn_d_r = 10;
    int pn_clip = 10;
    int pn_d_p = 24;

    double dropout_p = 0.5;
    Ablations ablate;

    Variant effective_variant() const { return ablate.no_paim ? Variant::gru : variant; }
    int clause_dim() const { return 2 * d_h; }
    int pair_input_dim() const;
    void validate() const;  // throws ConfigError
};

// Per-document forward products: per-clause subtask distributions and the
// scored candidate pairs.
struct DocForward {
    std::vector<kg::CandidatePair> candidates;
    std::vector<Tensor> pair_scores;  // 2-class rows, aligned with candidates
    std::vector<Tensor> y_e, y_c;     // per-clause 2-class rows
    std::set<corpus::Pair> decoded() const;
};

struct Model {
    ModelConfig cfg;
    Tensor embeddings;  // [V, d_w]

    // gru variant
    enc::EncoderStack enc;

    // paim variant: shared word encoder, twin position-aware stacks,
    // per-task heads and label embedding tables
    enc::BiGru word;
    enc::ClauseAttention attn;
    net::PaimStack paim_e, paim_c;
    Tensor W_e, b_e, W_c, b_c;
    Tensor E_e, E_c;

    net::PairNet pairnet;

    static Model create(ModelParams& params, const ModelConfig& cfg,
                        const corpus::Vocabulary& vocab, std::mt19937_64& rng);
    static Model bind(ModelParams& params, const ModelConfig& cfg, int vocab_size);

    DocForward forward(Tape& tape, const corpus::Document& doc, const corpus::Vocabulary& vocab,
                       const kg::TripleStore& store, const corpus::SentimentLexicon& lex,
                       bool train, std::mt19937_64& rng) const;
};

}  // namespace ecpe::model
