#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecpe/kgfilter.hpp"
#include "ecpe/ops.hpp"
#include "ecpe/params.hpp"

namespace ecpe::net {

using num::ModelParams;
using num::Tape;
using num::Tensor;

struct MhaWeights {
    Tensor Wq, Wk, Wv, Wo;  // all [d_m, d_m]
    int heads = 1;

    static MhaWeights create(ModelParams& params, const std::string& prefix, int d_m, int heads,
                             std::mt19937_64& rng);
    static MhaWeights bind(ModelParams& params, const std::string& prefix, int heads);
};

// Scaled dot-product multi-head self-attention over X [n, d_m]. When
// score_bias is nonempty its matrices ([n, n] each, one per head or one
// shared) are added to the pre-softmax attention scores.
Tensor multi_head_attention(Tape& tape, const Tensor& X, const MhaWeights& w,
                            const std::vector<Tensor>& score_bias = {});

struct FfnWeights {
    Tensor W1, b1, W2, b2;  // [d_m, d_ff], [d_ff], [d_ff, d_m], [d_m]

    static FfnWeights create(ModelParams& params, const std::string& prefix, int d_m, int d_ff,
                             std::mt19937_64& rng);
    static FfnWeights bind(ModelParams& params, const std::string& prefix);
};

struct LayerNormWeights {
    Tensor gain, bias;

    static LayerNormWeights create(ModelParams& params, const std::string& prefix, int dim,
                                   std::mt19937_64& rng);
    static LayerNormWeights bind(ModelParams& params, const std::string& prefix);
};

// Post-norm Transformer encoder layer: attention + residual + layer norm,
// then position-wise FFN + residual + layer norm.
struct TransformerLayer {
    MhaWeights mha;
    LayerNormWeights ln1;
    FfnWeights ffn;
    LayerNormWeights ln2;

    static TransformerLayer create(ModelParams& params, const std::string& prefix, int d_m,
                                   int heads, int d_ff, std::mt19937_64& rng);
    static TransformerLayer bind(ModelParams& params, const std::string& prefix, int heads);

    Tensor apply(Tape& tape, const Tensor& X, const std::vector<Tensor>& score_bias = {}) const;
};

struct PairNetConfig {
    int d_in = 0;     // concatenated [h_c ; h_e] dimension
    int d_m = 400;    // encoder hidden state
    int heads = 4;
    int layers = 2;
    int d_ff = 800;   // 2 * d_m
    int d_l = 50;     // label embedding dim (u vectors)
    int d_r = 50;     // relative-position embedding dim
    int clip = 10;    // relative distances clipped to [-clip, clip]
    int d_p = 100;    // pair projection hidden dim
};

// Candidate-pair scorer: Transformer over per-pair inputs, then ReLU pair
// projection with relative-position embedding and a softmax classifier.
struct PairNet {
    PairNetConfig cfg;
    Tensor W_in, b_in;  // projection to d_m; absent when d_in == d_m
    std::vector<TransformerLayer> layers;
    Tensor pos_table;  // [2*clip + 1, d_r]
    Tensor W_p, b_p, W_hat, b_hat;

    static PairNet create(ModelParams& params, const PairNetConfig& cfg, std::mt19937_64& rng);
    static PairNet bind(ModelParams& params, const PairNetConfig& cfg);

    // Sequence-to-sequence encoding over the document's candidate pairs;
    // returns one encoded vector per candidate, in input order.
    std::vector<Tensor> encode_pairs(Tape& tape, const std::vector<Tensor>& pair_inputs) const;

    // y = softmax(W_hat relu(W_p [[v, u_c, u_e], d_rel] + b_p) + b_hat).
    // zero_position replaces the position embedding row with zeros.
    Tensor score_pair(Tape& tape, const Tensor& v, const Tensor& u_c, const Tensor& u_e,
                      int rel_dist, bool zero_position = false) const;
};

// Candidates whose positive-class probability strictly exceeds 0.5.
std::set<corpus::Pair> decode_pairs(const std::vector<kg::CandidatePair>& candidates,
                                    const std::vector<Tensor>& scores);

}  // namespace ecpe::net
