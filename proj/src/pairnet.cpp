#include "ecpe/pairnet.hpp"

#include <algorithm>
#include <cmath>

#include "ecpe/error.hpp"

namespace ecpe::net {

using namespace num;

namespace {
constexpr double kInitScale = 0.1;

Tensor init_mat(int rows, int cols, std::mt19937_64& rng) {
    return Tensor::uniform({rows, cols}, -kInitScale, kInitScale, rng);
}
}  // namespace

MhaWeights MhaWeights::create(ModelParams& params, const std::string& prefix, int d_m, int heads,
                              std::mt19937_64& rng) {
    if (d_m % heads != 0)
        throw ConfigError("attention: model dim " + std::to_string(d_m) +
                          " not divisible by heads " + std::to_string(heads));
    MhaWeights w;
    w.heads = heads;
    w.Wq = params.add(prefix + ".Wq", init_mat(d_m, d_m, rng));
    w.Wk = params.add(prefix + ".Wk", init_mat(d_m, d_m, rng));
    w.Wv = params.add(prefix + ".Wv", init_mat(d_m, d_m, rng));
    w.Wo = params.add(prefix + ".Wo", init_mat(d_m, d_m, rng));
    return w;
}

MhaWeights MhaWeights::bind(ModelParams& params, const std::string& prefix, int heads) {
    MhaWeights w;
    w.heads = heads;
    w.Wq = params.get(prefix + ".Wq");
    w.Wk = params.get(prefix + ".Wk");
    w.Wv = params.get(prefix + ".Wv");
    w.Wo = params.get(prefix + ".Wo");
    return w;
}

Tensor multi_head_attention(Tape& tape, const Tensor& X, const MhaWeights& w,
                            const std::vector<Tensor>& score_bias) {
    const int d_m = w.Wq.cols();
    if (X.shape().size() != 2 || X.cols() != d_m)
        throw DimensionError("attention: input " + shape_str(X.shape()) + " vs model dim " +
                             std::to_string(d_m));
    if (!score_bias.empty() && score_bias.size() != 1 &&
        static_cast<int>(score_bias.size()) != w.heads)
        throw ContractError("attention: need 1 or `heads` bias matrices");
    const int d_head = d_m / w.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
    Tensor Q = matmul(tape, X, w.Wq);
    Tensor K = matmul(tape, X, w.Wk);
    Tensor V = matmul(tape, X, w.Wv);
    std::vector<Tensor> head_outputs;
    for (int h = 0; h < w.heads; ++h) {
        Tensor Qh = slice_cols(tape, Q, h * d_head, (h + 1) * d_head);
        Tensor Kh = slice_cols(tape, K, h * d_head, (h + 1) * d_head);
        Tensor Vh = slice_cols(tape, V, h * d_head, (h + 1) * d_head);
        Tensor scores = scale(tape, matmul(tape, Qh, transpose(tape, Kh)), inv_sqrt);
        if (!score_bias.empty())
            scores = add(tape, scores, score_bias[score_bias.size() == 1 ? 0 : h]);
        Tensor A = softmax(tape, scores, 1);
        head_outputs.push_back(matmul(tape, A, Vh));
    }
    return matmul(tape, concat_cols(tape, head_outputs), w.Wo);
}

FfnWeights FfnWeights::create(ModelParams& params, const std::string& prefix, int d_m, int d_ff,
                              std::mt19937_64& rng) {
    FfnWeights f;
    f.W1 = params.add(prefix + ".W1", init_mat(d_m, d_ff, rng));
    f.b1 = params.add(prefix + ".b1", Tensor::uniform({d_ff}, -kInitScale, kInitScale, rng));
    f.W2 = params.add(prefix + ".W2", init_mat(d_ff, d_m, rng));
    f.b2 = params.add(prefix + ".b2", Tensor::uniform({d_m}, -kInitScale, kInitScale, rng));
    return f;
}

FfnWeights FfnWeights::bind(ModelParams& params, const std::string& prefix) {
    return FfnWeights{params.get(prefix + ".W1"), params.get(prefix + ".b1"),
                      params.get(prefix + ".W2"), params.get(prefix + ".b2")};
}

LayerNormWeights LayerNormWeights::create(ModelParams& params, const std::string& prefix, int dim,
                                          std::mt19937_64& rng) {
    (void)rng;
    LayerNormWeights ln;
    ln.gain = params.add(prefix + ".gain", Tensor::full({dim}, 1.0));
    ln.bias = params.add(prefix + ".bias", Tensor::zeros({dim}));
    return ln;
}

LayerNormWeights LayerNormWeights::bind(ModelParams& params, const std::string& prefix) {
    return LayerNormWeights{params.get(prefix + ".gain"), params.get(prefix + ".bias")};
}

TransformerLayer TransformerLayer::create(ModelParams& params, const std::string& prefix, int d_m,
                                          int heads, int d_ff, std::mt19937_64& rng) {
    TransformerLayer l;
    l.mha = MhaWeights::create(params, prefix + ".mha", d_m, heads, rng);
    l.ln1 = LayerNormWeights::create(params, prefix + ".ln1", d_m, rng);
    l.ffn = FfnWeights::create(params, prefix + ".ffn", d_m, d_ff, rng);
    l.ln2 = LayerNormWeights::create(params, prefix + ".ln2", d_m, rng);
    return l;
}

TransformerLayer TransformerLayer::bind(ModelParams& params, const std::string& prefix,
                                        int heads) {
    TransformerLayer l;
    l.mha = MhaWeights::bind(params, prefix + ".mha", heads);
    l.ln1 = LayerNormWeights::bind(params, prefix + ".ln1");
    l.ffn = FfnWeights::bind(params, prefix + ".ffn");
    l.ln2 = LayerNormWeights::bind(params, prefix + ".ln2");
    return l;
}

Tensor TransformerLayer::apply(Tape& tape, const Tensor& X,
                               const std::vector<Tensor>& score_bias) const {
    Tensor attn = multi_head_attention(tape, X, mha, score_bias);
    Tensor h = layer_norm(tape, add(tape, X, attn), ln1.gain, ln1.bias);
    Tensor inner = relu(tape, add(tape, matmul(tape, h, ffn.W1), ffn.b1));
    Tensor ff = add(tape, matmul(tape, inner, ffn.W2), ffn.b2);
    return layer_norm(tape, add(tape, h, ff), ln2.gain, ln2.bias);
}

PairNet PairNet::create(ModelParams& params, const PairNetConfig& cfg, std::mt19937_64& rng) {
    PairNet p;
    p.cfg = cfg;
    if (cfg.d_in != cfg.d_m) {
        p.W_in = params.add("pair.proj.W", init_mat(cfg.d_in, cfg.d_m, rng));
        p.b_in = params.add("pair.proj.b", Tensor::uniform({cfg.d_m}, -kInitScale, kInitScale, rng));
    }
    for (int l = 0; l < cfg.layers; ++l)
        p.layers.push_back(TransformerLayer::create(params, "pair.tf" + std::to_string(l),
                                                    cfg.d_m, cfg.heads, cfg.d_ff, rng));
    p.pos_table = params.add("pair.pos.E", init_mat(2 * cfg.clip + 1, cfg.d_r, rng));
    const int score_in = cfg.d_m + 2 * cfg.d_l + cfg.d_r;
    p.W_p = params.add("pair.score.W", init_mat(cfg.d_p, score_in, rng));
    p.b_p = params.add("pair.score.b", Tensor::uniform({cfg.d_p}, -kInitScale, kInitScale, rng));
    p.W_hat = params.add("pair.cls.W", init_mat(2, cfg.d_p, rng));
    p.b_hat = params.add("pair.cls.b", Tensor::zeros({2}));
    return p;
}

PairNet PairNet::bind(ModelParams& params, const PairNetConfig& cfg) {
    PairNet p;
    p.cfg = cfg;
    if (cfg.d_in != cfg.d_m) {
        p.W_in = params.get("pair.proj.W");
        p.b_in = params.get("pair.proj.b");
    }
    for (int l = 0; l < cfg.layers; ++l)
        p.layers.push_back(
            TransformerLayer::bind(params, "pair.tf" + std::to_string(l), cfg.heads));
    p.pos_table = params.get("pair.pos.E");
    p.W_p = params.get("pair.score.W");
    p.b_p = params.get("pair.score.b");
    p.W_hat = params.get("pair.cls.W");
    p.b_hat = params.get("pair.cls.b");
    return p;
}

std::vector<Tensor> PairNet::encode_pairs(Tape& tape,
                                          const std::vector<Tensor>& pair_inputs) const {
    if (pair_inputs.empty()) throw ContractError("encode_pairs: empty pair sequence");
    for (const Tensor& t : pair_inputs)
        if (t.shape() != std::vector<int>{cfg.d_in})
            throw DimensionError("encode_pairs: pair input " + shape_str(t.shape()) +
                                 " does not match d_in " + std::to_string(cfg.d_in));
    Tensor X = stack_rows(tape, pair_inputs);
    if (W_in.valid()) X = add(tape, matmul(tape, X, W_in), b_in);
    for (const auto& layer : layers) X = layer.apply(tape, X);
    std::vector<Tensor> out;
    out.reserve(pair_inputs.size());
    for (int i = 0; i < static_cast<int>(pair_inputs.size()); ++i)
        out.push_back(row(tape, X, i));
    return out;
}

Tensor PairNet::score_pair(Tape& tape, const Tensor& v, const Tensor& u_c, const Tensor& u_e,
                           int rel_dist, bool zero_position) const {
    const int idx = std::clamp(rel_dist, -cfg.clip, cfg.clip) + cfg.clip;
    Tensor d_rel = zero_position ? Tensor::zeros({cfg.d_r}) : row(tape, pos_table, idx);
    Tensor x = concat(tape, {v, u_c, u_e, d_rel});
    Tensor p_hat = relu(tape, add(tape, matvec(tape, W_p, x), b_p));
    return softmax(tape, add(tape, matvec(tape, W_hat, p_hat), b_hat), 0);
}

std::set<corpus::Pair> decode_pairs(const std::vector<kg::CandidatePair>& candidates,
                                    const std::vector<Tensor>& scores) {
    if (candidates.size() != scores.size())
        throw ContractError("decode_pairs: candidate/score length mismatch");
    std::set<corpus::Pair> out;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (scores[i].at(1) > 0.5) out.insert({candidates[i].emotion_idx, candidates[i].cause_idx});
    return out;
}

}  // namespace ecpe::net
