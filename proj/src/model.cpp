#include "ecpe/model.hpp"

#include <algorithm>

#include "ecpe/error.hpp"
#include "ecpe/ops.hpp"

namespace ecpe::model {

using namespace num;

Variant parse_variant(const std::string& name) {
    if (name == "gru") return Variant::gru;
    if (name == "paim") return Variant::paim;
    throw ConfigError("unknown variant '" + name + "' (expected gru or paim)");
}

std::string variant_name(Variant v) { return v == Variant::gru ? "gru" : "paim"; }

int ModelConfig::pair_input_dim() const {
    return effective_variant() == Variant::gru ? 4 * d_h : 2 * (2 * d_h + 2);
}

void ModelConfig::validate() const {
    if (d_w < 1 || d_h < 1 || d_l < 1) throw ConfigError("model dims must be positive");
    if (rounds < 1) throw ConfigError("interaction rounds must be >= 1");
    if (window < 1) throw ConfigError("candidate window must be >= 1");
    if (max_hops < 1) throw ConfigError("max_hops must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout_p must be in [0, 1)");
    if (effective_variant() == Variant::paim) {
        if (paim_layers < 1 || paim_heads < 1 || paim_window < 1 || paim_m < 1)
            throw ConfigError("paim hyperparameters must be >= 1");
        if ((2 * d_h + 2) % paim_heads != 0)
            throw ConfigError("paim: clause dim " + std::to_string(2 * d_h + 2) +
                              " not divisible by heads " + std::to_string(paim_heads));
    }
    if (pn_layers < 0 || pn_heads < 1 || pn_d_m < 1 || pn_d_ff < 1 || pn_d_r < 1 ||
        pn_clip < 1 || pn_d_p < 1)
        throw ConfigError("pair scorer hyperparameters out of range");
    if (pn_d_m % pn_heads != 0)
        throw ConfigError("pair scorer: d_m not divisible by heads");
}

std::set<corpus::Pair> DocForward::decoded() const {
    return net::decode_pairs(candidates, pair_scores);
}

namespace {

net::PairNetConfig pairnet_cfg(const ModelConfig& cfg) {
    net::PairNetConfig pc;
    pc.d_in = cfg.pair_input_dim();
    pc.d_m = cfg.pn_d_m;
    pc.heads = cfg.pn_heads;
    pc.layers = cfg.pn_layers;
    pc.d_ff = cfg.pn_d_ff;
    pc.d_l = cfg.d_l;
    pc.d_r = cfg.pn_d_r;
    pc.clip = cfg.pn_clip;
    pc.d_p = cfg.pn_d_p;
    return pc;
}

net::PaimConfig paim_cfg(const ModelConfig& cfg) {
    net::PaimConfig pc;
    pc.d = 2 * cfg.d_h + 2;
    pc.heads = cfg.paim_heads;
    pc.layers = cfg.paim_layers;
    pc.d_ff = 2 * pc.d;
    pc.window = cfg.paim_window;
    pc.m = cfg.paim_m;
    return pc;
}

constexpr double kInitScale = 0.1;

// Embed one clause's tokens, with train-time dropout on the embeddings.
std::vector<Tensor> embed_clause(Tape& tape, const corpus::Clause& clause,
                                 const corpus::Vocabulary& vocab, const Tensor& embeddings,
                                 double p, bool train, std::mt19937_64& rng) {
    std::vector<int> ids;
    for (const auto& tok : clause) ids.push_back(vocab.id(tok));
    Tensor E = lookup(tape, embeddings, ids);
    E = dropout(tape, E, p, train, rng);
    std::vector<Tensor> out;
    for (std::size_t t = 0; t < ids.size(); ++t) out.push_back(row(tape, E, static_cast<int>(t)));
    return out;
}

std::vector<Tensor> clause_reprs(Tape& tape, const corpus::Document& doc,
                                 const corpus::Vocabulary& vocab, const Tensor& embeddings,
                                 const enc::BiGru& word, const enc::ClauseAttention& attn,
                                 double p, bool train, std::mt19937_64& rng) {
    std::vector<Tensor> reprs;
    for (const auto& clause : doc.clauses) {
        auto vecs = embed_clause(tape, clause, vocab, embeddings, p, train, rng);
        auto states = enc::encode_words(tape, vecs, word);
        reprs.push_back(enc::attend_clause(tape, states, attn).r);
    }
    return reprs;
}

}  // namespace

Model Model::create(ModelParams& params, const ModelConfig& cfg, const corpus::Vocabulary& vocab,
                    std::mt19937_64& rng) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.embeddings = params.add(
        "embed.E", corpus::init_embeddings(vocab, cfg.d_w, std::nullopt,
                                           static_cast<unsigned>(rng() & 0xffffffffu)));
    if (cfg.effective_variant() == Variant::gru) {
        m.enc = enc::EncoderStack::create(params, cfg.d_w, cfg.d_h, cfg.d_l, rng);
    } else {
        m.word = enc::BiGru::create(params, "paim.word", cfg.d_w, cfg.d_h, rng);
        m.attn = enc::ClauseAttention::create(params, "paim.attn", 2 * cfg.d_h, rng);
        m.paim_e = net::PaimStack::create(params, "paim.e", paim_cfg(cfg), rng);
        m.paim_c = net::PaimStack::create(params, "paim.c", paim_cfg(cfg), rng);
        const int d = 2 * cfg.d_h + 2;
        m.W_e = params.add("paim.head_e.W", Tensor::uniform({2, d}, -kInitScale, kInitScale, rng));
        m.b_e = params.add("paim.head_e.b", Tensor::zeros({2}));
        m.W_c = params.add("paim.head_c.W", Tensor::uniform({2, d}, -kInitScale, kInitScale, rng));
        m.b_c = params.add("paim.head_c.b", Tensor::zeros({2}));
        m.E_e = params.add("paim.label_e.E",
                           Tensor::uniform({2, cfg.d_l}, -kInitScale, kInitScale, rng));
        m.E_c = params.add("paim.label_c.E",
                           Tensor::uniform({2, cfg.d_l}, -kInitScale, kInitScale, rng));
    }
    m.pairnet = net::PairNet::create(params, pairnet_cfg(cfg), rng);
    return m;
}

Model Model::bind(ModelParams& params, const ModelConfig& cfg, int vocab_size) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.embeddings = params.get("embed.E");
    if (m.embeddings.rows() != vocab_size)
        throw ContractError("embedding rows " + std::to_string(m.embeddings.rows()) +
                            " vs vocabulary size " + std::to_string(vocab_size));
    if (cfg.effective_variant() == Variant::gru) {
        m.enc = enc::EncoderStack::bind(params, cfg.d_w, cfg.d_h, cfg.d_l);
    } else {
        m.word = enc::BiGru::bind(params, "paim.word", cfg.d_w, cfg.d_h);
        m.attn = enc::ClauseAttention::bind(params, "paim.attn");
        m.paim_e = net::PaimStack::bind(params, "paim.e", paim_cfg(cfg));
        m.paim_c = net::PaimStack::bind(params, "paim.c", paim_cfg(cfg));
        m.W_e = params.get("paim.head_e.W");
        m.b_e = params.get("paim.head_e.b");
        m.W_c = params.get("paim.head_c.W");
        m.b_c = params.get("paim.head_c.b");
        m.E_e = params.get("paim.label_e.E");
        m.E_c = params.get("paim.label_c.E");
    }
    m.pairnet = net::PairNet::bind(params, pairnet_cfg(cfg));
    return m;
}

DocForward Model::forward(Tape& tape, const corpus::Document& doc_in,
                          const corpus::Vocabulary& vocab, const kg::TripleStore& store,
                          const corpus::SentimentLexicon& lex, bool train,
                          std::mt19937_64& rng) const {
    const corpus::Document doc =
        cfg.ablate.no_lex ? doc_in : corpus::lexicon_augment(doc_in, lex);
    const int n = static_cast<int>(doc.clauses.size());
    const int rounds = cfg.ablate.no_inter ? 1 : cfg.rounds;

    DocForward out;
    std::vector<Tensor> h_e, h_c, u_e, u_c;

    if (cfg.effective_variant() == Variant::gru) {
        auto reprs = clause_reprs(tape, doc, vocab, embeddings, enc.word, enc.attn,
                                  cfg.dropout_p, train, rng);
        enc::TaskState st = enc::interaction_rounds(tape, reprs, enc, rounds);
        h_e = std::move(st.h_e);
        h_c = std::move(st.h_c);
        out.y_e = std::move(st.y_e);
        out.y_c = std::move(st.y_c);
        u_e = std::move(st.u_e);
        u_c = std::move(st.u_c);
    } else {
        auto reprs = clause_reprs(tape, doc, vocab, embeddings, word, attn, cfg.dropout_p,
                                  train, rng);
        Tensor zero2 = Tensor::zeros({2});
        std::vector<Tensor> y_e(n, zero2), y_c(n, zero2);
        std::vector<Tensor> he_rows, hc_rows;
        for (int round = 0; round < rounds; ++round) {
            std::vector<Tensor> xe, xc;
            for (int i = 0; i < n; ++i) {
                xe.push_back(net::feedback_concat(tape, reprs[i], y_c[i]));
                xc.push_back(net::feedback_concat(tape, reprs[i], y_e[i]));
            }
            Tensor He = paim_e.encode(tape, stack_rows(tape, xe));
            Tensor Hc = paim_c.encode(tape, stack_rows(tape, xc));
            he_rows.clear();
            hc_rows.clear();
            std::vector<Tensor> ye_next, yc_next;
            for (int i = 0; i < n; ++i) {
                he_rows.push_back(row(tape, He, i));
                hc_rows.push_back(row(tape, Hc, i));
                ye_next.push_back(enc::predict_subtask(tape, he_rows.back(), W_e, b_e));
                yc_next.push_back(enc::predict_subtask(tape, hc_rows.back(), W_c, b_c));
            }
            y_e = std::move(ye_next);
            y_c = std::move(yc_next);
        }
        h_e = std::move(he_rows);
        h_c = std::move(hc_rows);
        for (int i = 0; i < n; ++i) {
            u_e.push_back(vecmat(tape, y_e[i], E_e));
            u_c.push_back(vecmat(tape, y_c[i], E_c));
        }
        out.y_e = std::move(y_e);
        out.y_c = std::move(y_c);
    }

    out.candidates =
        kg::build_candidates(doc, cfg.window, store, !cfg.ablate.no_kg, lex, cfg.max_hops);
    std::vector<Tensor> pair_inputs;
    for (const auto& cand : out.candidates)
        pair_inputs.push_back(
            concat(tape, {h_c[cand.cause_idx], h_e[cand.emotion_idx]}));
    auto encoded = pairnet.encode_pairs(tape, pair_inputs);
    for (std::size_t k = 0; k < encoded.size(); ++k) {
        const auto& cand = out.candidates[k];
        out.pair_scores.push_back(pairnet.score_pair(tape, encoded[k], u_c[cand.cause_idx],
                                                     u_e[cand.emotion_idx], cand.rel_dist,
                                                     cfg.ablate.no_pos));
    }
    return out;
}

}  // namespace ecpe::model
