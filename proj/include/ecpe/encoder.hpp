#pragma once

#include <string>
#include <vector>

#include "ecpe/ops.hpp"
#include "ecpe/params.hpp"

namespace ecpe::enc {

using num::ModelParams;
using num::Tape;
using num::Tensor;

// Update / reset / candidate gates over input dim d_in, hidden dim d_h.
// h' = (1 - z) * h + z * n with n = tanh(Wn x + Un (r * h) + bn).
struct GruCell {
    Tensor Wz, Uz, bz, Wr, Ur, br, Wn, Un, bn;
    int input_dim = 0;
    int hidden_dim = 0;

    static GruCell create(ModelParams& params, const std::string& prefix, int d_in, int d_h,
                          std::mt19937_64& rng);
    static GruCell bind(ModelParams& params, const std::string& prefix, int d_in, int d_h);

    Tensor step(Tape& tape, const Tensor& x, const Tensor& h) const;
};

struct BiGru {
    GruCell fwd, bwd;

    static BiGru create(ModelParams& params, const std::string& prefix, int d_in, int d_h,
                        std::mt19937_64& rng);
    static BiGru bind(ModelParams& params, const std::string& prefix, int d_in, int d_h);
};

// Per-token hidden states, forward and backward halves concatenated (2*d_h).
std::vector<Tensor> encode_words(Tape& tape, const std::vector<Tensor>& word_vecs,
                                 const BiGru& gru);

struct ClauseAttention {
    Tensor W_a, b_a, w_a;

    static ClauseAttention create(ModelParams& params, const std::string& prefix, int dim,
                                  std::mt19937_64& rng);
    static ClauseAttention bind(ModelParams& params, const std::string& prefix);
};

struct ClauseRepr {
    Tensor r;      // attention-weighted sum over word states
    Tensor alpha;  // per-word weights, sums to 1
};

ClauseRepr attend_clause(Tape& tape, const std::vector<Tensor>& word_states,
                         const ClauseAttention& attn);

// BiGRU over per-clause inputs [r_i ; u_i]; used symmetrically for the
// emotion task (consuming cause label embeddings) and vice versa.
std::vector<Tensor> encode_task_level(Tape& tape, const std::vector<Tensor>& clause_reprs,
                                      const std::vector<Tensor>& label_embeds, const BiGru& gru);

// Two-class distribution softmax(W h + b); W is [2, dim].
Tensor predict_subtask(Tape& tape, const Tensor& h, const Tensor& W, const Tensor& b);

// argmax with ties broken toward the negative class (index 0).
int predicted_class(const Tensor& dist);

struct TaskState {
    std::vector<Tensor> h_e, h_c;  // task-specific clause representations
    std::vector<Tensor> y_e, y_c;  // 2-class probability rows
    std::vector<Tensor> u_e, u_c;  // soft label embeddings y * E_label
};

// Word-to-clause encoder plus the two interacting task encoders and their
// classifier heads and label embedding tables.
struct EncoderStack {
    BiGru word;
    ClauseAttention attn;
    BiGru task_e, task_c;
    Tensor W_e, b_e, W_c, b_c;
    Tensor E_e, E_c;  // [2, d_l]
    int d_h = 0, d_l = 0;

    static EncoderStack create(ModelParams& params, int d_w, int d_h, int d_l,
                               std::mt19937_64& rng);
    static EncoderStack bind(ModelParams& params, int d_w, int d_h, int d_l);
};

// Iterated joint prediction. Round 0 feeds zero label embeddings; round
// k >= 1 re-encodes each task consuming the other task's round-(k-1) soft
// label embeddings u_i = y_i * E_label. Returns the final round's state.
TaskState interaction_rounds(Tape& tape, const std::vector<Tensor>& clause_reprs,
                             const EncoderStack& stack, int rounds);

}  // namespace ecpe::enc
