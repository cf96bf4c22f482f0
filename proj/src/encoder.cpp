#include "ecpe/encoder.hpp"

#include <algorithm>

#include "ecpe/error.hpp"

namespace ecpe::enc {

namespace {
constexpr double kInitScale = 0.1;

Tensor init_mat(int rows, int cols, std::mt19937_64& rng) {
    return Tensor::uniform({rows, cols}, -kInitScale, kInitScale, rng);
}
}  // namespace

GruCell GruCell::create(ModelParams& params, const std::string& prefix, int d_in, int d_h,
                        std::mt19937_64& rng) {
    GruCell c;
    c.input_dim = d_in;
    c.hidden_dim = d_h;
    c.Wz = params.add(prefix + ".Wz", init_mat(d_h, d_in, rng));
    c.Uz = params.add(prefix + ".Uz", init_mat(d_h, d_h, rng));
    c.bz = params.add(prefix + ".bz", Tensor::zeros({d_h}));
    c.Wr = params.add(prefix + ".Wr", init_mat(d_h, d_in, rng));
    c.Ur = params.add(prefix + ".Ur", init_mat(d_h, d_h, rng));
    c.br = params.add(prefix + ".br", Tensor::zeros({d_h}));
    c.Wn = params.add(prefix + ".Wn", init_mat(d_h, d_in, rng));
    c.Un = params.add(prefix + ".Un", init_mat(d_h, d_h, rng));
    c.bn = params.add(prefix + ".bn", Tensor::zeros({d_h}));
    return c;
}

GruCell GruCell::bind(ModelParams& params, const std::string& prefix, int d_in, int d_h) {
    GruCell c;
    c.input_dim = d_in;
    c.hidden_dim = d_h;
    c.Wz = params.get(prefix + ".Wz");
    c.Uz = params.get(prefix + ".Uz");
    c.bz = params.get(prefix + ".bz");
    c.Wr = params.get(prefix + ".Wr");
    c.Ur = params.get(prefix + ".Ur");
    c.br = params.get(prefix + ".br");
    c.Wn = params.get(prefix + ".Wn");
    c.Un = params.get(prefix + ".Un");
    c.bn = params.get(prefix + ".bn");
    return c;
}

Tensor GruCell::step(Tape& tape, const Tensor& x, const Tensor& h) const {
    using namespace num;
    Tensor z = sigmoid(tape, add(tape, add(tape, matvec(tape, Wz, x), matvec(tape, Uz, h)), bz));
    Tensor r = sigmoid(tape, add(tape, add(tape, matvec(tape, Wr, x), matvec(tape, Ur, h)), br));
    Tensor n =
        tanh(tape, add(tape, add(tape, matvec(tape, Wn, x), matvec(tape, Un, mul(tape, r, h))), bn));
    // h' = (1 - z) * h + z * n
    Tensor one_minus_z = add_scalar(tape, scale(tape, z, -1.0), 1.0);
    return add(tape, mul(tape, one_minus_z, h), mul(tape, z, n));
}

BiGru BiGru::create(ModelParams& params, const std::string& prefix, int d_in, int d_h,
                    std::mt19937_64& rng) {
    return BiGru{GruCell::create(params, prefix + ".fw", d_in, d_h, rng),
                 GruCell::create(params, prefix + ".bw", d_in, d_h, rng)};
}

BiGru BiGru::bind(ModelParams& params, const std::string& prefix, int d_in, int d_h) {
    return BiGru{GruCell::bind(params, prefix + ".fw", d_in, d_h),
                 GruCell::bind(params, prefix + ".bw", d_in, d_h)};
}

namespace {
std::vector<Tensor> run_bigru(Tape& tape, const std::vector<Tensor>& xs, const BiGru& gru) {
    const int n = static_cast<int>(xs.size());
    std::vector<Tensor> fwd(n), bwd(n);
    Tensor h = Tensor::zeros({gru.fwd.hidden_dim});
    for (int t = 0; t < n; ++t) {
        h = gru.fwd.step(tape, xs[t], h);
        fwd[t] = h;
    }
    h = Tensor::zeros({gru.bwd.hidden_dim});
    for (int t = n - 1; t >= 0; --t) {
        h = gru.bwd.step(tape, xs[t], h);
        bwd[t] = h;
    }
    std::vector<Tensor> out(n);
    for (int t = 0; t < n; ++t) out[t] = num::concat(tape, {fwd[t], bwd[t]});
    return out;
}
}  // namespace

std::vector<Tensor> encode_words(Tape& tape, const std::vector<Tensor>& word_vecs,
                                 const BiGru& gru) {
    if (word_vecs.empty()) throw ContractError("encode_words: empty clause");
    return run_bigru(tape, word_vecs, gru);
}

ClauseAttention ClauseAttention::create(ModelParams& params, const std::string& prefix, int dim,
                                        std::mt19937_64& rng) {
    ClauseAttention a;
    a.W_a = params.add(prefix + ".W", init_mat(dim, dim, rng));
    a.b_a = params.add(prefix + ".b", Tensor::zeros({dim}));
    a.w_a = params.add(prefix + ".v", Tensor::uniform({dim}, -kInitScale, kInitScale, rng));
    return a;
}

ClauseAttention ClauseAttention::bind(ModelParams& params, const std::string& prefix) {
    return ClauseAttention{params.get(prefix + ".W"), params.get(prefix + ".b"),
                           params.get(prefix + ".v")};
}

ClauseRepr attend_clause(Tape& tape, const std::vector<Tensor>& word_states,
                         const ClauseAttention& attn) {
    using namespace num;
    if (word_states.empty()) throw ContractError("attend_clause: no word states");
    std::vector<Tensor> scores;
    scores.reserve(word_states.size());
    for (const Tensor& h : word_states) {
        Tensor t = tanh(tape, add(tape, matvec(tape, attn.W_a, h), attn.b_a));
        scores.push_back(sum(tape, mul(tape, attn.w_a, t)));
    }
    Tensor alpha = softmax(tape, concat(tape, scores), 0);
    Tensor H = stack_rows(tape, word_states);
    return ClauseRepr{vecmat(tape, alpha, H), alpha};
}

std::vector<Tensor> encode_task_level(Tape& tape, const std::vector<Tensor>& clause_reprs,
                                      const std::vector<Tensor>& label_embeds, const BiGru& gru) {
    if (clause_reprs.size() != label_embeds.size())
        throw ContractError("encode_task_level: " + std::to_string(clause_reprs.size()) +
                            " clause reprs vs " + std::to_string(label_embeds.size()) +
                            " label embeddings");
    std::vector<Tensor> inputs(clause_reprs.size());
    for (std::size_t i = 0; i < clause_reprs.size(); ++i)
        inputs[i] = num::concat(tape, {clause_reprs[i], label_embeds[i]});
    return run_bigru(tape, inputs, gru);
}

Tensor predict_subtask(Tape& tape, const Tensor& h, const Tensor& W, const Tensor& b) {
    using namespace num;
    return softmax(tape, add(tape, matvec(tape, W, h), b), 0);
}

int predicted_class(const Tensor& dist) {
    return dist.at(1) > dist.at(0) ? 1 : 0;  // tie goes to the negative class
}

EncoderStack EncoderStack::create(ModelParams& params, int d_w, int d_h, int d_l,
                                  std::mt19937_64& rng) {
    EncoderStack s;
    s.d_h = d_h;
    s.d_l = d_l;
    s.word = BiGru::create(params, "enc.word", d_w, d_h, rng);
    s.attn = ClauseAttention::create(params, "enc.attn", 2 * d_h, rng);
    s.task_e = BiGru::create(params, "enc.task_e", 2 * d_h + d_l, d_h, rng);
    s.task_c = BiGru::create(params, "enc.task_c", 2 * d_h + d_l, d_h, rng);
    s.W_e = params.add("enc.head_e.W", init_mat(2, 2 * d_h, rng));
    s.b_e = params.add("enc.head_e.b", Tensor::zeros({2}));
    s.W_c = params.add("enc.head_c.W", init_mat(2, 2 * d_h, rng));
    s.b_c = params.add("enc.head_c.b", Tensor::zeros({2}));
    s.E_e = params.add("enc.label_e.E", init_mat(2, d_l, rng));
    s.E_c = params.add("enc.label_c.E", init_mat(2, d_l, rng));
    return s;
}

EncoderStack EncoderStack::bind(ModelParams& params, int d_w, int d_h, int d_l) {
    EncoderStack s;
    s.d_h = d_h;
    s.d_l = d_l;
    s.word = BiGru::bind(params, "enc.word", d_w, d_h);
    s.attn = ClauseAttention::bind(params, "enc.attn");
    s.task_e = BiGru::bind(params, "enc.task_e", 2 * d_h + d_l, d_h);
    s.task_c = BiGru::bind(params, "enc.task_c", 2 * d_h + d_l, d_h);
    s.W_e = params.get("enc.head_e.W");
    s.b_e = params.get("enc.head_e.b");
    s.W_c = params.get("enc.head_c.W");
    s.b_c = params.get("enc.head_c.b");
    s.E_e = params.get("enc.label_e.E");
    s.E_c = params.get("enc.label_c.E");
    return s;
}

TaskState interaction_rounds(Tape& tape, const std::vector<Tensor>& clause_reprs,
                             const EncoderStack& stack, int rounds) {
    using namespace num;
    if (rounds < 1) throw ConfigError("interaction_rounds: rounds must be >= 1");
    const std::size_t n = clause_reprs.size();
    TaskState st;
    st.u_e.assign(n, Tensor::zeros({stack.d_l}));
    st.u_c.assign(n, Tensor::zeros({stack.d_l}));
    for (int round = 0; round < rounds; ++round) {
        // each task consumes the other task's previous-round label embeddings
        st.h_e = encode_task_level(tape, clause_reprs, st.u_c, stack.task_e);
        st.h_c = encode_task_level(tape, clause_reprs, st.u_e, stack.task_c);
        st.y_e.resize(n);
        st.y_c.resize(n);
        std::vector<Tensor> new_u_e(n), new_u_c(n);
        for (std::size_t i = 0; i < n; ++i) {
            st.y_e[i] = predict_subtask(tape, st.h_e[i], stack.W_e, stack.b_e);
            st.y_c[i] = predict_subtask(tape, st.h_c[i], stack.W_c, stack.b_c);
            new_u_e[i] = vecmat(tape, st.y_e[i], stack.E_e);
            new_u_c[i] = vecmat(tape, st.y_c[i], stack.E_c);
        }
        st.u_e = std::move(new_u_e);
        st.u_c = std::move(new_u_c);
    }
    return st;
}

}  // namespace ecpe::enc
