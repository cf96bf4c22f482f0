#include <cmath>
#include <random>

#include "doctest.h"
#include "ecpe/encoder.hpp"
#include "ecpe/error.hpp"
#include "ecpe/gradcheck.hpp"

using namespace ecpe;
using namespace ecpe::enc;
using num::ModelParams;
using num::Tape;
using num::Tensor;

namespace {

// Plain scalar-loop GRU recurrence, independent of the tensor engine.
std::vector<double> gru_step_oracle(const GruCell& c, const std::vector<double>& x,
                                    const std::vector<double>& h) {
    const int dh = c.hidden_dim, di = c.input_dim;
    auto gate = [&](const Tensor& W, const Tensor& U, const Tensor& b,
                    const std::vector<double>& hv) {
        std::vector<double> g(dh);
        for (int i = 0; i < dh; ++i) {
            double acc = b.at(i);
            for (int j = 0; j < di; ++j) acc += W.at(i, j) * x[j];
            for (int j = 0; j < dh; ++j) acc += U.at(i, j) * hv[j];
            g[i] = acc;
        }
        return g;
    };
    auto z = gate(c.Wz, c.Uz, c.bz, h);
    auto r = gate(c.Wr, c.Ur, c.br, h);
    for (int i = 0; i < dh; ++i) {
        z[i] = 1.0 / (1.0 + std::exp(-z[i]));
        r[i] = 1.0 / (1.0 + std::exp(-r[i]));
    }
    std::vector<double> rh(dh);
    for (int i = 0; i < dh; ++i) rh[i] = r[i] * h[i];
    auto n = gate(c.Wn, c.Un, c.bn, rh);
    std::vector<double> out(dh);
    for (int i = 0; i < dh; ++i) {
        n[i] = std::tanh(n[i]);
        out[i] = (1.0 - z[i]) * h[i] + z[i] * n[i];
    }
    return out;
}

void copy_cell_weights(const GruCell& from, const GruCell& to) {
    to.Wz.node()->value = from.Wz.data();
    to.Uz.node()->value = from.Uz.data();
    to.bz.node()->value = from.bz.data();
    to.Wr.node()->value = from.Wr.data();
    to.Ur.node()->value = from.Ur.data();
    to.br.node()->value = from.br.data();
    to.Wn.node()->value = from.Wn.data();
    to.Un.node()->value = from.Un.data();
    to.bn.node()->value = from.bn.data();
}

std::vector<Tensor> random_vecs(int n, int dim, std::mt19937_64& rng) {
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) out.push_back(Tensor::uniform({dim}, -1.0, 1.0, rng));
    return out;
}

}  // namespace

TEST_CASE("bigru: length-1 symmetry with shared directions") {
    std::mt19937_64 rng(1);
    ModelParams params;
    BiGru gru = BiGru::create(params, "g", 3, 4, rng);
    copy_cell_weights(gru.fwd, gru.bwd);
    Tape tape;
    auto states = encode_words(tape, {Tensor::uniform({3}, -1.0, 1.0, rng)}, gru);
    REQUIRE(states.size() == 1);
    REQUIRE(states[0].shape() == std::vector<int>{8});
    for (int i = 0; i < 4; ++i) CHECK(states[0].at(i) == doctest::Approx(states[0].at(i + 4)));
}

TEST_CASE("bigru: reversing tokens swaps forward/backward halves") {
    std::mt19937_64 rng(2);
    ModelParams params;
    BiGru gru = BiGru::create(params, "g", 3, 4, rng);
    copy_cell_weights(gru.fwd, gru.bwd);
    auto xs = random_vecs(5, 3, rng);
    auto rev = xs;
    std::reverse(rev.begin(), rev.end());
    Tape tape;
    auto fwd_states = encode_words(tape, xs, gru);
    auto rev_states = encode_words(tape, rev, gru);
    for (int t = 0; t < 5; ++t)
        for (int i = 0; i < 4; ++i) {
            CHECK(rev_states[t].at(i) == doctest::Approx(fwd_states[4 - t].at(i + 4)));
            CHECK(rev_states[t].at(i + 4) == doctest::Approx(fwd_states[4 - t].at(i)));
        }
}

TEST_CASE("bigru: zero weights give zero states") {
    ModelParams params;
    std::mt19937_64 rng(3);
    BiGru gru = BiGru::create(params, "g", 2, 3, rng);
    for (const auto& name : params.names())
        std::fill(params.get(name).data().begin(), params.get(name).data().end(), 0.0);
    Tape tape;
    auto states = encode_words(tape, random_vecs(4, 2, rng), gru);
    for (const auto& s : states)
        for (double v : s.data()) CHECK(v == 0.0);
}

TEST_CASE("bigru matches scalar-loop oracle on a random clause") {
    std::mt19937_64 rng(4);
    ModelParams params;
    BiGru gru = BiGru::create(params, "g", 3, 5, rng);
    auto xs = random_vecs(3, 3, rng);
    Tape tape;
    auto states = encode_words(tape, xs, gru);

    std::vector<double> h(5, 0.0);
    std::vector<std::vector<double>> fwd;
    for (const auto& x : xs) {
        h = gru_step_oracle(gru.fwd, x.data(), h);
        fwd.push_back(h);
    }
    h.assign(5, 0.0);
    std::vector<std::vector<double>> bwd(3);
    for (int t = 2; t >= 0; --t) {
        h = gru_step_oracle(gru.bwd, xs[t].data(), h);
        bwd[t] = h;
    }
    for (int t = 0; t < 3; ++t)
        for (int i = 0; i < 5; ++i) {
            CHECK(states[t].at(i) == doctest::Approx(fwd[t][i]).epsilon(1e-12));
            CHECK(states[t].at(i + 5) == doctest::Approx(bwd[t][i]).epsilon(1e-12));
        }
}

TEST_CASE("encode_words rejects empty clause") {
    std::mt19937_64 rng(5);
    ModelParams params;
    BiGru gru = BiGru::create(params, "g", 2, 2, rng);
    Tape tape;
    CHECK_THROWS_AS(encode_words(tape, {}, gru), ContractError);
}

TEST_CASE("attention: one word, identical words, weighted-sum oracle") {
    std::mt19937_64 rng(6);
    ModelParams params;
    ClauseAttention attn = ClauseAttention::create(params, "a", 4, rng);
    Tape tape;

    Tensor h1 = Tensor::uniform({4}, -1.0, 1.0, rng);
    auto single = attend_clause(tape, {h1}, attn);
    CHECK(single.alpha.at(0) == doctest::Approx(1.0));
    for (int i = 0; i < 4; ++i) CHECK(single.r.at(i) == doctest::Approx(h1.at(i)));

    auto same = attend_clause(tape, {h1, h1, h1}, attn);
    for (int j = 0; j < 3; ++j) CHECK(same.alpha.at(j) == doctest::Approx(1.0 / 3.0));

    auto hs = random_vecs(4, 4, rng);
    auto res = attend_clause(tape, hs, attn);
    double alpha_sum = 0.0;
    for (int j = 0; j < 4; ++j) alpha_sum += res.alpha.at(j);
    CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < 4; ++i) {
        double expect = 0.0;
        for (int j = 0; j < 4; ++j) expect += res.alpha.at(j) * hs[j].at(i);
        CHECK(res.r.at(i) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("subtask prediction: symmetry, saturation, formula oracle") {
    Tape tape;
    Tensor W0 = Tensor::zeros({2, 4});
    Tensor b0 = Tensor::zeros({2});
    Tensor h = Tensor::from({4}, {1.0, -2.0, 0.5, 3.0});
    Tensor y0 = predict_subtask(tape, h, W0, b0);
    CHECK(y0.at(0) == doctest::Approx(0.5));
    CHECK(y0.at(1) == doctest::Approx(0.5));
    CHECK(predicted_class(y0) == 0);  // tie toward negative

    Tensor Wsat = Tensor::from({2, 1}, {10.0, -10.0});
    Tensor ysat = predict_subtask(tape, Tensor::from({1}, {1.0}), Wsat, Tensor::zeros({2}));
    CHECK(ysat.at(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ysat.at(1) == doctest::Approx(0.0).epsilon(1e-6));

    std::mt19937_64 rng(7);
    Tensor W = Tensor::uniform({2, 4}, -1.0, 1.0, rng);
    Tensor b = Tensor::uniform({2}, -1.0, 1.0, rng);
    Tensor y = predict_subtask(tape, h, W, b);
    double logits[2];
    for (int k = 0; k < 2; ++k) {
        logits[k] = b.at(k);
        for (int j = 0; j < 4; ++j) logits[k] += W.at(k, j) * h.at(j);
    }
    const double denom = std::exp(logits[0]) + std::exp(logits[1]);
    CHECK(y.at(0) == doctest::Approx(std::exp(logits[0]) / denom).epsilon(1e-12));
    CHECK(y.at(1) == doctest::Approx(std::exp(logits[1]) / denom).epsilon(1e-12));
}

TEST_CASE("encode_task_level: alignment error and oracle") {
    std::mt19937_64 rng(8);
    ModelParams params;
    BiGru gru = BiGru::create(params, "t", 6, 3, rng);  // 4 + 2 label dims
    Tape tape;
    auto rs = random_vecs(3, 4, rng);
    auto us = random_vecs(3, 2, rng);
    CHECK_THROWS_AS(encode_task_level(tape, rs, {us[0]}, gru), ContractError);

    auto out = encode_task_level(tape, rs, us, gru);
    REQUIRE(out.size() == 3);
    // oracle: scalar-loop recurrence over concatenated inputs
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 3; ++i) {
        std::vector<double> v = rs[i].data();
        v.insert(v.end(), us[i].data().begin(), us[i].data().end());
        inputs.push_back(v);
    }
    std::vector<double> h(3, 0.0);
    for (int t = 0; t < 3; ++t) {
        h = gru_step_oracle(gru.fwd, inputs[t], h);
        for (int i = 0; i < 3; ++i) CHECK(out[t].at(i) == doctest::Approx(h[i]).epsilon(1e-12));
    }

    // zero label embeddings: matches the same oracle with zero-padded input
    std::vector<Tensor> zeros(3, Tensor::zeros({2}));
    auto out0 = encode_task_level(tape, rs, zeros, gru);
    std::vector<double> h0(3, 0.0);
    for (int t = 0; t < 3; ++t) {
        std::vector<double> v = rs[t].data();
        v.resize(6, 0.0);
        h0 = gru_step_oracle(gru.fwd, v, h0);
        for (int i = 0; i < 3; ++i) CHECK(out0[t].at(i) == doctest::Approx(h0[i]).epsilon(1e-12));
    }
}

TEST_CASE("interaction rounds: base case, two-pass oracle, shape invariance") {
    std::mt19937_64 rng(9);
    ModelParams params;
    EncoderStack stack = EncoderStack::create(params, 4, 3, 2, rng);
    auto rs = random_vecs(4, 6, rng);  // 2*d_h = 6

    Tape tape;
    auto st1 = interaction_rounds(tape, rs, stack, 1);
    REQUIRE(st1.y_e.size() == 4);

    // R=2: round-1 task inputs are [r_i ; u_round0] of the other task
    auto st2 = interaction_rounds(tape, rs, stack, 2);
    auto manual_h_e = encode_task_level(tape, rs, st1.u_c, stack.task_e);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 6; ++k)
            CHECK(st2.h_e[i].at(k) == doctest::Approx(manual_h_e[i].at(k)).epsilon(1e-12));

    auto st3 = interaction_rounds(tape, rs, stack, 3);
    for (int i = 0; i < 4; ++i) {
        CHECK(st3.h_e[i].shape() == st1.h_e[i].shape());
        CHECK(st3.y_c[i].shape() == st1.y_c[i].shape());
        CHECK(st3.u_e[i].shape() == st1.u_e[i].shape());
    }
    CHECK_THROWS_AS(interaction_rounds(tape, rs, stack, 0), ConfigError);
}

TEST_CASE("probability rows normalize across rounds") {
    std::mt19937_64 rng(10);
    ModelParams params;
    EncoderStack stack = EncoderStack::create(params, 4, 3, 2, rng);
    Tape tape;
    auto st = interaction_rounds(tape, random_vecs(5, 6, rng), stack, 2);
    for (int i = 0; i < 5; ++i) {
        CHECK(st.y_e[i].at(0) + st.y_e[i].at(1) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(st.y_c[i].at(0) + st.y_c[i].at(1) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("end-to-end encoder gradient check on a 2-doc batch") {
    std::mt19937_64 rng(11);
    ModelParams params;
    params.add("E_w", Tensor::uniform({6, 3}, -0.5, 0.5, rng));
    EncoderStack stack = EncoderStack::create(params, 3, 2, 2, rng);

    const std::vector<std::vector<std::vector<int>>> docs = {
        {{2, 3}, {4}, {5, 1, 2}},
        {{3, 3, 4}, {5, 2}},
    };
    auto forward = [&]() {
        Tape tape;
        EncoderStack s = EncoderStack::bind(params, 3, 2, 2);
        Tensor loss = Tensor::scalar(0.0);
        for (const auto& doc : docs) {
            std::vector<Tensor> rs;
            for (const auto& clause : doc) {
                Tensor rows = num::lookup(tape, params.get("E_w"), clause);
                std::vector<Tensor> vecs;
                for (int t = 0; t < static_cast<int>(clause.size()); ++t)
                    vecs.push_back(num::row(tape, rows, t));
                auto states = encode_words(tape, vecs, s.word);
                rs.push_back(attend_clause(tape, states, s.attn).r);
            }
            auto st = interaction_rounds(tape, rs, s, 2);
            for (std::size_t i = 0; i < rs.size(); ++i) {
                Tensor ye = num::log(tape, num::clamp(tape, st.y_e[i], 1e-12, 1.0));
                Tensor yc = num::log(tape, num::clamp(tape, st.y_c[i], 1e-12, 1.0));
                loss = num::add(tape, loss, num::sum(tape, num::mul(tape, ye, ye)));
                loss = num::add(tape, loss, num::sum(tape, yc));
            }
        }
        return std::make_pair(loss, std::move(tape));
    };

    params.zero_grad();
    {
        auto [loss, tape] = forward();
        tape.backward(loss);
    }
    auto res = num::check_gradients(params, [&] { return forward().first.item(); });
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("emotion/cause paths are structurally symmetric") {
    std::mt19937_64 rng(12);
    ModelParams pa, pb;
    EncoderStack a = EncoderStack::create(pa, 4, 3, 2, rng);
    EncoderStack b = EncoderStack::create(pb, 4, 3, 2, rng);
    // mirror: b's emotion side takes a's cause-side weights and vice versa
    auto copy = [](const Tensor& src, const Tensor& dst) { dst.node()->value = src.data(); };
    for (const char* leaf : {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wn", "Un", "bn"}) {
        copy(pa.get(std::string("enc.task_e.fw.") + leaf), pb.get(std::string("enc.task_c.fw.") + leaf));
        copy(pa.get(std::string("enc.task_e.bw.") + leaf), pb.get(std::string("enc.task_c.bw.") + leaf));
        copy(pa.get(std::string("enc.task_c.fw.") + leaf), pb.get(std::string("enc.task_e.fw.") + leaf));
        copy(pa.get(std::string("enc.task_c.bw.") + leaf), pb.get(std::string("enc.task_e.bw.") + leaf));
    }
    copy(pa.get("enc.head_e.W"), pb.get("enc.head_c.W"));
    copy(pa.get("enc.head_e.b"), pb.get("enc.head_c.b"));
    copy(pa.get("enc.head_c.W"), pb.get("enc.head_e.W"));
    copy(pa.get("enc.head_c.b"), pb.get("enc.head_e.b"));
    copy(pa.get("enc.label_e.E"), pb.get("enc.label_c.E"));
    copy(pa.get("enc.label_c.E"), pb.get("enc.label_e.E"));
    copy(pa.get("enc.word.fw.Wz"), pb.get("enc.word.fw.Wz"));  // word level shared anyway

    auto rs = random_vecs(4, 6, rng);
    Tape tape;
    auto sa = interaction_rounds(tape, rs, a, 2);
    auto sb = interaction_rounds(tape, rs, b, 2);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 2; ++k) {
            CHECK(sa.y_e[i].at(k) == doctest::Approx(sb.y_c[i].at(k)).epsilon(1e-12));
            CHECK(sa.y_c[i].at(k) == doctest::Approx(sb.y_e[i].at(k)).epsilon(1e-12));
        }
}
