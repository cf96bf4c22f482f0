#include <cmath>
#include <random>

#include "doctest.h"
#include "ecpe/error.hpp"
#include "ecpe/gradcheck.hpp"
#include "ecpe/pairnet.hpp"

using namespace ecpe;
using namespace ecpe::net;
using num::ModelParams;
using num::Tape;
using num::Tensor;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (int i = 0; i < t.rows(); ++i)
        for (int j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// Explicit one-head post-norm transformer layer on plain doubles.
Mat transformer_oracle(const Mat& X, const Mat& Wq, const Mat& Wk, const Mat& Wv, const Mat& Wo,
                       const Mat& W1, const std::vector<double>& b1, const Mat& W2,
                       const std::vector<double>& b2, const std::vector<double>& g1,
                       const std::vector<double>& be1, const std::vector<double>& g2,
                       const std::vector<double>& be2) {
    const int n = static_cast<int>(X.size());
    const int d = static_cast<int>(X[0].size());
    Mat Q = mat_mul(X, Wq), K = mat_mul(X, Wk), V = mat_mul(X, Wv);
    Mat A(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        double mx = -1e300;
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += Q[i][k] * K[j][k];
            A[i][j] = s / std::sqrt(double(d));
            mx = std::max(mx, A[i][j]);
        }
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            A[i][j] = std::exp(A[i][j] - mx);
            z += A[i][j];
        }
        for (int j = 0; j < n; ++j) A[i][j] /= z;
    }
    Mat attn = mat_mul(mat_mul(A, V), Wo);
    auto lnorm = [](Mat m, const std::vector<double>& g, const std::vector<double>& b) {
        for (auto& r0 : m) {
            const int d = static_cast<int>(r0.size());
            double mu = 0.0;
            for (double v : r0) mu += v;
            mu /= d;
            double var = 0.0;
            for (double v : r0) var += (v - mu) * (v - mu);
            var /= d;
            const double is = 1.0 / std::sqrt(var + 1e-5);
            for (int j = 0; j < d; ++j) r0[j] = g[j] * ((r0[j] - mu) * is) + b[j];
        }
        return m;
    };
    Mat h(n, std::vector<double>(d));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) h[i][j] = X[i][j] + attn[i][j];
    h = lnorm(h, g1, be1);
    Mat inner = mat_mul(h, W1);
    for (int i = 0; i < n; ++i)
        for (std::size_t j = 0; j < inner[0].size(); ++j)
            inner[i][j] = std::max(0.0, inner[i][j] + b1[j]);
    Mat ff = mat_mul(inner, W2);
    Mat out(n, std::vector<double>(d));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[i][j] = h[i][j] + ff[i][j] + b2[j];
    return lnorm(out, g2, be2);
}

PairNetConfig tiny_cfg(int layers = 1, int heads = 1) {
    PairNetConfig cfg;
    cfg.d_in = 6;
    cfg.d_m = 6;
    cfg.heads = heads;
    cfg.layers = layers;
    cfg.d_ff = 8;
    cfg.d_l = 3;
    cfg.d_r = 4;
    cfg.clip = 5;
    cfg.d_p = 5;
    return cfg;
}

std::vector<Tensor> random_vecs(int n, int dim, std::mt19937_64& rng) {
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) out.push_back(Tensor::uniform({dim}, -1.0, 1.0, rng));
    return out;
}

}  // namespace

TEST_CASE("zero-layer encoder with matching dims is the identity") {
    std::mt19937_64 rng(1);
    ModelParams params;
    PairNet net = PairNet::create(params, tiny_cfg(0), rng);
    Tape tape;
    auto inputs = random_vecs(3, 6, rng);
    auto out = net.encode_pairs(tape, inputs);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 6; ++k) CHECK(out[i].at(k) == inputs[i].at(k));
}

TEST_CASE("single pair encodes without error and matches itself under identity attention") {
    std::mt19937_64 rng(2);
    ModelParams params;
    PairNet net = PairNet::create(params, tiny_cfg(1), rng);
    Tape tape;
    auto out = net.encode_pairs(tape, random_vecs(1, 6, rng));
    REQUIRE(out.size() == 1);
    CHECK(out[0].shape() == std::vector<int>{6});
}

TEST_CASE("one layer, one head matches explicit oracle") {
    std::mt19937_64 rng(3);
    ModelParams params;
    PairNet net = PairNet::create(params, tiny_cfg(1), rng);
    auto inputs = random_vecs(3, 6, rng);
    Tape tape;
    auto out = net.encode_pairs(tape, inputs);

    Mat X(3, std::vector<double>(6));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) X[i][j] = inputs[i].at(j);
    const auto& l = net.layers[0];
    Mat expect = transformer_oracle(X, to_mat(l.mha.Wq), to_mat(l.mha.Wk), to_mat(l.mha.Wv),
                                    to_mat(l.mha.Wo), to_mat(l.ffn.W1), l.ffn.b1.data(),
                                    to_mat(l.ffn.W2), l.ffn.b2.data(), l.ln1.gain.data(),
                                    l.ln1.bias.data(), l.ln2.gain.data(), l.ln2.bias.data());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) CHECK(std::abs(out[i].at(j) - expect[i][j]) < 1e-8);
}

TEST_CASE("permutation equivariance of pair encoding") {
    std::mt19937_64 rng(4);
    ModelParams params;
    PairNet net = PairNet::create(params, tiny_cfg(2, 2), rng);
    auto inputs = random_vecs(4, 6, rng);
    std::vector<Tensor> permuted{inputs[2], inputs[0], inputs[3], inputs[1]};
    Tape tape;
    auto out = net.encode_pairs(tape, inputs);
    auto out_p = net.encode_pairs(tape, permuted);
    const int perm[4] = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 6; ++k)
            CHECK(out_p[i].at(k) == doctest::Approx(out[perm[i]].at(k)).epsilon(1e-10));
}

TEST_CASE("score_pair: zero weights, clipping, formula oracle") {
    std::mt19937_64 rng(5);
    ModelParams params;
    PairNet net = PairNet::create(params, tiny_cfg(0), rng);
    Tape tape;
    Tensor v = Tensor::uniform({6}, -1.0, 1.0, rng);
    Tensor uc = Tensor::uniform({3}, -1.0, 1.0, rng);
    Tensor ue = Tensor::uniform({3}, -1.0, 1.0, rng);

    {
        ModelParams zp;
        PairNet zn = PairNet::create(zp, tiny_cfg(0), rng);
        for (const auto& name : zp.names())
            std::fill(zp.get(name).data().begin(), zp.get(name).data().end(), 0.0);
        Tensor y = zn.score_pair(tape, v, uc, ue, 1);
        CHECK(y.at(0) == doctest::Approx(0.5));
        CHECK(y.at(1) == doctest::Approx(0.5));
        CHECK_FALSE(y.at(1) > 0.5);  // tie-break: not predicted positive
    }

    // distances beyond the clip range reuse the boundary row
    Tensor y_far = net.score_pair(tape, v, uc, ue, 40);
    Tensor y_edge = net.score_pair(tape, v, uc, ue, 5);
    CHECK(y_far.at(0) == y_edge.at(0));
    Tensor y_in = net.score_pair(tape, v, uc, ue, 4);
    CHECK(y_far.at(0) != y_in.at(0));

    // direct evaluation oracle
    Tensor y = net.score_pair(tape, v, uc, ue, -2);
    std::vector<double> x;
    for (const Tensor* t : {&v, &uc, &ue}) x.insert(x.end(), t->data().begin(), t->data().end());
    const int idx = -2 + net.cfg.clip;
    for (int j = 0; j < net.cfg.d_r; ++j) x.push_back(net.pos_table.at(idx, j));
    std::vector<double> ph(net.cfg.d_p);
    for (int i = 0; i < net.cfg.d_p; ++i) {
        double acc = net.b_p.at(i);
        for (std::size_t j = 0; j < x.size(); ++j) acc += net.W_p.at(i, static_cast<int>(j)) * x[j];
        ph[i] = std::max(0.0, acc);
    }
    double logits[2];
    for (int k = 0; k < 2; ++k) {
        logits[k] = net.b_hat.at(k);
        for (int i = 0; i < net.cfg.d_p; ++i) logits[k] += net.W_hat.at(k, i) * ph[i];
    }
    const double denom = std::exp(logits[0]) + std::exp(logits[1]);
    CHECK(y.at(0) == doctest::Approx(std::exp(logits[0]) / denom).epsilon(1e-12));
    CHECK(y.at(1) == doctest::Approx(std::exp(logits[1]) / denom).epsilon(1e-12));
}

TEST_CASE("decode_pairs thresholds at 0.5") {
    std::vector<kg::CandidatePair> cands = {
        {0, 1, 1, kg::Provenance::window},
        {2, 3, 1, kg::Provenance::window},
        {1, 5, 4, kg::Provenance::kg},
    };
    std::vector<Tensor> scores = {
        Tensor::from({2}, {0.4, 0.6}),
        Tensor::from({2}, {0.5, 0.5}),
        Tensor::from({2}, {0.2, 0.8}),
    };
    auto pairs = decode_pairs(cands, scores);
    CHECK(pairs == std::set<corpus::Pair>{{0, 1}, {1, 5}});

    std::vector<Tensor> low = {Tensor::from({2}, {0.9, 0.1}), Tensor::from({2}, {0.6, 0.4}),
                               Tensor::from({2}, {0.51, 0.49})};
    CHECK(decode_pairs(cands, low).empty());
}

TEST_CASE("gradient check through encode_pairs + score_pair") {
    std::mt19937_64 rng(6);
    ModelParams params;
    auto cfg = tiny_cfg(1);
    cfg.d_in = 4;  // exercises the input projection
    PairNet net = PairNet::create(params, cfg, rng);
    params.add("x0", Tensor::uniform({4}, -1.0, 1.0, rng));
    params.add("x1", Tensor::uniform({4}, -1.0, 1.0, rng));
    params.add("uc", Tensor::uniform({3}, -1.0, 1.0, rng));
    params.add("ue", Tensor::uniform({3}, -1.0, 1.0, rng));

    auto forward = [&] {
        Tape tape;
        PairNet n = PairNet::bind(params, cfg);
        auto enc = n.encode_pairs(tape, {params.get("x0"), params.get("x1")});
        Tensor loss = Tensor::scalar(0.0);
        for (std::size_t i = 0; i < enc.size(); ++i) {
            Tensor y = n.score_pair(tape, enc[i], params.get("uc"), params.get("ue"),
                                    static_cast<int>(i) - 1);
            Tensor ly = num::log(tape, num::clamp(tape, y, 1e-12, 1.0));
            loss = num::add(tape, loss, num::sum(tape, num::mul(tape, ly, ly)));
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

TEST_CASE("full-scale config builds with exact shapes") {
    std::mt19937_64 rng(7);
    ModelParams params;
    PairNetConfig cfg;
    cfg.d_in = 800;
    cfg.d_m = 400;
    cfg.heads = 4;
    cfg.layers = 2;
    cfg.d_ff = 800;
    cfg.d_l = 50;
    cfg.d_r = 50;
    cfg.clip = 10;
    cfg.d_p = 100;
    PairNet net = PairNet::create(params, cfg, rng);
    CHECK(net.W_in.shape() == std::vector<int>{800, 400});
    CHECK(net.layers.size() == 2);
    CHECK(net.layers[0].mha.Wq.shape() == std::vector<int>{400, 400});
    CHECK(net.layers[0].ffn.W1.shape() == std::vector<int>{400, 800});
    CHECK(net.pos_table.shape() == std::vector<int>{21, 50});
    CHECK(net.W_p.shape() == std::vector<int>{100, 400 + 2 * 50 + 50});
}

TEST_CASE("indivisible head count is rejected") {
    std::mt19937_64 rng(8);
    ModelParams params;
    auto cfg = tiny_cfg(1, 4);  // d_m = 6 not divisible by 4
    CHECK_THROWS_AS(PairNet::create(params, cfg, rng), ConfigError);
}
