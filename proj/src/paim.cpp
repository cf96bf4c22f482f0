#include "ecpe/paim.hpp"

#include <algorithm>
#include <cmath>

#include "ecpe/error.hpp"
#include "ecpe/ops.hpp"

namespace ecpe::net {

using namespace num;

int pad_distance(int i, int j, int m) {
    if (i < 1 || j < 1 || m < 1)
        throw ContractError("pad_distance: positions and span length must be >= 1");
    return std::abs(i - j) - m / 2;
}

BiasTable BiasTable::create(ModelParams& params, const std::string& prefix, int heads, int window,
                            std::mt19937_64& rng) {
    if (heads < 1 || window < 1) throw ConfigError("bias table: heads and window must be >= 1");
    BiasTable t;
    t.g = params.add(prefix + ".g",
                     Tensor::uniform({heads, 2 * window + 1}, -0.1, 0.1, rng));
    t.b = params.add(prefix + ".b", Tensor::uniform({heads}, -0.1, 0.1, rng));
    return t;
}

BiasTable BiasTable::bind(ModelParams& params, const std::string& prefix) {
    return BiasTable{params.get(prefix + ".g"), params.get(prefix + ".b")};
}

std::vector<Tensor> position_bias(Tape& tape, const BiasTable& table, int n, int window, int m) {
    const int heads = table.b.shape()[0];
    if (table.g.cols() != 2 * window + 1)
        throw DimensionError("position_bias: table length " + std::to_string(table.g.cols()) +
                             " vs window " + std::to_string(window));
    if (n < 1) throw ContractError("position_bias: need at least one clause");
    const bool rg = table.g.requires_grad();
    // index >= 0: in-window entry of g; index < 0: the out-of-window scalar
    std::vector<int> index(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (std::abs(i - j) <= window) {
                int pad = pad_distance(i + 1, j + 1, m);
                pad = std::clamp(pad, -window, window);
                index[static_cast<std::size_t>(i) * n + j] = pad + window;
            } else {
                index[static_cast<std::size_t>(i) * n + j] = -1;
            }
        }
    std::vector<Tensor> out;
    for (int h = 0; h < heads; ++h) {
        Tensor bias = Tensor::zeros({n, n}, rg);
        if (rg) bias.node()->ensure_grad();
        for (std::size_t k = 0; k < index.size(); ++k)
            bias.data()[k] = index[k] >= 0 ? table.g.at(h, index[k]) : table.b.at(h);
        if (rg) {
            auto gn = table.g.node();
            auto bn = table.b.node();
            auto on = bias.node();
            const int cols = table.g.cols();
            tape.record([gn, bn, on, index, h, cols] {
                gn->ensure_grad();
                bn->ensure_grad();
                for (std::size_t k = 0; k < index.size(); ++k) {
                    if (index[k] >= 0)
                        gn->grad[static_cast<std::size_t>(h) * cols + index[k]] += on->grad[k];
                    else
                        bn->grad[h] += on->grad[k];
                }
            });
        }
        out.push_back(bias);
    }
    return out;
}

PaimLayer PaimLayer::create(ModelParams& params, const std::string& prefix, const PaimConfig& cfg,
                            std::mt19937_64& rng) {
    const int d_ff = cfg.d_ff > 0 ? cfg.d_ff : 2 * cfg.d;
    PaimLayer l;
    l.core = TransformerLayer::create(params, prefix, cfg.d, cfg.heads, d_ff, rng);
    l.bias = BiasTable::create(params, prefix + ".posbias", cfg.heads, cfg.window, rng);
    return l;
}

PaimLayer PaimLayer::bind(ModelParams& params, const std::string& prefix, const PaimConfig& cfg) {
    PaimLayer l;
    l.core = TransformerLayer::bind(params, prefix, cfg.heads);
    l.bias = BiasTable::bind(params, prefix + ".posbias");
    return l;
}

Tensor PaimLayer::apply(Tape& tape, const Tensor& H, int window, int m) const {
    return core.apply(tape, H, position_bias(tape, bias, H.rows(), window, m));
}

PaimStack PaimStack::create(ModelParams& params, const std::string& prefix, const PaimConfig& cfg,
                            std::mt19937_64& rng) {
    if (cfg.d < 1 || cfg.layers < 0) throw ConfigError("paim: bad dims");
    PaimStack s;
    s.cfg = cfg;
    for (int l = 0; l < cfg.layers; ++l)
        s.layers.push_back(PaimLayer::create(params, prefix + ".l" + std::to_string(l), cfg, rng));
    return s;
}

PaimStack PaimStack::bind(ModelParams& params, const std::string& prefix, const PaimConfig& cfg) {
    PaimStack s;
    s.cfg = cfg;
    for (int l = 0; l < cfg.layers; ++l)
        s.layers.push_back(PaimLayer::bind(params, prefix + ".l" + std::to_string(l), cfg));
    return s;
}

Tensor PaimStack::encode(Tape& tape, const Tensor& H) const {
    if (H.shape().size() != 2 || H.cols() != cfg.d)
        throw DimensionError("paim: input " + shape_str(H.shape()) + " vs dim " +
                             std::to_string(cfg.d));
    Tensor X = H;
    for (const auto& l : layers) X = l.apply(tape, X, cfg.window, cfg.m);
    return X;
}

Tensor feedback_concat(Tape& tape, const Tensor& r, const Tensor& y_other) {
    if (y_other.shape() != std::vector<int>{2})
        throw DimensionError("feedback_concat: prediction must be a 2-class distribution");
    return concat(tape, {r, y_other});
}

}  // namespace ecpe::net
