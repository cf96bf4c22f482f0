#pragma once

#include <random>
#include <string>
#include <vector>

#include "ecpe/pairnet.hpp"

namespace ecpe::net {

// PAD distance between clause positions i and j (1-based) for trigger span
// length m: |i - j| - floor(m / 2).
int pad_distance(int i, int j, int m);

struct PaimConfig {
    int d = 0;       // clause representation dim
    int heads = 2;
    int layers = 2;
    int d_ff = 0;    // defaults to 2 * d when zero
    int window = 3;  // relative-distance window W
    int m = 1;       // trigger span length used in the PAD computation
};

// Trainable relative-position bias: one scalar per head per clipped PAD value
// inside the window, plus a single out-of-window scalar per head.
struct BiasTable {
    Tensor g;  // [heads, 2W + 1]
    Tensor b;  // [heads]

    static BiasTable create(ModelParams& params, const std::string& prefix, int heads, int window,
                            std::mt19937_64& rng);
    static BiasTable bind(ModelParams& params, const std::string& prefix);
};

// Per-head [n, n] attention-score bias matrices for a document of n clauses.
// Entry (i, j) is g[clamp(PAD, -W, W) + W] when |i - j| <= W, else b.
std::vector<Tensor> position_bias(Tape& tape, const BiasTable& table, int n, int window, int m);

struct PaimLayer {
    TransformerLayer core;
    BiasTable bias;

    static PaimLayer create(ModelParams& params, const std::string& prefix, const PaimConfig& cfg,
                            std::mt19937_64& rng);
    static PaimLayer bind(ModelParams& params, const std::string& prefix, const PaimConfig& cfg);

    Tensor apply(Tape& tape, const Tensor& H, int window, int m) const;
};

// One position-aware encoder stack. The emotion and cause sides of the model
// each own an independent instance (distinct parameter prefixes).
struct PaimStack {
    PaimConfig cfg;
    std::vector<PaimLayer> layers;

    static PaimStack create(ModelParams& params, const std::string& prefix, const PaimConfig& cfg,
                            std::mt19937_64& rng);
    static PaimStack bind(ModelParams& params, const std::string& prefix, const PaimConfig& cfg);

    Tensor encode(Tape& tape, const Tensor& H) const;  // [n, d] -> [n, d]
};

// Appends the other task's 2-class prediction to a clause representation.
Tensor feedback_concat(Tape& tape, const Tensor& r, const Tensor& y_other);

}  // namespace ecpe::net
