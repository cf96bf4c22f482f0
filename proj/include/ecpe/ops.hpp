#pragma once

#include <random>
#include <vector>

#include "ecpe/tensor.hpp"

namespace ecpe::num {

// Forward ops. Every op records its backward rule on the tape when any
// input requires a gradient. Shapes must conform exactly; the only
// broadcast supported is adding a vector to each row of a matrix.

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double c);
Tensor add_scalar(Tape& tape, const Tensor& a, double c);

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor matvec(Tape& tape, const Tensor& a, const Tensor& x);  // [m,n]x[n] -> [m]
Tensor vecmat(Tape& tape, const Tensor& x, const Tensor& a);  // [m]x[m,n] -> [n]

Tensor concat(Tape& tape, const std::vector<Tensor>& parts);     // 1-D chain
Tensor stack_rows(Tape& tape, const std::vector<Tensor>& rows);  // n x d
Tensor row(Tape& tape, const Tensor& m, int i);                  // copy of row i
Tensor transpose(Tape& tape, const Tensor& m);                   // 2-D
Tensor slice_cols(Tape& tape, const Tensor& m, int from, int to);  // [from, to)
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);  // same row count

Tensor tanh(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);
Tensor clamp(Tape& tape, const Tensor& x, double lo, double hi);

// Softmax along `axis`; axis 0 for 1-D tensors, rows (axis=1) for 2-D.
Tensor softmax(Tape& tape, const Tensor& x, int axis);

Tensor sum(Tape& tape, const Tensor& x);   // scalar
Tensor mean(Tape& tape, const Tensor& x);  // scalar

// Gathers rows of the embedding matrix; backward scatter-adds.
Tensor lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids);

// Inverted dropout: train mode keeps entries with probability 1-p and
// rescales by 1/(1-p); eval mode is the identity.
Tensor dropout(Tape& tape, const Tensor& x, double p, bool train, std::mt19937_64& rng);

// Row-wise layer normalization with affine gain/bias (both length d).
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

}  // namespace ecpe::num
