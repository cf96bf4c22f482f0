#include "ecpe/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ecpe/error.hpp"

namespace ecpe::num {

namespace {

using Node = std::shared_ptr<TensorNode>;

Tensor make_output(std::vector<int> shape, bool requires_grad) {
    auto t = Tensor::zeros(std::move(shape), requires_grad);
    if (requires_grad) t.node()->ensure_grad();
    return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!same_shape(a, b))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
    return a.shape().size() == 2 && b.shape().size() == 1 && a.shape()[1] == b.shape()[0];
}

// Elementwise unary op helper; dfdx receives the *output* value.
template <typename Fwd, typename Bwd>
Tensor unary(Tape& tape, const Tensor& x, Fwd fwd, Bwd grad_from) {
    Tensor out = make_output(x.shape(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = fwd(x.data()[i]);
    if (x.requires_grad()) {
        Node xi = x.node(), o = out.node();
        tape.record([xi, o, grad_from] {
            xi->ensure_grad();
            for (std::size_t i = 0; i < xi->value.size(); ++i)
                xi->grad[i] += o->grad[i] * grad_from(xi->value[i], o->value[i]);
        });
    }
    return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    if (is_row_broadcast(a, b)) {
        const int m = a.rows(), n = a.cols();
        Tensor out = make_output(a.shape(), a.requires_grad() || b.requires_grad());
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                out.data()[static_cast<std::size_t>(i) * n + j] =
                    a.data()[static_cast<std::size_t>(i) * n + j] + b.data()[j];
        if (out.requires_grad()) {
            Node an = a.node(), bn = b.node(), o = out.node();
            tape.record([an, bn, o, m, n] {
                if (an->requires_grad) {
                    an->ensure_grad();
                    for (std::size_t i = 0; i < an->value.size(); ++i) an->grad[i] += o->grad[i];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j)
                            bn->grad[j] += o->grad[static_cast<std::size_t>(i) * n + j];
                }
            });
        }
        return out;
    }
    require_same_shape(a, b, "add");
    Tensor out = make_output(a.shape(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (out.requires_grad()) {
        Node an = a.node(), bn = b.node(), o = out.node();
        tape.record([an, bn, o] {
            for (const Node& nd : {an, bn}) {
                if (nd->requires_grad) {
                    nd->ensure_grad();
                    for (std::size_t i = 0; i < nd->value.size(); ++i) nd->grad[i] += o->grad[i];
                }
            }
        });
    }
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = make_output(a.shape(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    if (out.requires_grad()) {
        Node an = a.node(), bn = b.node(), o = out.node();
        tape.record([an, bn, o] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->value.size(); ++i) an->grad[i] += o->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->value.size(); ++i) bn->grad[i] -= o->grad[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = make_output(a.shape(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (out.requires_grad()) {
        Node an = a.node(), bn = b.node(), o = out.node();
        tape.record([an, bn, o] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->value.size(); ++i)
                    an->grad[i] += o->grad[i] * bn->value[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->value.size(); ++i)
                    bn->grad[i] += o->grad[i] * an->value[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
    return unary(tape, a, [c](double v) { return v * c; },
                 [c](double, double) { return c; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double c) {
    return unary(tape, a, [c](double v) { return v + c; },
                 [](double, double) { return 1.0; });
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = make_output({m, n}, a.requires_grad() || b.requires_grad());
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = a.data()[static_cast<std::size_t>(i) * k + p];
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j)
                out.data()[static_cast<std::size_t>(i) * n + j] +=
                    av * b.data()[static_cast<std::size_t>(p) * n + j];
        }
    if (out.requires_grad()) {
        Node an = a.node(), bn = b.node(), o = out.node();
        tape.record([an, bn, o, m, k, n] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j)
                            acc += o->grad[static_cast<std::size_t>(i) * n + j] *
                                   bn->value[static_cast<std::size_t>(p) * n + j];
                        an->grad[static_cast<std::size_t>(i) * k + p] += acc;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i)
                            acc += an->value[static_cast<std::size_t>(i) * k + p] *
                                   o->grad[static_cast<std::size_t>(i) * n + j];
                        bn->grad[static_cast<std::size_t>(p) * n + j] += acc;
                    }
            }
        });
    }
    return out;
}

Tensor matvec(Tape& tape, const Tensor& a, const Tensor& x) {
    if (a.shape().size() != 2 || x.shape().size() != 1 || a.cols() != x.shape()[0])
        throw DimensionError("matvec: incompatible shapes " + shape_str(a.shape()) + " x " +
                             shape_str(x.shape()));
    const int m = a.rows(), n = a.cols();
    Tensor out = make_output({m}, a.requires_grad() || x.requires_grad());
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += a.data()[static_cast<std::size_t>(i) * n + j] * x.data()[j];
        out.data()[i] = acc;
    }
    if (out.requires_grad()) {
        Node an = a.node(), xn = x.node(), o = out.node();
        tape.record([an, xn, o, m, n] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        an->grad[static_cast<std::size_t>(i) * n + j] += o->grad[i] * xn->value[j];
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        xn->grad[j] += o->grad[i] * an->value[static_cast<std::size_t>(i) * n + j];
            }
        });
    }
    return out;
}

Tensor vecmat(Tape& tape, const Tensor& x, const Tensor& a) {
    if (a.shape().size() != 2 || x.shape().size() != 1 || a.rows() != x.shape()[0])
        throw DimensionError("vecmat: incompatible shapes " + shape_str(x.shape()) + " x " +
                             shape_str(a.shape()));
    const int m = a.rows(), n = a.cols();
    Tensor out = make_output({n}, a.requires_grad() || x.requires_grad());
    for (int i = 0; i < m; ++i) {
        const double xv = x.data()[i];
        if (xv == 0.0) continue;
        for (int j = 0; j < n; ++j)
            out.data()[j] += xv * a.data()[static_cast<std::size_t>(i) * n + j];
    }
    if (out.requires_grad()) {
        Node an = a.node(), xn = x.node(), o = out.node();
        tape.record([an, xn, o, m, n] {
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        xn->grad[i] += o->grad[j] * an->value[static_cast<std::size_t>(i) * n + j];
            }
            if (an->requires_grad) {
                an->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        an->grad[static_cast<std::size_t>(i) * n + j] += xn->value[i] * o->grad[j];
            }
        });
    }
    return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    bool rg = false;
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.shape().size() != 1)
            throw DimensionError("concat expects 1-D parts, got " + shape_str(p.shape()));
        total += p.shape()[0];
        rg = rg || p.requires_grad();
    }
    Tensor out = make_output({total}, rg);
    int off = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
        off += p.shape()[0];
    }
    if (rg) {
        std::vector<Node> nodes;
        for (const Tensor& p : parts) nodes.push_back(p.node());
        Node o = out.node();
        tape.record([nodes, o] {
            std::size_t off = 0;
            for (const Node& nd : nodes) {
                if (nd->requires_grad) {
                    nd->ensure_grad();
                    for (std::size_t i = 0; i < nd->value.size(); ++i)
                        nd->grad[i] += o->grad[off + i];
                }
                off += nd->value.size();
            }
        });
    }
    return out;
}

Tensor stack_rows(Tape& tape, const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ContractError("stack_rows of zero tensors");
    const int d = rows[0].shape().size() == 1 ? rows[0].shape()[0] : -1;
    if (d < 0) throw DimensionError("stack_rows expects 1-D rows");
    bool rg = false;
    for (const Tensor& r : rows) {
        if (r.shape() != rows[0].shape())
            throw DimensionError("stack_rows: ragged rows " + shape_str(r.shape()) + " vs " +
                                 shape_str(rows[0].shape()));
        rg = rg || r.requires_grad();
    }
    const int n = static_cast<int>(rows.size());
    Tensor out = make_output({n, d}, rg);
    for (int i = 0; i < n; ++i)
        std::copy(rows[i].data().begin(), rows[i].data().end(),
                  out.data().begin() + static_cast<std::size_t>(i) * d);
    if (rg) {
        std::vector<Node> nodes;
        for (const Tensor& r : rows) nodes.push_back(r.node());
        Node o = out.node();
        tape.record([nodes, o, d] {
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (!nodes[i]->requires_grad) continue;
                nodes[i]->ensure_grad();
                for (int j = 0; j < d; ++j)
                    nodes[i]->grad[j] += o->grad[i * static_cast<std::size_t>(d) + j];
            }
        });
    }
    return out;
}

Tensor row(Tape& tape, const Tensor& m, int i) {
    if (m.shape().size() != 2) throw DimensionError("row: expects 2-D tensor");
    if (i < 0 || i >= m.rows()) throw ContractError("row index out of range");
    const int d = m.cols();
    Tensor out = make_output({d}, m.requires_grad());
    std::copy(m.data().begin() + static_cast<std::size_t>(i) * d,
              m.data().begin() + static_cast<std::size_t>(i + 1) * d, out.data().begin());
    if (m.requires_grad()) {
        Node mn = m.node(), o = out.node();
        tape.record([mn, o, i, d] {
            mn->ensure_grad();
            for (int j = 0; j < d; ++j) mn->grad[static_cast<std::size_t>(i) * d + j] += o->grad[j];
        });
    }
    return out;
}

Tensor transpose(Tape& tape, const Tensor& m) {
    if (m.shape().size() != 2) throw DimensionError("transpose: expects 2-D tensor");
    const int r = m.rows(), c = m.cols();
    Tensor out = make_output({c, r}, m.requires_grad());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out.data()[static_cast<std::size_t>(j) * r + i] =
                m.data()[static_cast<std::size_t>(i) * c + j];
    if (m.requires_grad()) {
        Node mn = m.node(), o = out.node();
        tape.record([mn, o, r, c] {
            mn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    mn->grad[static_cast<std::size_t>(i) * c + j] +=
                        o->grad[static_cast<std::size_t>(j) * r + i];
        });
    }
    return out;
}

Tensor slice_cols(Tape& tape, const Tensor& m, int from, int to) {
    if (m.shape().size() != 2) throw DimensionError("slice_cols: expects 2-D tensor");
    if (from < 0 || to > m.cols() || from >= to)
        throw ContractError("slice_cols: bad range [" + std::to_string(from) + ", " +
                            std::to_string(to) + ") for " + std::to_string(m.cols()) + " columns");
    const int r = m.rows(), c = m.cols(), w = to - from;
    Tensor out = make_output({r, w}, m.requires_grad());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < w; ++j)
            out.data()[static_cast<std::size_t>(i) * w + j] =
                m.data()[static_cast<std::size_t>(i) * c + from + j];
    if (m.requires_grad()) {
        Node mn = m.node(), o = out.node();
        tape.record([mn, o, r, c, w, from] {
            mn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < w; ++j)
                    mn->grad[static_cast<std::size_t>(i) * c + from + j] +=
                        o->grad[static_cast<std::size_t>(i) * w + j];
        });
    }
    return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols of zero tensors");
    const int r = parts[0].shape().size() == 2 ? parts[0].rows() : -1;
    if (r < 0) throw DimensionError("concat_cols: expects 2-D parts");
    bool rg = false;
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.shape().size() != 2 || p.rows() != r)
            throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = make_output({r, total}, rg);
    int off = 0;
    for (const Tensor& p : parts) {
        const int w = p.cols();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < w; ++j)
                out.data()[static_cast<std::size_t>(i) * total + off + j] =
                    p.data()[static_cast<std::size_t>(i) * w + j];
        off += w;
    }
    if (rg) {
        std::vector<Node> nodes;
        for (const Tensor& p : parts) nodes.push_back(p.node());
        Node o = out.node();
        tape.record([nodes, o, r, total] {
            int off = 0;
            for (const Node& nd : nodes) {
                const int w = static_cast<int>(nd->value.size()) / r;
                if (nd->requires_grad) {
                    nd->ensure_grad();
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < w; ++j)
                            nd->grad[static_cast<std::size_t>(i) * w + j] +=
                                o->grad[static_cast<std::size_t>(i) * total + off + j];
                }
                off += w;
            }
        });
    }
    return out;
}

Tensor tanh(Tape& tape, const Tensor& x) {
    return unary(tape, x, [](double v) { return std::tanh(v); },
                 [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    return unary(tape, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                 [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary(tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(Tape& tape, const Tensor& x) {
    return unary(tape, x, [](double v) { return std::exp(v); },
                 [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
    return unary(tape, x, [](double v) { return std::log(v); },
                 [](double v, double) { return 1.0 / v; });
}

Tensor clamp(Tape& tape, const Tensor& x, double lo, double hi) {
    return unary(tape, x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
                 [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor softmax(Tape& tape, const Tensor& x, int axis) {
    const auto& shape = x.shape();
    int n_rows, n_cols;
    if (shape.size() == 1) {
        if (axis != 0) throw ConfigError("softmax: axis must be 0 for 1-D input");
        n_rows = 1;
        n_cols = shape[0];
    } else if (shape.size() == 2) {
        if (axis != 1) throw ConfigError("softmax: only row softmax (axis=1) supported for 2-D");
        n_rows = shape[0];
        n_cols = shape[1];
    } else {
        throw DimensionError("softmax: expects 1-D or 2-D input, got " + shape_str(shape));
    }
    if (n_cols == 0) throw ConfigError("softmax over empty axis");
    Tensor out = make_output(shape, x.requires_grad());
    for (int r = 0; r < n_rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * n_cols;
        double mx = x.data()[base];
        for (int j = 1; j < n_cols; ++j) mx = std::max(mx, x.data()[base + j]);
        double denom = 0.0;
        for (int j = 0; j < n_cols; ++j) {
            out.data()[base + j] = std::exp(x.data()[base + j] - mx);
            denom += out.data()[base + j];
        }
        for (int j = 0; j < n_cols; ++j) out.data()[base + j] /= denom;
    }
    if (x.requires_grad()) {
        Node xn = x.node(), o = out.node();
        tape.record([xn, o, n_rows, n_cols] {
            xn->ensure_grad();
            for (int r = 0; r < n_rows; ++r) {
                const std::size_t base = static_cast<std::size_t>(r) * n_cols;
                double dot = 0.0;
                for (int j = 0; j < n_cols; ++j) dot += o->grad[base + j] * o->value[base + j];
                for (int j = 0; j < n_cols; ++j)
                    xn->grad[base + j] += o->value[base + j] * (o->grad[base + j] - dot);
            }
        });
    }
    return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
    Tensor out = make_output({1}, x.requires_grad());
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    out.data()[0] = acc;
    if (x.requires_grad()) {
        Node xn = x.node(), o = out.node();
        tape.record([xn, o] {
            xn->ensure_grad();
            for (std::size_t i = 0; i < xn->value.size(); ++i) xn->grad[i] += o->grad[0];
        });
    }
    return out;
}

Tensor mean(Tape& tape, const Tensor& x) {
    const double inv = 1.0 / static_cast<double>(x.size());
    return scale(tape, sum(tape, x), inv);
}

Tensor lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
    if (table.shape().size() != 2) throw DimensionError("lookup: table must be 2-D");
    const int d = table.cols();
    const int n = static_cast<int>(ids.size());
    for (int id : ids)
        if (id < 0 || id >= table.rows())
            throw ContractError("lookup: index " + std::to_string(id) + " out of range [0, " +
                                std::to_string(table.rows()) + ")");
    Tensor out = make_output({n, d}, table.requires_grad());
    for (int i = 0; i < n; ++i)
        std::copy(table.data().begin() + static_cast<std::size_t>(ids[i]) * d,
                  table.data().begin() + static_cast<std::size_t>(ids[i] + 1) * d,
                  out.data().begin() + static_cast<std::size_t>(i) * d);
    if (table.requires_grad()) {
        Node tn = table.node(), o = out.node();
        tape.record([tn, o, ids, d] {
            tn->ensure_grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (int j = 0; j < d; ++j)
                    tn->grad[static_cast<std::size_t>(ids[i]) * d + j] +=
                        o->grad[i * static_cast<std::size_t>(d) + j];
        });
    }
    return out;
}

Tensor dropout(Tape& tape, const Tensor& x, double p, bool train, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0, 1)");
    if (!train || p == 0.0) return x;
    const double keep = 1.0 - p;
    std::bernoulli_distribution drop(p);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    Tensor out = make_output(x.shape(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) {
        (*mask)[i] = drop(rng) ? 0.0 : 1.0 / keep;
        out.data()[i] = x.data()[i] * (*mask)[i];
    }
    if (x.requires_grad()) {
        Node xn = x.node(), o = out.node();
        tape.record([xn, o, mask] {
            xn->ensure_grad();
            for (std::size_t i = 0; i < xn->value.size(); ++i)
                xn->grad[i] += o->grad[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
    if (x.shape().size() != 2) throw DimensionError("layer_norm: expects 2-D input");
    const int n = x.rows(), d = x.cols();
    if (gain.shape() != std::vector<int>{d} || bias.shape() != std::vector<int>{d})
        throw DimensionError("layer_norm: gain/bias must have length " + std::to_string(d));
    const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    Tensor out = make_output(x.shape(), rg);
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_sigma = std::make_shared<std::vector<double>>(n);
    for (int i = 0; i < n; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += x.data()[base + j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = x.data()[base + j] - mu;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[i] = is;
        for (int j = 0; j < d; ++j) {
            (*xhat)[base + j] = (x.data()[base + j] - mu) * is;
            out.data()[base + j] = gain.data()[j] * (*xhat)[base + j] + bias.data()[j];
        }
    }
    if (rg) {
        Node xn = x.node(), gn = gain.node(), bn = bias.node(), o = out.node();
        tape.record([xn, gn, bn, o, xhat, inv_sigma, n, d] {
            for (int i = 0; i < n; ++i) {
                const std::size_t base = static_cast<std::size_t>(i) * d;
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (int j = 0; j < d; ++j)
                        gn->grad[j] += o->grad[base + j] * (*xhat)[base + j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int j = 0; j < d; ++j) bn->grad[j] += o->grad[base + j];
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    double mean_dy = 0.0, mean_dy_xhat = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double dy = o->grad[base + j] * gn->value[j];
                        mean_dy += dy;
                        mean_dy_xhat += dy * (*xhat)[base + j];
                    }
                    mean_dy /= d;
                    mean_dy_xhat /= d;
                    for (int j = 0; j < d; ++j) {
                        const double dy = o->grad[base + j] * gn->value[j];
                        xn->grad[base + j] +=
                            (*inv_sigma)[i] * (dy - mean_dy - (*xhat)[base + j] * mean_dy_xhat);
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace ecpe::num
