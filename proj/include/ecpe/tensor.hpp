#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace ecpe::num {

// Storage node shared by tensor handles. Gradients accumulate here during
// a backward pass; `requires_grad` marks trainable leaves and everything
// downstream of them.
struct TensorNode {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;

    std::size_t size() const { return value.size(); }
    void ensure_grad();
};

// Value-semantics handle over a shared node. All forward ops live in
// ops.hpp and take the tape they may record on.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double fill, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor uniform(std::vector<int> shape, double lo, double hi,
                          std::mt19937_64& rng, bool requires_grad = false);

    bool valid() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    int rows() const { return node_->shape.at(0); }
    int cols() const { return node_->shape.at(1); }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }

    double item() const;
    double at(int i) const { return node_->value.at(static_cast<std::size_t>(i)); }
    double at(int i, int j) const;

    std::shared_ptr<TensorNode> node() const { return node_; }

  private:
    std::shared_ptr<TensorNode> node_;
};

std::string shape_str(const std::vector<int>& shape);
bool same_shape(const Tensor& a, const Tensor& b);

// Ordered record of backward closures. Ops append when any input requires
// a gradient; backward() replays in reverse. Single-threaded by contract.
class Tape {
  public:
    void record(std::function<void()> backward_fn) {
        ops_.push_back(std::move(backward_fn));
    }

    // Seeds d(loss)/d(loss) = 1 and propagates through every recorded op
    // in reverse order. Loss must be scalar.
    void backward(const Tensor& loss);

    std::size_t size() const { return ops_.size(); }
    void clear() { ops_.clear(); }

  private:
    std::vector<std::function<void()>> ops_;
};

}  // namespace ecpe::num
