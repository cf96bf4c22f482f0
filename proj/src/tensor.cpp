#include "ecpe/tensor.hpp"

#include <numeric>
#include <sstream>

#include "ecpe/error.hpp"

namespace ecpe::num {

namespace {
std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}
}  // namespace

void TensorNode::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double fill, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(shape_product(shape), fill);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (shape_product(shape) != data.size())
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, std::mt19937_64& rng,
                       bool requires_grad) {
    std::uniform_real_distribution<double> dist(lo, hi);
    auto t = zeros(std::move(shape), requires_grad);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(int i, int j) const {
    if (node_->shape.size() != 2) throw DimensionError("2-index access on tensor of shape " + shape_str(shape()));
    return node_->value.at(static_cast<std::size_t>(i) * node_->shape[1] + j);
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool same_shape(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape();
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) throw ContractError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    loss.node()->ensure_grad();
    loss.node()->grad[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

}  // namespace ecpe::num
