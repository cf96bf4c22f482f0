#include "ecpe/params.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "ecpe/error.hpp"
#include "ecpe/ops.hpp"

namespace ecpe::num {

namespace {
constexpr char kMagic[4] = {'E', 'C', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ParseError("checkpoint truncated");
    return v;
}
}  // namespace

Tensor& ModelParams::add(const std::string& name, Tensor t) {
    if (by_name_.count(name)) throw ContractError("duplicate parameter name: " + name);
    t.node()->requires_grad = true;
    auto [it, _] = by_name_.emplace(name, std::move(t));
    order_.push_back(name);
    return it->second;
}

Tensor& ModelParams::get(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ModelParams::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

bool ModelParams::has(const std::string& name) const { return by_name_.count(name) > 0; }

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += by_name_.at(name).size();
    return n;
}

void ModelParams::zero_grad() {
    for (const auto& name : order_) {
        auto& t = by_name_.at(name);
        t.node()->grad.assign(t.size(), 0.0);
    }
}

void ModelParams::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint64_t>(order_.size()));
    for (const auto& name : order_) {
        const Tensor& t = by_name_.at(name);
        write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) write_pod(os, static_cast<std::int64_t>(d));
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw ParseError("write failure on checkpoint: " + path);
}

ModelParams ModelParams::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(kMagic, 4))
        throw ParseError("bad checkpoint magic in " + path);
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion) throw ParseError("unsupported checkpoint version");
    const auto count = read_pod<std::uint64_t>(is);
    ModelParams out;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint32_t>(is);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_pod<std::int64_t>(is));
        Tensor t = Tensor::zeros(shape, true);
        is.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!is) throw ParseError("checkpoint truncated in entry " + name);
        out.add(name, std::move(t));
    }
    return out;
}

Tensor l2_penalty(Tape& tape, const ModelParams& params) {
    if (params.size() == 0) throw ContractError("l2_penalty over empty parameter registry");
    Tensor total = Tensor::scalar(0.0);
    for (const auto& name : params.names()) {
        const Tensor& p = params.get(name);
        total = add(tape, total, sum(tape, mul(tape, p, p)));
    }
    return total;
}

void adam_step(ModelParams& params, AdamState& state) {
    for (const auto& name : params.names()) {
        Tensor& p = params.get(name);
        if (p.grad().size() != p.size())
            throw ContractError("adam_step: missing gradient for parameter " + name);
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const auto& name : params.names()) {
        Tensor& p = params.get(name);
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.size() != p.size()) m.assign(p.size(), 0.0);
        if (v.size() != p.size()) v.assign(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad()[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.data()[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void clip_grad_norm(ModelParams& params, double max_norm) {
    double sq = 0.0;
    for (const auto& name : params.names())
        for (double g : params.get(name).grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (const auto& name : params.names())
        for (double& g : params.get(name).grad()) g *= s;
}

}  // namespace ecpe::num
