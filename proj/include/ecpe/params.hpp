#pragma once

#include <map>
#include <string>
#include <vector>

#include "ecpe/tensor.hpp"

namespace ecpe::num {

// Named registry of trainable leaves. Registration order is preserved so
// optimizer passes and checkpoints are deterministic.
class ModelParams {
  public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

    // Flat binary checkpoint; round-trips bit-exactly.
    void save(const std::string& path) const;
    static ModelParams load(const std::string& path);

  private:
    std::map<std::string, Tensor> by_name_;
    std::vector<std::string> order_;
};

// Sum of squared entries over every registered parameter, biases included.
Tensor l2_penalty(Tape& tape, const ModelParams& params);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

// One bias-corrected Adam update, reading gradients accumulated on the
// parameter nodes. Every registered parameter must carry a gradient.
void adam_step(ModelParams& params, AdamState& state);

// Scales all parameter gradients so their global norm is at most max_norm.
void clip_grad_norm(ModelParams& params, double max_norm);

}  // namespace ecpe::num
