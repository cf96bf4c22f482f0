#pragma once

#include <functional>
#include <string>

#include "ecpe/params.hpp"

namespace ecpe::num {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;

    bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

// Central-difference verification of the gradients currently stored on the
// parameter nodes. `loss_fn` recomputes the forward loss from the current
// parameter values; it is called twice per scalar. Uses only forward
// evaluations, so it is independent of the backward implementation.
// Relative error per scalar: |a - n| / max(1, |a| + |n|).
GradCheckResult check_gradients(ModelParams& params,
                                const std::function<double()>& loss_fn,
                                double step = 1e-5);

}  // namespace ecpe::num
