#include "ecpe/gradcheck.hpp"

#include <cmath>

#include "ecpe/error.hpp"

namespace ecpe::num {

GradCheckResult check_gradients(ModelParams& params, const std::function<double()>& loss_fn,
                                double step) {
    GradCheckResult res;
    for (const auto& name : params.names()) {
        Tensor& p = params.get(name);
        if (p.grad().size() != p.size())
            throw ContractError("check_gradients: no gradient stored for " + name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.data()[i];
            p.data()[i] = saved + step;
            const double f_plus = loss_fn();
            p.data()[i] = saved - step;
            const double f_minus = loss_fn();
            p.data()[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * step);
            const double analytic = p.grad()[i];
            const double denom = std::max(1.0, std::abs(analytic) + std::abs(numeric));
            const double rel = std::abs(analytic - numeric) / denom;
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = name;
                res.worst_index = i;
            }
        }
    }
    return res;
}

}  // namespace ecpe::num
