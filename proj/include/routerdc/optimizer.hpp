#pragma once

#include <vector>

#include "routerdc/params.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

// Decoupled-weight-decay Adam over the full parameter set. Moments are kept in
// double; parameters round back to their float storage after each step.
class AdamW {
public:
    AdamW(std::size_t parameter_count, const TrainConfig& config);

    // One update: params <- params - lr * (m_hat / (sqrt(v_hat) + eps) + wd * params).
    // Aborts on non-finite gradients.
    void step(RouterParameters& params, const GradientBuffer& grads);

    int steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_, weight_decay_;
    int t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace routerdc
