#include "routerdc/optimizer.hpp"

#include <cmath>

namespace routerdc {

AdamW::AdamW(std::size_t parameter_count, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_epsilon),
      weight_decay_(config.weight_decay),
      m_(parameter_count, 0.0),
      v_(parameter_count, 0.0) {}

void AdamW::step(RouterParameters& params, const GradientBuffer& grads) {
    if (!grads.all_finite())
        throw std::runtime_error("AdamW received a non-finite gradient");
    std::vector<double> g = grads.pack();
    if (g.size() != m_.size()) throw ValidationError("gradient size does not match optimizer state");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);

    std::vector<double> theta = pack_parameters(params);
    for (std::size_t i = 0; i < g.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
        double m_hat = m_[i] / bc1;
        double v_hat = v_[i] / bc2;
        theta[i] -= lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * theta[i]);
    }
    unpack_parameters(theta, params);
}

}  // namespace routerdc
