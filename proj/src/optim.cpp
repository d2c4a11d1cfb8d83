#include "wsd/optim.hpp"

#include <cmath>

#include "wsd/errors.hpp"

namespace wsd {

void OptimConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
}

void adamw_step(const std::vector<ParamSlot>& params, AdamWState& state, const OptimConfig& cfg) {
    for (const auto& slot : params) {
        if (slot.value.size() != slot.grad.size()) {
            throw ConfigError("parameter '" + slot.name + "' and its gradient differ in size");
        }
        for (double g : slot.grad) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in parameter '" + slot.name + "'");
            }
        }
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (const auto& slot : params) {
        auto& mom = state.moments[slot.name];
        if (mom.m.size() != slot.value.size()) {
            mom.m.assign(slot.value.size(), 0.0);
            mom.v.assign(slot.value.size(), 0.0);
        }
        for (std::size_t i = 0; i < slot.value.size(); ++i) {
            const double g = slot.grad[i];
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            slot.value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
            slot.value[i] -= cfg.learning_rate * cfg.weight_decay * slot.value[i];
            slot.grad[i] = 0.0;
        }
    }
}

std::vector<ParamSlot> encoder_param_slots(EncoderModel& model, GradBuffer& grads) {
    return {
        {"theta.embeddings", model.theta.embeddings, grads.theta.embeddings},
        {"theta.projection", model.theta.projection, grads.theta.projection},
        {"theta.bias", model.theta.bias, grads.theta.bias},
    };
}

}  // namespace wsd
