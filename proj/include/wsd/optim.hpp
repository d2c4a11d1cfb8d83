#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wsd/encoder.hpp"

namespace wsd {

struct OptimConfig {
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

// One trainable tensor paired with its gradient. The name keys the moment
// accumulators, so it must be stable across steps.
struct ParamSlot {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
};

struct AdamWState {
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    std::map<std::string, Moments> moments;
    std::uint64_t step = 0;
};

// Bias-corrected adaptive-moment update followed by decoupled weight decay
// (theta -= lr * wd * theta, applied to the parameter directly, not through
// the gradient). Rejects non-finite gradients before touching any parameter.
// Zeroes every slot's gradient afterwards.
void adamw_step(const std::vector<ParamSlot>& params, AdamWState& state, const OptimConfig& cfg);

// Slots for the trainable (context-side) encoder parameters.
std::vector<ParamSlot> encoder_param_slots(EncoderModel& model, GradBuffer& grads);

}  // namespace wsd
