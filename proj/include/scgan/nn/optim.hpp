#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "scgan/error.hpp"
#include "scgan/nn/tensor.hpp"

namespace scgan::nn {

struct RmsPropConfig {
    double learning_rate = 5e-5;
    double decay = 0.9;
    double epsilon = 1e-8;
};

/// r <- decay*r + (1-decay)*g^2 ; w <- w - lr*g/(sqrt(r)+eps), then clears the gradients.
template <typename T>
void rmsprop_step(std::span<Parameter<T>* const> params, const RmsPropConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(cfg.decay >= 0.0 && cfg.decay < 1.0)) throw ConfigError("RMSProp decay must be in [0,1)");
    if (!(cfg.epsilon >= 0.0)) throw ConfigError("RMSProp epsilon must be non-negative");
    for (const Parameter<T>* p : params) {
        if (!p->grad_ready) throw StateError("parameter " + p->name + " has no gradient for the optimizer step");
    }
    for (Parameter<T>* p : params) {
        auto w = p->value.data();
        auto g = p->value.grad();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double r = cfg.decay * p->rms_accumulator[i] + (1.0 - cfg.decay) * gi * gi;
            p->rms_accumulator[i] = static_cast<T>(r);
            const double denom = std::sqrt(r) + cfg.epsilon;
            if (denom > 0.0) w[i] = static_cast<T>(w[i] - cfg.learning_rate * gi / denom);
        }
        p->value.ensure_finite(p->name);
        p->value.zero_grad();
        p->grad_ready = false;
    }
}

/// Clamps every weight entry into [-bound, bound].
template <typename T>
void clip_weights(std::span<Parameter<T>* const> params, double bound) {
    if (!(bound > 0.0)) throw ConfigError("clip bound must be positive");
    const T hi = static_cast<T>(bound);
    for (Parameter<T>* p : params) {
        for (auto& v : p->value.data()) v = std::clamp(v, -hi, hi);
    }
}

template <typename T>
double max_abs_weight(std::span<const Parameter<T>* const> params) {
    double m = 0.0;
    for (const Parameter<T>* p : params)
        for (T v : p->value.data()) m = std::max(m, static_cast<double>(std::abs(v)));
    return m;
}

} // namespace scgan::nn
