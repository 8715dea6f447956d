#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "scgan/nn/layers.hpp"

namespace scgan::nn {

template <typename T>
using Layer = std::variant<Dense<T>, Conv2d<T>, ConvTranspose2d<T>, BatchNorm<T>, ActivationLayer<T>, MaxPool2d<T>>;

/// Builds the concrete layer for a spec. `prefix` namespaces its parameter names.
template <typename T>
Layer<T> make_layer(const LayerSpec& spec, const std::string& prefix, Init init) {
    switch (spec.kind) {
        case LayerKind::dense: return Dense<T>(spec, prefix, init);
        case LayerKind::conv2d: return Conv2d<T>(spec, prefix, init);
        case LayerKind::conv_transpose2d: return ConvTranspose2d<T>(spec, prefix, init);
        case LayerKind::batch_norm: return BatchNorm<T>(spec, prefix, init);
        case LayerKind::activation: return ActivationLayer<T>(spec, prefix, init);
        case LayerKind::max_pool2d: return MaxPool2d<T>(spec, prefix, init);
    }
    throw ConfigError("unknown layer kind");
}

/// Sequential stack of layers with a recorded forward pass for reverse-mode gradients.
template <typename T>
class Network {
public:
    Network() = default;

    Network(const std::vector<LayerSpec>& specs, const std::string& name, std::mt19937_64& rng,
            double weight_std = 0.02)
        : name_(name) {
        layers_.reserve(specs.size());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            layers_.push_back(make_layer<T>(specs[i], name + "." + std::to_string(i) + ".", Init{&rng, weight_std}));
        }
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return layers_.at(i); }
    const Layer<T>& layer(std::size_t i) const { return layers_.at(i); }

    std::vector<LayerSpec> specs() const {
        std::vector<LayerSpec> out;
        for (const auto& l : layers_) out.push_back(std::visit([](const auto& x) { return x.spec(); }, l));
        return out;
    }

    Shape output_shape(Shape input) const {
        for (const auto& l : layers_) input = std::visit([&](const auto& x) { return x.spec().output_shape(input); }, l);
        return input;
    }

    /// Records the pass so that backward() can follow.
    Tensor<T> forward(Tensor<T> x, bool training) {
        for (auto& l : layers_) x = std::visit([&](auto& layer) { return layer.forward(x, training); }, l);
        x.ensure_finite(name_ + " forward output");
        recorded_ = true;
        return x;
    }

    /// Inference with running statistics; touches no recorded state.
    Tensor<T> predict(Tensor<T> x) const {
        for (const auto& l : layers_) x = std::visit([&](const auto& layer) { return layer.predict(x); }, l);
        x.ensure_finite(name_ + " inference output");
        return x;
    }

    /// Accumulates parameter gradients and returns the gradient with respect to the network input.
    Tensor<T> backward(Tensor<T> grad) {
        if (!recorded_) throw StateError("backward on " + name_ + " without a recorded forward pass");
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            grad = std::visit([&](auto& layer) { return layer.backward(grad); }, *it);
        }
        grad.ensure_finite(name_ + " input gradient");
        return grad;
    }

    std::vector<Parameter<T>*> parameters() {
        std::vector<Parameter<T>*> out;
        for (auto& l : layers_)
            for (auto* p : std::visit([](auto& x) { return x.parameters(); }, l)) out.push_back(p);
        return out;
    }

    std::vector<const Parameter<T>*> parameters() const {
        std::vector<const Parameter<T>*> out;
        for (const auto& l : layers_)
            for (const auto* p : std::visit([](const auto& x) { return x.parameters(); }, l)) out.push_back(p);
        return out;
    }

    std::vector<Buffer<T>*> buffers() {
        std::vector<Buffer<T>*> out;
        for (auto& l : layers_)
            for (auto* b : std::visit([](auto& x) { return x.buffers(); }, l)) out.push_back(b);
        return out;
    }

    std::vector<const Buffer<T>*> buffers() const {
        std::vector<const Buffer<T>*> out;
        for (const auto& l : layers_)
            for (const auto* b : std::visit([](const auto& x) { return x.buffers(); }, l)) out.push_back(b);
        return out;
    }

    void zero_grad() {
        for (auto* p : parameters()) {
            p->value.zero_grad();
            p->grad_ready = false;
        }
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto* p : parameters()) n += p->value.size();
        return n;
    }

private:
    std::string name_;
    std::vector<Layer<T>> layers_;
    bool recorded_ = false;
};

} // namespace scgan::nn
