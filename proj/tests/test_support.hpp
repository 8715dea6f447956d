#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

#include "scgan/nn/gradcheck.hpp"
#include "scgan/nn/network.hpp"

namespace scgan::test_support {

/// Gaussian tensor whose entries stay at least `margin` away from zero (activation kinks).
template <typename T>
nn::Tensor<T> random_input(const nn::Shape& shape, std::uint64_t seed, double margin = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    nn::Tensor<T> t(shape);
    for (auto& v : t.data()) {
        double x = normal(rng);
        while (std::abs(x) < margin) x = normal(rng);
        v = static_cast<T>(x);
    }
    return t;
}

/// One representative small configuration per layer kind, used by the gradient suites.
struct GradCase {
    const char* label;
    nn::LayerSpec spec;
    nn::Shape input;
    double kink_margin;
};

inline std::vector<GradCase> gradient_cases() {
    using nn::LayerSpec;
    return {
        {"dense", LayerSpec::dense(6, 5), {4, 6}, 0.0},
        {"conv2d", LayerSpec::conv2d(2, 3, 6, 6), {3, 2, 6, 6}, 0.0},
        {"conv_transpose2d", LayerSpec::conv_transpose2d(3, 2, 3, 3), {3, 3, 3, 3}, 0.0},
        {"batch_norm_dense", LayerSpec::batch_norm(5), {8, 5}, 0.0},
        {"batch_norm_conv", LayerSpec::batch_norm(3), {8, 3, 2, 2}, 0.0},
        {"relu", LayerSpec::act(nn::Activation::relu), {4, 7}, 1e-2},
        {"leaky_relu", LayerSpec::act(nn::Activation::leaky_relu, 0.2), {4, 7}, 1e-2},
        {"sigmoid", LayerSpec::act(nn::Activation::sigmoid), {4, 7}, 0.0},
        {"linear", LayerSpec::act(nn::Activation::linear), {4, 7}, 0.0},
        {"max_pool2d", LayerSpec::max_pool2d(2, 4, 4), {2, 2, 4, 4}, 0.0},
    };
}

/// Runs the finite-difference check for one case; weights drawn at a scale where
/// gradients are O(1) so that f32 central differences are meaningful.
template <typename T>
nn::GradCheckReport check_case(const GradCase& c, std::uint64_t seed, double tolerance, double h) {
    std::mt19937_64 rng(seed);
    nn::Layer<T> layer = nn::make_layer<T>(c.spec, "l.", nn::Init{&rng, 0.5});
    auto input = random_input<T>(c.input, seed * 7919 + 13, c.kink_margin);
    if (c.spec.kind == nn::LayerKind::max_pool2d) {
        // Distinct values per window so the argmax is stable under +-h.
        std::vector<std::size_t> order(input.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < order.size(); ++i) input[order[i]] = static_cast<T>(0.1 * i);
    }
    return std::visit([&](auto& l) { return nn::finite_difference_check<T>(l, input, tolerance, h, true, seed); },
                      layer);
}

} // namespace scgan::test_support
